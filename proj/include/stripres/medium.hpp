#pragma once

#include <utility>
#include <vector>

#include "stripres/common.hpp"

namespace stripres {

// Axis-aligned box contribution to a dielectric profile, in cell coordinates.
struct Rectangle {
  double x1_lo = 0, x1_hi = 0, x2_lo = 0, x2_hi = 0;
  double value = 0;
};

enum class EpsPart { eps0, eps1 };

// Piecewise-constant periodic background eps0 plus compactly supported defect
// eps1; overlapping rectangles add their values.
struct MediumSpec {
  double eps0_background = 1.0;
  std::vector<Rectangle> eps0_rectangles;
  std::vector<Rectangle> eps1_rectangles;

  // Throws ConfigError on: malformed rectangle bounds, eps0 not bounded below
  // by a positive constant, eps1 support touching {x1=0} or {x1=1}, or eps1
  // identically zero.
  void validate() const;
};

// Finite rectangular set of Fourier modes m = 2*pi*(n1, n2) with a fixed
// lexicographic enumeration (n1 major, n2 minor).
struct ModeBasis {
  int n1_min = 0, n1_max = 0, n2_min = 0, n2_max = 0;

  static ModeBasis symmetric(int n1_half, int n2_half) {
    return {-n1_half, n1_half, -n2_half, n2_half};
  }

  int size1() const { return n1_max - n1_min + 1; }
  int size2() const { return n2_max - n2_min + 1; }
  int size() const { return size1() * size2(); }
  int index(int n1, int n2) const { return (n1 - n1_min) * size2() + (n2 - n2_min); }
  std::pair<int, int> at(int idx) const {
    return {n1_min + idx / size2(), n2_min + idx % size2()};
  }
  double m1(int idx) const { return kTwoPi * (n1_min + idx / size2()); }
  double m2(int idx) const { return kTwoPi * (n2_min + idx % size2()); }
  bool edge(int n1, int n2) const {
    return n1 == n1_min || n1 == n1_max || n2 == n2_min || n2 == n2_max;
  }
  bool contains(int n1, int n2) const {
    return n1 >= n1_min && n1 <= n1_max && n2 >= n2_min && n2 <= n2_max;
  }
  bool interior(int n1, int n2) const { return contains(n1, n2) && !edge(n1, n2); }
  bool operator==(const ModeBasis&) const = default;
};

// Closed-form integral of eps over the cell against e^{-i m.x}, m = 2*pi*(q1,q2).
cplx fourier_coefficient(const MediumSpec& spec, EpsPart part, int q1, int q2);

// Matrix of pointwise multiplication by eps in the mode basis:
// entry (row m, col m') = coefficient at m - m'.
MatC convolution_matrix(const MediumSpec& spec, EpsPart part, const ModeBasis& basis);

// Essential supremum of eps0, exact via the rectangle-corner arrangement.
double sup_norm_eps0(const MediumSpec& spec);

// Essential infimum of eps0, same arrangement.
double inf_eps0(const MediumSpec& spec);

// Pointwise value of the profile at cell coordinates (periodic reduction of x
// is the caller's concern); used by grid oracles and the arrangement tests.
double eval_eps(const MediumSpec& spec, EpsPart part, double x1, double x2);

// Exact integral of eps^2 over the cell (for Parseval-type diagnostics).
double l2_norm_sq_eps(const MediumSpec& spec, EpsPart part);

}  // namespace stripres
