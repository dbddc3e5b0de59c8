#pragma once

#include <vector>

#include "stripres/common.hpp"

namespace stripres {

struct CPoint2 {
  cplx k1, k2;
};

// s(m,k) = (m1+k1)^2 + (m2+k2)^2 with complex (non-Hermitian) squares.
inline cplx symbol(double m1, double m2, cplx k1, cplx k2) {
  cplx a = m1 + k1, b = m2 + k2;
  return a * a + b * b;
}
inline cplx symbol(double m1, double m2, const CPoint2& k) {
  return symbol(m1, m2, k.k1, k.k2);
}

// Certified lower bounds on |s(m, xi+i eta)|^2:
//   b1 = [(m2+xi2)^2 - eta1^2]^2 + [(m1+xi1)^2 - eta2^2]^2
//   b2 = 2[(m1+xi1)eta1 + (m2+xi2)eta2]^2
// The index pairing in b1 is the cross pairing; with a = m1+xi1, b = m2+xi2,
//   |s|^2 = (b^2-eta1^2)^2 + (a^2-eta2^2)^2 + 2(ab+eta1 eta2)^2 + 2(a eta1 + b eta2)^2,
// so |s|^2 >= max(b1, b2) identically.
struct HammerBounds {
  double b1, b2;
};
HammerBounds hammer_bounds(double m1, double m2, double xi1, double xi2, double eta1,
                           double eta2);

// Lower bound (2m+3pi+beta)(pi-beta) for
//   min over m2 in 2*pi*Z, xi2 in [pi-beta, pi+beta] of |(m2+xi2)^2 - (m+2pi)^2|.
// Requires beta in (0,pi) and m a nonnegative multiple of 2*pi.
double min_gap(double beta, double m);

// Smallest tau1 = 2*pi*n, n >= 1, with theta*(2*(tau1-2pi)+4pi-theta) >= 2*lambda*eps0_sup.
// Returns 2*pi for lambda <= 0.
double select_tau1(double lambda, double eps0_sup, double theta);

// The union of four vertical lines Re k1 = +-pi/2 +- 2*delta and the horizontal
// segments Im k1 = nu, nu in 2*pi*Z, |nu| <= tau1, Re k1 in [-pi, pi].
struct LinesSet {
  double delta = 0;
  double tau1 = 0;
};
bool lines_contains(cplx k1, const LinesSet& lines, double tol = 1e-9);

// Rectangle with Re in [sign*pi/2 - 2delta, sign*pi/2 + 2delta], Im in [m2-2pi, m2].
struct RectContour {
  int sign = +1;  // +1 or -1
  double m2 = 0;  // in 2*pi*Z
  double delta = 0;
};

// Closed counterclockwise polyline discretization, q_nodes/4 nodes per side
// starting at the bottom-left corner. q_nodes must be a positive multiple of 4.
std::vector<cplx> gamma_contour_points(const RectContour& c, int q_nodes);

// Zero locus of k1 -> s(m, (k1, xi2 + i(pi/2+ell))): for m2 >= 0,
// sign*(pi/2+ell) - m1 - sign*i|m2+xi2|; for m2 < 0 the conjugate-in-Im variant.
cplx free_pole_oracle(double m1, double m2, double xi2, double ell, int sign);

}  // namespace stripres
