#pragma once

#include <vector>

#include "stripres/common.hpp"
#include "stripres/medium.hpp"

namespace stripres {

enum class Axis { x1, x2 };

// Uniformly sampled function on a cell or on a supercell made of whole cells
// stacked along one axis.  `g1`/`g2` are samples per cell; the array holds
// cells1*g1 rows (x1 samples) and cells2*g2 columns (x2 samples).
struct GridFunction {
  int g1 = 0;
  int g2 = 0;
  Eigen::MatrixXcd values;

  int cells(Axis a) const {
    return a == Axis::x1 ? static_cast<int>(values.rows()) / g1
                         : static_cast<int>(values.cols()) / g2;
  }
  static GridFunction zeros(int cells1, int g1, int cells2, int g2);
  double norm() const { return values.norm(); }
};

// Result of the cell-wise Bloch transform: one single-cell slice per node of
// the discrete dual grid k_j = 2*pi*j/L.
struct FloquetField {
  Axis dir = Axis::x1;
  std::vector<GridFunction> slices;
  int L() const { return static_cast<int>(slices.size()); }
};

FloquetField floquet_forward(Axis dir, const GridFunction& f);
GridFunction floquet_inverse(Axis dir, const FloquetField& field);

// Synthesis/analysis between Fourier coefficients on `basis` and one cell of
// grid samples.  Exact round trip requires g1 > 2*max|n1| and g2 > 2*max|n2|.
Eigen::MatrixXcd modes_to_grid(const VecC& coef, const ModeBasis& basis, int g1, int g2);
VecC grid_to_modes(const Eigen::MatrixXcd& cell_values, const ModeBasis& basis);

struct StripCheckResult {
  Eigen::MatrixXcd lhs;  // supercell solve restricted to the center cell
  Eigen::MatrixXcd rhs;  // dual-node quadrature of modulated cell resolvents
  double rel_err = 0.0;
};

// Compares the L-cell periodic supercell solve of (-Lap_{k2} - lambda*eps0)
// against the trapezoid quadrature of the cell-resolvent integral taken at
// exactly the L dual nodes.  `fhat` holds cell Fourier coefficients of the
// (cell-supported) right-hand side.
StripCheckResult strip_resolvent_check(double k2, double lambda, const MediumSpec& medium,
                                       const ModeBasis& basis, int L, const VecC& fhat,
                                       int g1 = 24, int g2 = 16);
StripCheckResult strip_resolvent_check(double k2, double lambda, const MediumSpec& medium,
                                       const ModeBasis& basis, int L, const GridFunction& f);

}  // namespace stripres
