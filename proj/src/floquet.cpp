#include "stripres/floquet.hpp"

#include "stripres/cell_operator.hpp"
#include "stripres/errors.hpp"

namespace stripres {
namespace {

// Extract cell m of a supercell function along `dir` as a single-cell block.
Eigen::MatrixXcd cell_block(const GridFunction& f, Axis dir, int m) {
  if (dir == Axis::x1) return f.values.middleRows(m * f.g1, f.g1);
  return f.values.middleCols(m * f.g2, f.g2);
}

void set_cell_block(GridFunction& f, Axis dir, int m, const Eigen::MatrixXcd& blk) {
  if (dir == Axis::x1)
    f.values.middleRows(m * f.g1, f.g1) = blk;
  else
    f.values.middleCols(m * f.g2, f.g2) = blk;
}

// Multiply a single-cell block by e^{s*i*k*x} along `dir`, x in [0,1).
void modulate_cell(Eigen::MatrixXcd& blk, Axis dir, double k, double sign, int g) {
  for (int a = 0; a < g; ++a) {
    cplx ph = std::exp(cplx(0, sign * k * a / g));
    if (dir == Axis::x1)
      blk.row(a) *= ph;
    else
      blk.col(a) *= ph;
  }
}

}  // namespace

GridFunction GridFunction::zeros(int cells1, int g1, int cells2, int g2) {
  GridFunction f;
  f.g1 = g1;
  f.g2 = g2;
  f.values = Eigen::MatrixXcd::Zero(cells1 * g1, cells2 * g2);
  return f;
}

FloquetField floquet_forward(Axis dir, const GridFunction& f) {
  const int L = f.cells(dir);
  if (L < 1) throw ConfigError("floquet_forward: empty grid");
  FloquetField field;
  field.dir = dir;
  field.slices.reserve(L);
  const double scale = 1.0 / std::sqrt(static_cast<double>(L));
  const int g = dir == Axis::x1 ? f.g1 : f.g2;
  for (int j = 0; j < L; ++j) {
    double kj = kTwoPi * j / L;
    GridFunction slice;
    slice.g1 = f.g1;
    slice.g2 = f.g2;
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(f.g1, f.g2);
    for (int m = 0; m < L; ++m)
      acc += scale * std::exp(cplx(0, -kj * m)) * cell_block(f, dir, m);
    modulate_cell(acc, dir, kj, -1.0, g);
    slice.values = std::move(acc);
    field.slices.push_back(std::move(slice));
  }
  return field;
}

GridFunction floquet_inverse(Axis dir, const FloquetField& field) {
  const int L = field.L();
  if (L < 1) throw ConfigError("floquet_inverse: empty field");
  const GridFunction& s0 = field.slices.front();
  GridFunction out = dir == Axis::x1 ? GridFunction::zeros(L, s0.g1, 1, s0.g2)
                                     : GridFunction::zeros(1, s0.g1, L, s0.g2);
  const double scale = 1.0 / std::sqrt(static_cast<double>(L));
  const int g = dir == Axis::x1 ? s0.g1 : s0.g2;
  for (int m = 0; m < L; ++m) {
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(s0.g1, s0.g2);
    for (int j = 0; j < L; ++j) {
      double kj = kTwoPi * j / L;
      Eigen::MatrixXcd blk = field.slices[j].values;
      modulate_cell(blk, dir, kj, +1.0, g);
      acc += scale * std::exp(cplx(0, kj * m)) * blk;
    }
    set_cell_block(out, dir, m, acc);
  }
  return out;
}

Eigen::MatrixXcd modes_to_grid(const VecC& coef, const ModeBasis& basis, int g1, int g2) {
  Eigen::MatrixXcd e1(g1, basis.size1()), e2(basis.size2(), g2);
  for (int a = 0; a < g1; ++a)
    for (int i = 0; i < basis.size1(); ++i)
      e1(a, i) = std::exp(cplx(0, kTwoPi * (basis.n1_min + i) * a / double(g1)));
  for (int i = 0; i < basis.size2(); ++i)
    for (int b = 0; b < g2; ++b)
      e2(i, b) = std::exp(cplx(0, kTwoPi * (basis.n2_min + i) * b / double(g2)));
  Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      cm(coef.data(), basis.size1(), basis.size2());
  return e1 * cm * e2;
}

VecC grid_to_modes(const Eigen::MatrixXcd& cell_values, const ModeBasis& basis) {
  const int g1 = static_cast<int>(cell_values.rows());
  const int g2 = static_cast<int>(cell_values.cols());
  Eigen::MatrixXcd p1(basis.size1(), g1), p2(g2, basis.size2());
  for (int i = 0; i < basis.size1(); ++i)
    for (int a = 0; a < g1; ++a)
      p1(i, a) = std::exp(cplx(0, -kTwoPi * (basis.n1_min + i) * a / double(g1))) / double(g1);
  for (int b = 0; b < g2; ++b)
    for (int i = 0; i < basis.size2(); ++i)
      p2(b, i) = std::exp(cplx(0, -kTwoPi * (basis.n2_min + i) * b / double(g2))) / double(g2);
  Eigen::MatrixXcd cm = p1 * cell_values * p2;
  VecC coef(basis.size());
  Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      coef.data(), basis.size1(), basis.size2()) = cm;
  return coef;
}

StripCheckResult strip_resolvent_check(double k2, double lambda, const MediumSpec& medium,
                                       const ModeBasis& basis, int L, const VecC& fhat,
                                       int g1, int g2) {
  if (L < 1) throw ConfigError("strip_resolvent_check: L must be positive");
  if (fhat.size() != basis.size())
    throw ConfigError("strip_resolvent_check: coefficient size mismatch");
  const int n = basis.size();
  const MatC conv = convolution_matrix(medium, EpsPart::eps0, basis);

  // Per dual node: modulated right-hand side d_j and the cell-resolvent route.
  std::vector<VecC> rhs_coef(L);
  MatC fbig = MatC::Zero(L * n, 1);
  MatC mbig = MatC::Zero(L * n, L * n);
  for (int j = 0; j < L; ++j) {
    double k1j = kTwoPi * j / L;
    MatC r1 = modal_modulation(basis, basis, cplx(-k1j, 0));
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        fm(fhat.data(), basis.size1(), basis.size2());
    MatC dm = r1 * fm;
    VecC d(n);
    Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        d.data(), basis.size1(), basis.size2()) = dm;

    rhs_coef[j] = (kTwoPi / L) * resolvent_apply({cplx(k1j, 0), cplx(k2, 0)}, lambda,
                                                 medium, basis, d);

    // Supercell Galerkin block for the frequency class k1j: the 1-periodic
    // medium couples supercell modes only within a class, so the class block
    // equals the cell matrix at quasimomentum k1j.
    mbig.block(j * n, j * n, n, n) = -lambda * conv;
    for (int i = 0; i < n; ++i) {
      cplx s1 = basis.m1(i) + k1j;
      cplx s2 = basis.m2(i) + k2;
      mbig(j * n + i, j * n + i) += s1 * s1 + s2 * s2;
    }
    fbig.block(j * n, 0, n, 1) = d / double(L);
  }

  CellSolver big(std::move(mbig));
  big.require_invertible();
  VecC ubig = big.solve(fbig.col(0));

  // Evaluate both routes on the grid of the center cell (cell 0).
  Eigen::MatrixXcd lhs = Eigen::MatrixXcd::Zero(g1, g2);
  Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Zero(g1, g2);
  for (int j = 0; j < L; ++j) {
    double k1j = kTwoPi * j / L;
    Eigen::MatrixXcd lv = modes_to_grid(ubig.segment(j * n, n), basis, g1, g2);
    Eigen::MatrixXcd rv = modes_to_grid(rhs_coef[j], basis, g1, g2);
    for (int a = 0; a < g1; ++a) {
      cplx ph = std::exp(cplx(0, k1j * a / double(g1)));
      lhs.row(a) += ph * lv.row(a);
      rhs.row(a) += ph * rv.row(a);
    }
  }
  StripCheckResult res;
  res.rel_err = (lhs - rhs).norm() / lhs.norm();
  res.lhs = std::move(lhs);
  res.rhs = std::move(rhs);
  return res;
}

StripCheckResult strip_resolvent_check(double k2, double lambda, const MediumSpec& medium,
                                       const ModeBasis& basis, int L, const GridFunction& f) {
  return strip_resolvent_check(k2, lambda, medium, basis, L,
                               grid_to_modes(f.values, basis), f.g1, f.g2);
}

}  // namespace stripres
