#include "stripres/cell_operator.hpp"

#include <lapacke.h>

#include <random>

#include "stripres/errors.hpp"
#include "stripres/parallel.hpp"

namespace stripres {

VecC seeded_unit_vector(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  VecC v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(uni(rng), uni(rng));
  v /= v.norm();
  return v;
}

double edge_shell_fraction(const VecC& u, const ModeBasis& basis) {
  double edge = 0, total = 0;
  for (int i = 0; i < basis.size(); ++i) {
    auto [n1, n2] = basis.at(i);
    double w = std::norm(u(i));
    total += w;
    if (basis.edge(n1, n2)) edge += w;
  }
  return total > 0 ? edge / total : 0.0;
}

double n1_edge_fraction(const VecC& u, const ModeBasis& basis) {
  double edge = 0, total = 0;
  for (int i = 0; i < basis.size(); ++i) {
    auto [n1, n2] = basis.at(i);
    (void)n2;
    double w = std::norm(u(i));
    total += w;
    if (n1 == basis.n1_min || n1 == basis.n1_max) edge += w;
  }
  return total > 0 ? edge / total : 0.0;
}

namespace {

using RowMap = Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>;
using RowMapMut =
    Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace

MatC assemble_shifted(const CPoint2& k, double lambda, const MediumSpec& medium,
                      const ModeBasis& basis) {
  MatC m = -lambda * convolution_matrix(medium, EpsPart::eps0, basis);
  for (int i = 0; i < basis.size(); ++i)
    m(i, i) += symbol(basis.m1(i), basis.m2(i), k);
  return m;
}

SpectralReport spectral_report(const MatC& M, double rel_threshold) {
  VecR sv = singular_values(M);
  SpectralReport rep;
  rep.sigma_min = sv(sv.size() - 1);
  rep.invertible = rep.sigma_min > rel_threshold * sv(0);
  rep.inv_norm = rep.invertible ? 1.0 / rep.sigma_min : 0.0;
  return rep;
}

CellSolver::CellSolver(MatC M) : m_(std::move(M)), lu_(m_) {}

VecC CellSolver::solve(const VecC& f) const {
  VecC x = lu_.solve(f);
  x += lu_.solve(f - m_ * x);
  return x;
}

MatC CellSolver::solve_block(const MatC& F) const {
  MatC x = lu_.solve(F);
  x += lu_.solve(F - m_ * x);
  return x;
}

double CellSolver::sigma_min_estimate(int iters) const {
  VecC v = seeded_unit_vector(m_.rows(), 0x5eed);
  double growth = 1.0;
  for (int it = 0; it < iters; ++it) {
    VecC w = lu_.adjoint().solve(v);
    VecC u = lu_.solve(w);
    growth = u.norm();
    if (!std::isfinite(growth) || growth == 0.0) return 0.0;
    v = u / growth;
  }
  return 1.0 / std::sqrt(growth);
}

double CellSolver::norm_estimate(int iters) const {
  VecC v = seeded_unit_vector(m_.rows(), 0xbead);
  double growth = 1.0;
  for (int it = 0; it < iters; ++it) {
    VecC u = m_.adjoint() * (m_ * v);
    growth = u.norm();
    if (growth == 0.0) return 0.0;
    v = u / growth;
  }
  return std::sqrt(growth);
}

void CellSolver::require_invertible(double rel_threshold) const {
  double smin = sigma_min_estimate();
  double nrm = norm_estimate();
  if (!(smin > rel_threshold * nrm))
    throw NotInvertible("cell matrix numerically singular: sigma_min ~ " +
                        std::to_string(smin) + ", norm ~ " + std::to_string(nrm));
}

VecC resolvent_apply(const CPoint2& k, double lambda, const MediumSpec& medium,
                     const ModeBasis& basis, const VecC& f) {
  CellSolver solver(assemble_shifted(k, lambda, medium, basis));
  solver.require_invertible();
  return solver.solve(f) / kTwoPi;
}

MatC modal_modulation(const ModeBasis& to, const ModeBasis& from, cplx kk) {
  MatC out(to.size1(), from.size1());
  for (int p = 0; p < to.size1(); ++p)
    for (int n = 0; n < from.size1(); ++n)
      out(p, n) = phase_average(kTwoPi * ((from.n1_min + n) - (to.n1_min + p)) + kk);
  return out;
}

VecC h_apply(cplx k1, cplx k2, double lambda, const MediumSpec& medium,
             const ModeBasis& basis_big, const VecC& f, double aliasing_budget) {
  if (f.size() != basis_big.size()) throw ConfigError("h_apply: coefficient size mismatch");
  cplx k1f = fold_re(k1);
  const int n1 = basis_big.size1(), n2 = basis_big.size2();

  MatC down = modal_modulation(basis_big, basis_big, -k1f);
  RowMap fm(f.data(), n1, n2);
  MatC g = down * fm;

  CellSolver solver(assemble_shifted({k1f, k2}, lambda, medium, basis_big));
  solver.require_invertible();
  VecC gflat(f.size());
  RowMapMut(gflat.data(), n1, n2) = g;
  VecC u = solver.solve(gflat);

  MatC up = modal_modulation(basis_big, basis_big, +k1f);
  RowMap um(u.data(), n1, n2);
  MatC outm = up * um;
  VecC out(f.size());
  RowMapMut(out.data(), n1, n2) = outm;

  // The modulations act along n1 only; mass reaching the outermost n1 shells
  // is projection leakage, while n2-edge content is legitimate support.
  double tail = n1_edge_fraction(out, basis_big);
  if (tail > aliasing_budget)
    throw AliasingBudgetExceeded("h_apply: output n1-edge mass " + std::to_string(tail) +
                                 " exceeds budget " + std::to_string(aliasing_budget));
  return out / kTwoPi;
}

VecR band_eigs(double kx, double ky, const MediumSpec& medium, const ModeBasis& basis,
               int count) {
  MatC a = MatC::Zero(basis.size(), basis.size());
  for (int i = 0; i < basis.size(); ++i)
    a(i, i) = symbol(basis.m1(i), basis.m2(i), cplx(kx, 0), cplx(ky, 0));
  MatC b = convolution_matrix(medium, EpsPart::eps0, basis);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatC> es(a, b,
                                                    Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success)
    throw EigKernelFailure("band_eigs: generalized eigensolver failed");
  int n = std::min<int>(count, basis.size());
  return es.eigenvalues().head(n);
}

double sigma_min_scan(double im_k1, cplx k2, double lambda, const MediumSpec& medium,
                      const ModeBasis& basis, int samples, int threads) {
  if (samples < 16) throw ConfigError("sigma_min_scan: samples must be >= 16");
  std::vector<double> vals(samples);
  MatC conv = convolution_matrix(medium, EpsPart::eps0, basis);
  parallel_for(samples, threads, [&](int j) {
    double re = -kPi + kTwoPi * j / (samples - 1);
    MatC m = -lambda * conv;
    for (int i = 0; i < basis.size(); ++i)
      m(i, i) += symbol(basis.m1(i), basis.m2(i), cplx(re, im_k1), k2);
    VecR sv = singular_values(m);
    vals[j] = sv(sv.size() - 1);
  });
  return *std::min_element(vals.begin(), vals.end());
}

void eig_dense(const MatC& A, VecC& w, MatC& V) {
  const int n = static_cast<int>(A.rows());
  MatC a = A;
  w.resize(n);
  V.resize(n, n);
  int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'V', n,
                           reinterpret_cast<lapack_complex_double*>(a.data()), n,
                           reinterpret_cast<lapack_complex_double*>(w.data()), nullptr,
                           std::max(1, n),
                           reinterpret_cast<lapack_complex_double*>(V.data()), n);
  if (info != 0)
    throw EigKernelFailure("zgeev failed with info " + std::to_string(info));
}

VecR singular_values(const MatC& A) {
  return Eigen::BDCSVD<MatC>(A).singularValues();
}

double spectral_norm(const MatC& A) {
  VecR sv = singular_values(A);
  return sv.size() ? sv(0) : 0.0;
}

}  // namespace stripres
