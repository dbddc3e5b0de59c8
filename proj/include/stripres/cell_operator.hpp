#pragma once

#include <cstdint>

#include "stripres/common.hpp"
#include "stripres/medium.hpp"
#include "stripres/symbol.hpp"

namespace stripres {

// Deterministic pseudo-random complex unit vector (fixed-seed mt19937_64).
VecC seeded_unit_vector(Eigen::Index n, std::uint64_t seed);

// Fraction of squared mass carried by the outermost mode shell of the basis.
double edge_shell_fraction(const VecC& u, const ModeBasis& basis);

// Same fraction restricted to the two outermost n1 shells (the direction the
// k1 modulations leak along).
double n1_edge_fraction(const VecC& u, const ModeBasis& basis);

// Matrix of (-Delta_k - lambda*eps0) in the mode basis:
// diag(symbol(m,k)) - lambda * convolution_matrix(eps0).
MatC assemble_shifted(const CPoint2& k, double lambda, const MediumSpec& medium,
                      const ModeBasis& basis);

struct SpectralReport {
  double sigma_min = 0;
  double inv_norm = 0;  // 1/sigma_min when invertible
  bool invertible = false;
};

// Exact smallest singular value (full SVD) against threshold*||M||_2.
SpectralReport spectral_report(const MatC& M, double rel_threshold = 1e-8);

// Shared dense-solve kernel: partial-pivot LU with one pass of iterative
// refinement, plus cheap power-iteration estimates of sigma_min / ||M||_2
// used as the invertibility guard at solve time.
class CellSolver {
 public:
  explicit CellSolver(MatC M);
  const MatC& matrix() const { return m_; }
  VecC solve(const VecC& f) const;
  MatC solve_block(const MatC& F) const;
  double sigma_min_estimate(int iters = 14) const;
  double norm_estimate(int iters = 8) const;
  // Throws NotInvertible when sigma_min_estimate <= rel_threshold * norm_estimate.
  void require_invertible(double rel_threshold = 1e-8) const;

 private:
  MatC m_;
  Eigen::PartialPivLU<MatC> lu_;
};

// (1/2pi) (-Delta_k - lambda*eps0)^{-1} f.
VecC resolvent_apply(const CPoint2& k, double lambda, const MediumSpec& medium,
                     const ModeBasis& basis, const VecC& f);

// n1-axis modulation factor: entry (p, n) = phase_average(2*pi*(n - p) + kk),
// the exact L2-projected multiplication by e^{i kk x1} between mode ranges.
// Acts on the n2 axis as identity (callers apply it via the n1-major reshape).
MatC modal_modulation(const ModeBasis& to, const ModeBasis& from, cplx kk);

// H(k1,k2) f = e^{i k1 x1} T(k1,k2) [e^{-i k1 x1} f] on the given basis.
// Re k1 is folded into [-pi,pi) first, making 2pi-periodicity exact. The
// basis should carry enough n1 margin for the target accuracy; the n1-edge
// mass fraction of the output is checked against aliasing_budget.
VecC h_apply(cplx k1, cplx k2, double lambda, const MediumSpec& medium,
             const ModeBasis& basis_big, const VecC& f, double aliasing_budget = 0.01);

// Lowest `count` eigenvalues of -Delta_k u = lambda eps0 u at real k, ascending.
VecR band_eigs(double kx, double ky, const MediumSpec& medium, const ModeBasis& basis,
               int count);

// Minimum over equispaced k1 in [-pi,pi] + i*im_k1 of sigma_min(assemble_shifted).
double sigma_min_scan(double im_k1, cplx k2, double lambda, const MediumSpec& medium,
                      const ModeBasis& basis, int samples, int threads = 1);

// Dense nonsymmetric eigendecomposition (Schur-based LAPACK kernel);
// fills eigenvalues w and right eigenvectors V.
void eig_dense(const MatC& A, VecC& w, MatC& V);

// Singular values, descending.
VecR singular_values(const MatC& A);

double spectral_norm(const MatC& A);

}  // namespace stripres
