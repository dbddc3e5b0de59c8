#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stripres/common.hpp"
#include "stripres/medium.hpp"
#include "stripres/pole_tracker.hpp"

namespace stripres {

struct QuadratureSpec {
  int q_line = 64;
  int q_circle = 32;
  int big_margin_n1 = 68;        // n1 enlargement of the internal solve basis
  double aliasing_budget = 0.01;
  bool check_convergence = false;
  double conv_tol = 1e-7;
  int threads = 1;
};

struct ResidueContrib {
  int pole_index = -1;
  MatC matrix;
};

// The operator family A(k2) materialized on the nominal mode basis, split into
// its line-integral part and per-pole residue parts.
struct AFamily {
  cplx k2;
  MatC matrix;
  MatC line_contrib;
  std::vector<ResidueContrib> residue_contribs;
  double tau1 = 0.0;
  double delta0 = 0.0;
  int q_line = 0;
  int q_circle = 0;
  double norm2 = 0.0;
};

// Node evaluator for the modulated cell resolvent compressed to the nominal
// basis: factors the enlarged cell matrix once per node and solves for all
// nominal basis vectors at once.
class HKernel {
 public:
  HKernel(cplx k2, double lambda, const MediumSpec& medium, const ModeBasis& nominal,
          int big_margin_n1, double aliasing_budget = 0.01);
  ~HKernel();
  HKernel(HKernel&&) noexcept;

  // Nominal x nominal block of the modulated resolvent at k1 (Re folded).
  MatC eval(cplx k1) const;
  const ModeBasis& nominal() const;
  const ModeBasis& big() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Trapezoid assembly over the segment [-pi, pi] + i*delta0.  When `poles` is
// nonempty, throws PoleOnContour if any lies within 1e-4 of the segment.
AFamily assemble_A_direct(cplx k2, double lambda, const MediumSpec& medium,
                          const ModeBasis& basis, double delta0, const QuadratureSpec& quad,
                          const std::vector<PoleRecord>& poles = {});

// Line integral at height tau1 plus one counterclockwise residue circle per
// supplied q+ pole, radius min(0.45*isolation distance, 0.3) with a hard floor
// of 1e-3 (PoleTooClose below it).  Callers pass one record per physical pole
// (see dedupe_poles); records violating the isolation precondition throw.
AFamily assemble_A_deformed(cplx k2, double lambda, const MediumSpec& medium,
                            const ModeBasis& basis, const std::vector<PoleRecord>& qplus,
                            double tau1, const QuadratureSpec& quad);

struct BasisPolicy {
  int n1_margin = 4;
  int n2_margin = 4;
  // Symmetric basis with n1 half-range ceil(ell/2pi) + n1_margin and n2
  // half-range ceil(tau1/2pi) + n2_margin.
  ModeBasis nominal_for(double ell, double tau1) const;
};

struct DecayRow {
  double ell = 0.0;
  double re_k2 = 0.0;
  double norm2 = 0.0;
  double neumann_bound = 0.0;
};

struct DecaySweep {
  std::vector<DecayRow> rows;
  double slope_fit = 0.0;    // least-squares slope of log norm2 vs log ell
  double c_empirical = 0.0;  // max over rows of ell * norm2
};

// Decay of ||A(re_k2 + i(pi/2 + ell))|| over ascending ells; the nominal basis
// grows with ell per `policy`, the pencil supplying the q+ poles runs on the
// same basis enlarged by the quadrature margin.  When `families` is non-null
// the assembled operator at each height is appended to it (one per ell), so
// downstream scans reuse the assembly instead of repeating it.
DecaySweep a_decay_sweep(double re_k2, const std::vector<double>& ells, double lambda,
                         const MediumSpec& medium, const BasisPolicy& policy, double tau1,
                         const QuadratureSpec& quad, std::vector<AFamily>* families = nullptr);

enum class FredholmConclusion { definitely_invertible, numerically_invertible, near_singular };
const char* fredholm_conclusion_name(FredholmConclusion c);

struct FredholmReport {
  cplx k2;
  double sigma_min = 0.0;
  double neumann_bound = 0.0;
  FredholmConclusion conclusion = FredholmConclusion::near_singular;
};

// sigma_min(I - lambda * A * Conv(eps1)) with the Neumann-series certificate
// neumann_bound = |lambda| * ||A|| * ||Conv(eps1)||.
FredholmReport fredholm_report(const AFamily& a, double lambda, const MediumSpec& medium,
                               const ModeBasis& basis);

std::string decay_csv(const DecaySweep& sweep);
std::string fredholm_csv(const std::vector<FredholmReport>& reports);

}  // namespace stripres
