#pragma once

#include <string>
#include <vector>

#include "stripres/common.hpp"
#include "stripres/medium.hpp"
#include "stripres/symbol.hpp"

namespace stripres {

enum class PoleClass { up, down, real_line, untrusted };
const char* pole_class_name(PoleClass klass);

// One resolvent pole in the fundamental strip: the companion eigenvalue k1,
// folded so Re k1 lies in [-pi, pi), together with the raw (unfolded) value,
// the eigenvector mass on the outermost mode shell, and a stable id assigned
// by continuation.
struct PoleRecord {
  cplx k1;
  cplx k1_raw;
  PoleClass klass = PoleClass::untrusted;
  double tail_mass = 1.0;
  int index = -1;
};

struct PencilOptions {
  double tail_tol = 0.05;
  double fold_merge_tol = 1e-6;
  bool include_untrusted = false;
  bool check_residual = false;
  double resid_tol = 1e-8;
};

// Companion linearization [[0, I], [A, B]] of the quadratic pencil
// Q(k1) = k1^2*I - k1*B - A with A = -diag(symbol(m,(0,k2))) + mu*Conv(eps0)
// and B = diag(-2*m1); its eigenvalues are the poles of the cell resolvent.
MatC pencil_companion(cplx k2, double mu, const MediumSpec& medium, const ModeBasis& basis);

// All companion eigenvalues with |Im| < tau1, folded into Re in [-pi, pi).
// Records closer than fold_merge_tol after folding are merged keeping the
// smallest tail mass.  Only trusted records (tail <= tail_tol) are returned
// unless include_untrusted is set.
std::vector<PoleRecord> pencil_eigs(cplx k2, double mu, const MediumSpec& medium,
                                    const ModeBasis& basis, double tau1,
                                    const PencilOptions& opts = {});

// Collapses transitive proximity clusters (cylinder metric) to one record per
// cluster, keeping the member with the smallest tail mass.  Finite-section
// truncation splits each 2*pi-translate family into a tight cluster of nearly
// identical folded eigenvalues; callers placing residue circles or matching
// trajectories need one representative per physical pole.
std::vector<PoleRecord> dedupe_poles(const std::vector<PoleRecord>& records, double tol);

struct ClassifyResult {
  double delta0 = 0.0;
  std::vector<std::vector<PoleRecord>> samples;  // classified copies, input order
  int n_plus = 0;   // `up` count at the first sample
  int n_minus = 0;  // `down` count at the first sample
  int n_real = 0;   // `real` count at the first sample
};

// Classifies pole records collected at >= 8 real k2 samples: |Im| <= tol_real
// is `real`; delta0 = half the smallest non-real |Im| over all samples;
// Im > delta0 is `up`, non-real Im <= 0 is `down`.  Throws GapCollapse when
// the smallest non-real |Im| is below 10*tol_real.
ClassifyResult classify_and_delta0(const std::vector<std::vector<PoleRecord>>& samples,
                                   double tol_real = 1e-6);

struct PathSpec {
  std::vector<cplx> waypoints;   // consecutive points inside Z, Im nondecreasing
  double max_step = 0.05;
  double collision_tol = 1e-3;
  double theta = 1.0;            // Z band: theta < Re k2 < pi + delta
  double delta = kPi / 8;
};

inline constexpr unsigned kFlagProximity = 1;  // min pairwise pole distance < collision_tol
inline constexpr unsigned kFlagHalved = 2;     // step was halved to resolve ambiguity
inline constexpr unsigned kFlagOffset = 4;     // step lies on a lateral detour

struct TrackStep {
  cplx k2;
  std::vector<PoleRecord> poles;  // tracked records with stable indices
  unsigned flags = 0;
  int n_trusted = 0;              // deduped trusted pole count at this k2
};

struct Trajectory {
  std::vector<TrackStep> steps;
  int N = 0;  // tracked pole count at the start
};

// Continues the deduped trusted poles along the path by nearest-neighbor
// matching in C/2pi with adaptive step halving, collision detection, and
// lateral offsets around exceptional points.
Trajectory track_poles(const PathSpec& path, double mu, const MediumSpec& medium,
                       const ModeBasis& basis, double tau1,
                       const PencilOptions& opts = {});

// Rank of the Riesz projection (1/2pi i) \oint (W_mu(k2) - k)^{-1} dk over the
// rectangle contour, by trapezoid quadrature at gamma_contour_points; the rank
// is the number of singular values above 0.5.  Throws EigOnContour when a
// companion eigenvalue lies within 1e-4 of the contour.
int riesz_rank(const RectContour& contour, cplx k2, double mu, const MediumSpec& medium,
               const ModeBasis& basis, int q_nodes);

// Batched version: ranks for several contours at the same (k2, mu), sharing a
// single companion eigendecomposition for the on-contour pre-checks.
std::vector<int> riesz_ranks(const std::vector<RectContour>& contours, cplx k2, double mu,
                             const MediumSpec& medium, const ModeBasis& basis, int q_nodes);

// CSV with columns step,re_k2,im_k2,pole_index,re_k1,im_k1,klass,tail_mass,flags.
std::string trajectory_csv(const Trajectory& traj);
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace stripres
