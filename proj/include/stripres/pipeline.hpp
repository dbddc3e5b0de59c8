#pragma once

#include <string>
#include <vector>

#include "stripres/a_family.hpp"
#include "stripres/medium.hpp"
#include "stripres/pole_tracker.hpp"

namespace stripres {

// Quasimomentum path plumbing.  With auto_path set, the path starts at
// ((pi+theta)/2, start_im), moves horizontally to Re k2 = pi staying below
// Im = delta, then ascends vertically to im_top.  start_im = 0 means delta/8.
struct PathConfig {
  bool auto_path = true;
  std::vector<cplx> waypoints;
  double max_step = 0.4;
  double collision_tol = 1e-3;
  double start_im = 0.0;
  double im_top = 2.5;
};

struct SpectralConfig {
  double lambda = -1.0;
  double theta = 1.0;
  double delta = kPi / 8;          // must satisfy 0 < delta < min(pi/4, pi - theta)
  double tau1_override = 0.0;      // 0 = select_tau1(lambda, sup eps0, theta)
  int base_n1_half = 0;            // 0 = derived from im_top and the margins
  int base_n2_half = 0;            // 0 = derived from tau1 and the margins
  int n1_margin = 4;
  int n2_margin = 4;
  int line_scan_samples = 33;
  int z0_samples = 8;
  std::vector<double> ells_over_2pi = {4, 6, 8, 10, 12};
  int riesz_q_nodes = 32;
  std::vector<double> mu_fractions = {0.0, 0.5, 1.0};  // homotopy, as fractions of lambda
};

struct OutputConfig {
  std::string dir;        // empty = no files written
  bool write_csv = true;
};

struct RunConfig {
  MediumSpec medium;
  SpectralConfig spectral;
  PathConfig path;
  QuadratureSpec quad{.q_line = 32, .q_circle = 24, .big_margin_n1 = 10};
  OutputConfig output;

  // Throws ConfigError on: invalid medium, theta outside (0,pi), delta outside
  // (0, min(pi/4, pi-theta)), non-ascending or non-positive heights, manual
  // waypoints outside the band theta < Re < pi + delta, or sample counts too
  // small for the classification contract.
  void validate() const;

  double tau1() const;             // resolved value (override or selection rule)
  double start_im() const;         // resolved path entry height
  ModeBasis base_basis() const;    // scan/classification/tracking basis
};

// A reasonable complete default: free background, one defect rectangle
// [0.3,0.7]^2 of value 1, lambda = -1.
RunConfig default_run_config();

// Tracking path from the config: the auto path or the manual waypoints, with
// the band geometry and step limits filled in.
PathSpec make_path_spec(const RunConfig& cfg);

struct StageResult {
  std::string name;
  bool ran = false;
  bool passed = false;
  std::string detail;
};

struct RieszRecord {
  double ell = 0.0;
  double mu = 0.0;
  int contour_sign = 0;
  double contour_m2 = 0.0;
  int rank = -1;
  bool holds_qplus = false;
};

struct RunReport {
  double tau1 = 0.0;
  double delta0 = 0.0;
  double m_empirical = 0.0;   // smallest sweep ell where contour localization certifies
  double c_empirical = 0.0;   // max over the sweep of ell * ||A||
  double slope = 0.0;         // decay slope fit
  int n = 0;                  // tracked pole count
  int n_plus = 0;
  int n_minus = 0;
  std::vector<StageResult> stages;    // fixed order, every stage exactly once
  std::vector<std::string> artifacts; // file names written under output.dir
  Trajectory trajectory;
  std::vector<RieszRecord> riesz;
  DecaySweep sweep;
  std::vector<FredholmReport> fredholm;

  bool all_passed() const;
  const StageResult* stage(const std::string& name) const;
};

// Executes the full verification sequence: resolve tau1, certify the
// pole-free horizontal lines, classify poles and fix delta0 on real samples,
// track the poles along the path, then per decay height run the contour
// localization, the deformed assembly, the decay fit and the Fredholm scan.
// A stage failure is recorded and all later stages are skipped; artifacts for
// completed stages are still written.
RunReport run_pipeline(const RunConfig& cfg);

// JSON config document with sections medium, spectral, path, quadrature,
// output; missing keys fall back to defaults.  Throws ConfigError on parse or
// validation failure.
RunConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const RunConfig& cfg);

// Report document (scalars, stages, artifact names) plus an echo of the
// mathematical configuration; output plumbing is not echoed, so reports from
// identical runs into different directories compare equal.
std::string report_to_json_text(const RunReport& report, const RunConfig& cfg);

}  // namespace stripres
