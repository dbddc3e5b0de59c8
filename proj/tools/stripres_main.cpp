#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stripres/a_family.hpp"
#include "stripres/cell_operator.hpp"
#include "stripres/errors.hpp"
#include "stripres/floquet.hpp"
#include "stripres/io_util.hpp"
#include "stripres/medium.hpp"
#include "stripres/parallel.hpp"
#include "stripres/pipeline.hpp"
#include "stripres/pole_tracker.hpp"
#include "stripres/symbol.hpp"

namespace {

using namespace stripres;

int verdict(const std::string& name, bool ok, const std::string& metrics) {
  std::cout << name << ": " << metrics << " -> " << (ok ? "pass" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

struct Opts {
  std::string config_path;
  std::string out = "out";
  int threads = 0;
  double lambda = std::numeric_limits<double>::quiet_NaN();
  int q_line = 0;
  int basis_n1 = 0;
  int basis_n2 = 0;
  double ell_max = 0;  // in units of 2*pi
  // band-specific
  std::string k_path = "gamma-x-m-gamma";
  int bands = 8;
  int k_samples = 16;
};

void add_common(CLI::App* cmd, Opts& o) {
  cmd->add_option("--config", o.config_path,
                  "JSON config file; omitted = built-in free-medium config");
  cmd->add_option("--out", o.out, "output directory for CSV/JSON artifacts");
  cmd->add_option("--threads", o.threads, "worker cap for quadrature/scan nodes");
  cmd->add_option("--lambda", o.lambda, "override the coupling lambda");
  cmd->add_option("--q-line", o.q_line, "override line-quadrature node count");
  cmd->add_option("--basis-n1", o.basis_n1, "override the base n1 half-range");
  cmd->add_option("--basis-n2", o.basis_n2, "override the base n2 half-range");
  cmd->add_option("--ell-max", o.ell_max, "keep decay heights with ell/2pi <= this");
}

RunConfig make_config(const Opts& o) {
  RunConfig cfg;
  if (o.config_path.empty()) {
    cfg = default_run_config();
  } else {
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot open config file: " + o.config_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    cfg = config_from_json_text(ss.str());
  }
  if (o.threads > 0) cfg.quad.threads = o.threads;
  if (!std::isnan(o.lambda)) cfg.spectral.lambda = o.lambda;
  if (o.q_line > 0) cfg.quad.q_line = o.q_line;
  if (o.basis_n1 > 0) cfg.spectral.base_n1_half = o.basis_n1;
  if (o.basis_n2 > 0) cfg.spectral.base_n2_half = o.basis_n2;
  if (o.ell_max > 0) {
    std::vector<double> kept;
    for (double e : cfg.spectral.ells_over_2pi)
      if (e <= o.ell_max) kept.push_back(e);
    if (kept.empty()) throw ConfigError("--ell-max removes every decay height");
    cfg.spectral.ells_over_2pi = kept;
  }
  cfg.output.dir = o.out;
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------- checks ---

double brute_interval_gap(double beta, double m) {
  const double target = (m + kTwoPi) * (m + kTwoPi);
  double best = std::numeric_limits<double>::infinity();
  constexpr int kGrid = 100000;
  for (int n2 = -200; n2 <= 200; ++n2) {
    const double m2 = kTwoPi * n2;
    for (int i = 0; i < kGrid; ++i) {
      const double xi2 = (kPi - beta) + 2 * beta * i / (kGrid - 1.0);
      const double v = std::abs((m2 + xi2) * (m2 + xi2) - target);
      if (v < best) best = v;
    }
  }
  return best;
}

int run_verify_estimates(const RunConfig&) {
  int rc = 0;

  // Randomized lower bounds for |s(m, xi + i eta)|^2.
  std::mt19937_64 rng(20260814);
  std::uniform_int_distribution<int> mode(-20, 20);
  std::uniform_real_distribution<double> xi(-kPi, kPi);
  std::uniform_real_distribution<double> eta(-10.0, 10.0);
  const int samples = 1000000;
  int violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const double m1 = kTwoPi * mode(rng), m2 = kTwoPi * mode(rng);
    const double x1 = xi(rng), x2 = xi(rng), e1 = eta(rng), e2 = eta(rng);
    const cplx s = symbol(m1, m2, cplx(x1, e1), cplx(x2, e2));
    const double lhs = std::norm(s);
    const HammerBounds hb = hammer_bounds(m1, m2, x1, x2, e1, e2);
    const double rhs = std::max(hb.b1, hb.b2);
    if (rhs > lhs * (1.0 + 1e-9)) ++violations;
    if (lhs > 0) worst_margin = std::min(worst_margin, lhs - rhs);
  }
  rc |= verdict("symbol lower bounds", violations == 0,
                std::to_string(samples) + " samples, " + std::to_string(violations) +
                    " violations, worst margin " + fmt17(worst_margin));

  // Interval gap bound: brute force >= formula, tight at beta = pi/2, m = 0.
  const double tight_formula = min_gap(kPi / 2, 0.0);
  const double tight_brute = brute_interval_gap(kPi / 2, 0.0);
  rc |= verdict("interval gap tightness", std::abs(tight_brute - tight_formula) <=
                                              1e-9 * std::abs(tight_formula),
                "brute " + fmt17(tight_brute) + " vs formula " + fmt17(tight_formula));
  int gap_ok = 0, gap_total = 0;
  for (double beta : {kPi / 4, kPi / 2, 3 * kPi / 4})
    for (double m : {0.0, kTwoPi, 2 * kTwoPi}) {
      ++gap_total;
      if (brute_interval_gap(beta, m) >= min_gap(beta, m) * (1.0 - 1e-9)) ++gap_ok;
    }
  rc |= verdict("interval gap bound", gap_ok == gap_total,
                std::to_string(gap_ok) + "/" + std::to_string(gap_total) + " grid cases");
  return rc;
}

int run_band(const RunConfig& cfg, const Opts& o) {
  if (o.k_path != "gamma-x-m-gamma")
    throw ConfigError("unknown --k-path (supported: gamma-x-m-gamma)");
  if (o.bands < 1) throw ConfigError("--bands must be positive");
  const int k1h = cfg.spectral.base_n1_half > 0 ? cfg.spectral.base_n1_half : 6;
  const int k2h = cfg.spectral.base_n2_half > 0 ? cfg.spectral.base_n2_half : 6;
  const ModeBasis basis = ModeBasis::symmetric(k1h, k2h);
  if (o.bands > basis.size()) throw ConfigError("--bands exceeds the basis size");

  const std::vector<std::pair<double, double>> corners = {
      {0, 0}, {kPi, 0}, {kPi, kPi}, {0, 0}};
  std::ostringstream csv;
  csv << "k_index,k1,k2,band,value\n";
  int k_index = 0;
  double first_band_at_gamma = std::numeric_limits<double>::quiet_NaN();
  for (size_t seg = 0; seg + 1 < corners.size(); ++seg) {
    for (int t = 0; t < o.k_samples; ++t) {
      const double u = static_cast<double>(t) / o.k_samples;
      const double kx = corners[seg].first + u * (corners[seg + 1].first - corners[seg].first);
      const double ky = corners[seg].second + u * (corners[seg + 1].second - corners[seg].second);
      const VecR vals = band_eigs(kx, ky, cfg.medium, basis, o.bands);
      if (k_index == 0) first_band_at_gamma = vals(0);
      for (int b = 0; b < o.bands; ++b)
        csv << k_index << ',' << fmt17(kx) << ',' << fmt17(ky) << ',' << (b + 1) << ','
            << fmt17(vals(b)) << '\n';
      ++k_index;
    }
  }
  const VecR vals = band_eigs(0, 0, cfg.medium, basis, o.bands);
  for (int b = 0; b < o.bands; ++b)
    csv << k_index << ',' << fmt17(0.0) << ',' << fmt17(0.0) << ',' << (b + 1) << ','
        << fmt17(vals(b)) << '\n';
  ++k_index;

  ensure_dir(cfg.output.dir);
  atomic_write_text(cfg.output.dir + "/band.csv", csv.str());
  return verdict("band structure", true,
                 std::to_string(k_index) + " k-points x " + std::to_string(o.bands) +
                     " bands, first band at Gamma " + fmt17(first_band_at_gamma) +
                     ", wrote band.csv");
}

int run_free_poles(const RunConfig& cfg) {
  const double tau1 = cfg.tau1();
  const double ell = kTwoPi;
  const cplx k2(kPi, kPi / 2 + ell);
  const int k1h = static_cast<int>(std::ceil(ell / kTwoPi)) + 4;
  const int k2h = static_cast<int>(std::ceil(tau1 / kTwoPi)) + 4;
  const ModeBasis basis = ModeBasis::symmetric(k1h, k2h);

  std::vector<PoleRecord> recs =
      dedupe_poles(pencil_eigs(k2, 0.0, cfg.medium, basis, tau1), 5e-4);

  std::vector<cplx> oracle;
  for (int sign : {+1, -1})
    for (int n2 = -k2h; n2 <= k2h; ++n2) {
      const cplx p = fold_re(free_pole_oracle(0.0, kTwoPi * n2, kPi, ell, sign));
      if (std::abs(p.imag()) < tau1 - 1e-6) oracle.push_back(p);
    }

  double worst = 0.0;
  for (cplx p : oracle) {
    double best = std::numeric_limits<double>::infinity();
    for (const PoleRecord& r : recs) best = std::min(best, cyl_dist(r.k1, p));
    worst = std::max(worst, best);
  }

  std::ostringstream csv;
  csv << "re_k1,im_k1,tail_mass\n";
  for (const PoleRecord& r : recs)
    csv << fmt17(r.k1.real()) << ',' << fmt17(r.k1.imag()) << ',' << fmt17(r.tail_mass)
        << '\n';
  ensure_dir(cfg.output.dir);
  atomic_write_text(cfg.output.dir + "/free_poles.csv", csv.str());

  const bool ok = recs.size() == oracle.size() && worst <= 1e-8;
  return verdict("free-pole oracle", ok,
                 std::to_string(recs.size()) + " records vs " + std::to_string(oracle.size()) +
                     " oracle points, worst mismatch " + fmt17(worst));
}

int run_formres_check(const RunConfig& cfg) {
  const double k2 = 1.7;
  const bool periodic_bg = !cfg.medium.eps0_rectangles.empty();
  const int L = periodic_bg ? 16 : 8;
  const double tol = 1e-8;
  const int k1h = cfg.spectral.base_n1_half > 0 ? cfg.spectral.base_n1_half : 6;
  const int k2h = cfg.spectral.base_n2_half > 0 ? cfg.spectral.base_n2_half : 4;
  const ModeBasis basis = ModeBasis::symmetric(k1h, k2h);
  const VecC fhat = seeded_unit_vector(basis.size(), 0xf0f0);
  const StripCheckResult res =
      strip_resolvent_check(k2, cfg.spectral.lambda, cfg.medium, basis, L, fhat);
  return verdict("strip resolvent identity",
                 res.rel_err <= tol,
                 "L = " + std::to_string(L) + ", rel_err " + fmt17(res.rel_err) + " (tol " +
                     fmt17(tol) + ")");
}

int run_track_poles(const RunConfig& cfg) {
  const Trajectory traj =
      track_poles(make_path_spec(cfg), cfg.spectral.lambda, cfg.medium, cfg.base_basis(),
                  cfg.tau1());
  int flagged = 0, mismatched = 0;
  for (const TrackStep& st : traj.steps) {
    if (st.flags != 0)
      ++flagged;
    else if (st.n_trusted != traj.N)
      ++mismatched;
  }
  ensure_dir(cfg.output.dir);
  write_trajectory_csv(traj, cfg.output.dir + "/trajectory.csv");
  return verdict("pole tracking", mismatched == 0,
                 "N = " + std::to_string(traj.N) + " over " + std::to_string(traj.steps.size()) +
                     " steps, " + std::to_string(flagged) + " flagged, " +
                     std::to_string(mismatched) + " unflagged count changes");
}

int run_a_decay(const RunConfig& cfg) {
  std::vector<double> ells;
  for (double e : cfg.spectral.ells_over_2pi) ells.push_back(kTwoPi * e);
  const BasisPolicy policy{cfg.spectral.n1_margin, cfg.spectral.n2_margin};
  const DecaySweep sweep =
      a_decay_sweep(kPi, ells, cfg.spectral.lambda, cfg.medium, policy, cfg.tau1(), cfg.quad);
  ensure_dir(cfg.output.dir);
  atomic_write_text(cfg.output.dir + "/decay.csv", decay_csv(sweep));
  const bool ok = sweep.slope_fit >= -1.3 && sweep.slope_fit <= -0.7;
  return verdict("operator decay", ok,
                 "slope " + fmt17(sweep.slope_fit) + " over " +
                     std::to_string(sweep.rows.size()) + " heights, max ell*||A|| " +
                     fmt17(sweep.c_empirical));
}

int run_fredholm_scan(const RunConfig& cfg) {
  std::vector<double> ells;
  for (double e : cfg.spectral.ells_over_2pi) ells.push_back(kTwoPi * e);
  const BasisPolicy policy{cfg.spectral.n1_margin, cfg.spectral.n2_margin};
  std::vector<AFamily> families;
  a_decay_sweep(kPi, ells, cfg.spectral.lambda, cfg.medium, policy, cfg.tau1(), cfg.quad,
                &families);
  std::vector<FredholmReport> reports;
  for (size_t i = 0; i < families.size(); ++i)
    reports.push_back(fredholm_report(families[i], cfg.spectral.lambda, cfg.medium,
                                      policy.nominal_for(ells[i], cfg.tau1())));
  ensure_dir(cfg.output.dir);
  atomic_write_text(cfg.output.dir + "/fredholm.csv", fredholm_csv(reports));
  int knee = -1;
  for (size_t i = 0; i < reports.size(); ++i)
    if (reports[i].neumann_bound < 1.0) {
      knee = static_cast<int>(i);
      break;
    }
  double worst = std::numeric_limits<double>::infinity();
  if (knee >= 0)
    for (size_t i = knee; i < reports.size(); ++i)
      worst = std::min(worst, reports[i].sigma_min);
  const bool ok = knee >= 0 && worst >= 0.5;
  return verdict("fredholm scan", ok,
                 knee < 0 ? "no height reaches neumann_bound < 1"
                          : "knee at ell " + fmt17(ells[knee]) + ", min sigma_min past knee " +
                                fmt17(worst));
}

int run_all(const RunConfig& cfg) {
  const RunReport rep = run_pipeline(cfg);
  int rc = 0;
  for (const StageResult& s : rep.stages) {
    if (!s.ran) {
      std::cout << "stage " << s.name << ": " << s.detail << "\n";
      rc = 1;
    } else {
      rc |= verdict("stage " + s.name, s.passed, s.detail);
    }
  }
  if (!cfg.output.dir.empty())
    std::cout << "report written to " << cfg.output.dir << "/report.json\n";
  return rep.all_passed() ? rc : 1;
}

}  // namespace

int main(int argc, char** argv) {
  pin_blas_single_thread();
  CLI::App app{
      "Spectral toolkit for periodic strips: cell resolvents, resolvent-pole "
      "continuation, contour-deformed operator assembly, decay and Fredholm certificates"};
  app.require_subcommand(1);
  Opts o;

  CLI::App* c_verify = app.add_subcommand(
      "verify-estimates", "randomized lower-bound sweeps for the shifted symbol");
  add_common(c_verify, o);

  CLI::App* c_band =
      app.add_subcommand("band", "band structure along a Brillouin-zone path (band.csv)");
  add_common(c_band, o);
  c_band->add_option("--k-path", o.k_path, "corner path (gamma-x-m-gamma)");
  c_band->add_option("--bands", o.bands, "number of bands per k-point");
  c_band->add_option("--k-samples", o.k_samples, "samples per path segment");

  CLI::App* c_free = app.add_subcommand(
      "free-poles", "pencil eigenvalues at mu = 0 against the closed-form pole set");
  add_common(c_free, o);

  CLI::App* c_formres = app.add_subcommand(
      "formres-check", "supercell solve against the dual-node resolvent quadrature");
  add_common(c_formres, o);

  CLI::App* c_track =
      app.add_subcommand("track-poles", "continue resolvent poles along the configured path");
  add_common(c_track, o);

  CLI::App* c_decay =
      app.add_subcommand("a-decay", "operator norm decay over the configured heights");
  add_common(c_decay, o);

  CLI::App* c_fred = app.add_subcommand(
      "fredholm-scan", "invertibility certificates for the defect equation per height");
  add_common(c_fred, o);

  CLI::App* c_all = app.add_subcommand("run-all", "full verification pipeline plus report");
  add_common(c_all, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    const RunConfig cfg = make_config(o);
    if (c_verify->parsed()) return run_verify_estimates(cfg);
    if (c_band->parsed()) return run_band(cfg, o);
    if (c_free->parsed()) return run_free_poles(cfg);
    if (c_formres->parsed()) return run_formres_check(cfg);
    if (c_track->parsed()) return run_track_poles(cfg);
    if (c_decay->parsed()) return run_a_decay(cfg);
    if (c_fred->parsed()) return run_fredholm_scan(cfg);
    if (c_all->parsed()) return run_all(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
