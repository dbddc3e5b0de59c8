// Acceptance gate: one self-contained check per shipped guarantee, each
// printing a single verdict line.  Run with --criterion N for one check or
// with no arguments for the full gate.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "stripres/a_family.hpp"
#include "stripres/cell_operator.hpp"
#include "stripres/errors.hpp"
#include "stripres/floquet.hpp"
#include "stripres/medium.hpp"
#include "stripres/parallel.hpp"
#include "stripres/pipeline.hpp"
#include "stripres/pole_tracker.hpp"
#include "stripres/symbol.hpp"

using namespace stripres;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string metrics;
};

double now_sec() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

MediumSpec defect_medium() {
  MediumSpec m;
  m.eps1_rectangles = {{0.3, 0.7, 0.3, 0.7, 1.0}};
  return m;
}

MediumSpec rectangle_medium() {
  MediumSpec m;
  m.eps0_rectangles = {{0.25, 0.75, 0.25, 0.75, 2.0}};
  m.eps1_rectangles = {{0.3, 0.7, 0.3, 0.7, 1.0}};
  return m;
}

// --- 1: certified lower bounds on the symbol over a randomized sweep --------

Outcome criterion1() {
  const double t0 = now_sec();
  std::mt19937_64 rng(20260814ULL);
  std::uniform_int_distribution<int> mode(-8, 8);
  std::uniform_real_distribution<double> xi(-kPi, kPi);
  std::uniform_real_distribution<double> eta(-20.0, 20.0);
  const int n = 1000000;
  long violations = 0;
  double worst_margin = 1e300;
  for (int i = 0; i < n; ++i) {
    double m1 = kTwoPi * mode(rng), m2 = kTwoPi * mode(rng);
    double x1 = xi(rng), x2 = xi(rng), e1 = eta(rng), e2 = eta(rng);
    cplx s = symbol(m1, m2, cplx(x1, e1), cplx(x2, e2));
    double s2 = std::norm(s);
    HammerBounds hb = hammer_bounds(m1, m2, x1, x2, e1, e2);
    double slack = s2 + 1e-9 * (1.0 + s2);
    if (slack < hb.b1 || slack < hb.b2) ++violations;
    worst_margin = std::min(worst_margin, s2 - std::max(hb.b1, hb.b2));
  }
  const double dt = now_sec() - t0;
  Outcome o;
  o.pass = violations == 0 && dt < 10.0;
  o.metrics = std::to_string(n) + " samples, " + std::to_string(violations) +
              " violations, worst margin " + fmt(worst_margin) + ", " + fmt(dt) + " s";
  return o;
}

// --- 2: interval gap bound, brute-force tightness ----------------------------

double brute_gap(double beta, double m, int grid_points) {
  const double target = (m + kTwoPi) * (m + kTwoPi);
  double best = 1e300;
  for (int j = -200; j <= 200; ++j) {
    const double m2 = kTwoPi * j;
    for (int g = 0; g < grid_points; ++g) {
      double x2 = (kPi - beta) + 2 * beta * g / (grid_points - 1);
      double v = std::abs((m2 + x2) * (m2 + x2) - target);
      if (v < best) best = v;
    }
  }
  return best;
}

Outcome criterion2() {
  const double t0 = now_sec();
  const double bound0 = min_gap(kPi / 2, 0.0);
  const double brute0 = brute_gap(kPi / 2, 0.0, 100000);
  const double tight_err = std::abs(brute0 - bound0);
  bool grid_ok = true;
  double worst_ratio = 1e300;
  for (double beta : {kPi / 8, kPi / 4, kPi / 2, 3 * kPi / 4}) {
    for (int mi = 0; mi <= 5; ++mi) {
      double m = kTwoPi * mi;
      double bound = min_gap(beta, m);
      double brute = brute_gap(beta, m, 10000);
      worst_ratio = std::min(worst_ratio, brute / bound);
      if (brute < bound * (1 - 1e-12)) grid_ok = false;
    }
  }
  const double dt = now_sec() - t0;
  Outcome o;
  o.pass = tight_err <= 1e-9 && grid_ok && dt < 30.0;
  o.metrics = "tightness error " + fmt(tight_err) + " (bound " + fmt(bound0) +
              "), min brute/bound " + fmt(worst_ratio) + " over 24 cases, " + fmt(dt) + " s";
  return o;
}

// --- 3: strip eigenvalues of the uncoupled pencil against the closed form ----

Outcome criterion3() {
  const double t0 = now_sec();
  const double tau1 = kTwoPi;
  const double ell = kTwoPi;  // Im k2 = pi/2 + ell
  const cplx k2(kPi, kPi / 2 + ell);
  const ModeBasis basis = ModeBasis::symmetric(5, 5);

  std::vector<PoleRecord> recs = pencil_eigs(k2, 0.0, defect_medium(), basis, tau1);

  std::vector<cplx> oracle;
  for (int n1 = basis.n1_min + 1; n1 <= basis.n1_max - 1; ++n1)
    for (int n2 = basis.n2_min + 1; n2 <= basis.n2_max - 1; ++n2)
      for (int sign : {+1, -1}) {
        cplx j = free_pole_oracle(kTwoPi * n1, kTwoPi * n2, kPi, ell, sign);
        if (std::abs(j.imag()) >= tau1 - 1e-6) continue;
        j = cplx(fold_pi(j.real()), j.imag());
        bool dup = false;
        for (cplx seen : oracle)
          if (cyl_dist(seen, j) < 1e-9) dup = true;
        if (!dup) oracle.push_back(j);
      }

  double worst = 0.0;
  for (cplx j : oracle) {
    double best = 1e300;
    for (const PoleRecord& r : recs) best = std::min(best, cyl_dist(r.k1, j));
    worst = std::max(worst, best);
  }
  const double dt = now_sec() - t0;
  Outcome o;
  o.pass = recs.size() == oracle.size() && worst <= 1e-8 && dt < 60.0;
  o.metrics = std::to_string(recs.size()) + " trusted records vs " +
              std::to_string(oracle.size()) + " oracle points, worst mismatch " + fmt(worst) +
              ", " + fmt(dt) + " s";
  return o;
}

// --- 4: supercell solve vs dual-node resolvent quadrature --------------------

Outcome criterion4() {
  const double t0 = now_sec();
  const ModeBasis basis = ModeBasis::symmetric(6, 4);
  const VecC fhat = seeded_unit_vector(basis.size(), 0xf0f0);
  StripCheckResult rect = strip_resolvent_check(1.7, -1.0, rectangle_medium(), basis, 16, fhat);
  StripCheckResult free_bg = strip_resolvent_check(1.7, -1.0, defect_medium(), basis, 8, fhat);
  const double dt = now_sec() - t0;
  Outcome o;
  o.pass = rect.rel_err <= 1e-8 && free_bg.rel_err <= 1e-10 && dt < 60.0;
  o.metrics = "rectangle L=16 rel_err " + fmt(rect.rel_err) + ", free L=8 rel_err " +
              fmt(free_bg.rel_err) + ", " + fmt(dt) + " s";
  return o;
}

// --- 5: direct vs deformed assembly at real quasimomenta ---------------------

Outcome criterion5() {
  const double t0 = now_sec();
  const MediumSpec med = rectangle_medium();
  const double lambda = 0.5;
  const double tau1 = select_tau1(lambda, sup_norm_eps0(med), 1.0);
  const ModeBasis nominal = ModeBasis::symmetric(6, 3);  // 13 x 7 <= 15 x 9
  const ModeBasis pencil_basis = ModeBasis::symmetric(10, 7);
  QuadratureSpec quad;
  quad.q_line = 48;
  quad.q_circle = 24;
  quad.big_margin_n1 = 68;
  const std::vector<double> samples = {1.3, 1.7, 2.0, 2.4, 2.8};

  std::vector<std::vector<PoleRecord>> poles;
  double min_im = 1e300;
  for (double k2 : samples) {
    poles.push_back(dedupe_poles(pencil_eigs(cplx(k2, 0.0), lambda, med, pencil_basis, tau1),
                                 5e-4));
    for (const PoleRecord& p : poles.back())
      if (std::abs(p.k1.imag()) > 1e-6) min_im = std::min(min_im, std::abs(p.k1.imag()));
  }
  const double delta0 = 0.5 * min_im;

  double worst = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const cplx k2(samples[i], 0.0);
    std::vector<PoleRecord> qplus;
    for (const PoleRecord& p : poles[i])
      if (p.k1.imag() > delta0 && p.k1.imag() < tau1 - 1e-9) qplus.push_back(p);
    AFamily dir = assemble_A_direct(k2, lambda, med, nominal, delta0, quad, poles[i]);
    AFamily def = assemble_A_deformed(k2, lambda, med, nominal, qplus, tau1, quad);
    worst = std::max(worst, (dir.matrix - def.matrix).norm() / dir.matrix.norm());
  }
  const double dt = now_sec() - t0;
  Outcome o;
  o.pass = worst <= 1e-7 && dt < 300.0;
  o.metrics = "5 samples, delta0 " + fmt(delta0) + ", worst rel diff " + fmt(worst) + ", " +
              fmt(dt) + " s";
  return o;
}

// --- shared sweep for 6 and 8 ------------------------------------------------

DecaySweep run_sweep(std::vector<AFamily>* families) {
  const MediumSpec med = defect_medium();
  const BasisPolicy policy{4, 4};
  QuadratureSpec quad;
  quad.q_line = 32;
  quad.q_circle = 24;
  quad.big_margin_n1 = 10;
  std::vector<double> ells;
  for (int i = 4; i <= 12; ++i) ells.push_back(kTwoPi * i);
  return a_decay_sweep(kPi, ells, -1.0, med, policy, kTwoPi, quad, families);
}

Outcome criterion6() {
  const double t0 = now_sec();
  DecaySweep sweep = run_sweep(nullptr);
  double max_all = 0.0, min_top = 1e300;
  for (const DecayRow& r : sweep.rows) {
    max_all = std::max(max_all, r.ell * r.norm2);
    if (r.ell >= kTwoPi * 8) min_top = std::min(min_top, r.ell * r.norm2);
  }
  const double dt = now_sec() - t0;
  Outcome o;
  o.pass = sweep.slope_fit >= -1.3 && sweep.slope_fit <= -0.7 && max_all <= 2 * min_top &&
           dt < 1200.0;
  o.metrics = "slope " + fmt(sweep.slope_fit) + ", max ell*norm " + fmt(max_all) +
              " vs 2*top-half min " + fmt(2 * min_top) + ", " + fmt(dt) + " s";
  return o;
}

// --- 7: contour localization at every sweep height and coupling --------------

Outcome criterion7() {
  const double t0 = now_sec();
  const MediumSpec med = defect_medium();
  const BasisPolicy policy{4, 4};
  const double tau1 = kTwoPi;
  const double lambda = -1.0;
  const double delta = kPi / 8;
  const std::vector<RectContour> contours = {
      {+1, 0.0, delta}, {+1, kTwoPi, delta}, {-1, 0.0, delta}, {-1, kTwoPi, delta}};

  int checked = 0, qplus_hits = 0;
  bool ok = true;
  std::string fail;
  for (int i = 4; i <= 12 && ok; ++i) {
    const double ell = kTwoPi * i;
    const cplx k2(kPi, kPi / 2 + ell);
    const ModeBasis basis = policy.nominal_for(ell, tau1);
    for (double mu : {0.0, lambda / 2, lambda}) {
      std::vector<PoleRecord> poles = dedupe_poles(pencil_eigs(k2, mu, med, basis, tau1), 5e-4);
      std::vector<int> ranks = riesz_ranks(contours, k2, mu, med, basis, 32);
      for (size_t c = 0; c < contours.size(); ++c) {
        bool holds_qplus = false;
        for (const PoleRecord& p : poles) {
          if (p.k1.imag() <= 1e-6) continue;  // up poles only
          double lo = contours[c].sign * kPi / 2 - 2 * delta;
          double hi = contours[c].sign * kPi / 2 + 2 * delta;
          if (p.k1.real() > lo && p.k1.real() < hi && p.k1.imag() > contours[c].m2 - kTwoPi &&
              p.k1.imag() < contours[c].m2)
            holds_qplus = true;
        }
        ++checked;
        if (holds_qplus) {
          ++qplus_hits;
          if (ranks[c] != 1) {
            ok = false;
            fail = "rank " + std::to_string(ranks[c]) + " on a q+ contour at ell/2pi = " +
                   std::to_string(i) + ", mu = " + fmt(mu);
          }
        }
        if (ranks[c] >= 2) {
          ok = false;
          fail = "rank " + std::to_string(ranks[c]) + " >= 2 at ell/2pi = " +
                 std::to_string(i) + ", mu = " + fmt(mu);
        }
      }
    }
  }
  const double dt = now_sec() - t0;
  Outcome o;
  o.pass = ok && qplus_hits > 0;
  o.metrics = std::to_string(checked) + " contour checks, " + std::to_string(qplus_hits) +
              " holding a q+ pole" + (ok ? "" : "; " + fail) + ", " + fmt(dt) + " s";
  return o;
}

// --- 8: invertibility certificates past the decay knee -----------------------

Outcome criterion8() {
  const double t0 = now_sec();
  std::vector<AFamily> families;
  DecaySweep sweep = run_sweep(&families);
  const MediumSpec med = defect_medium();
  const BasisPolicy policy{4, 4};

  int knee = -1;
  bool ok = true;
  double min_sigma = 1e300, max_neumann_past = 0.0;
  for (size_t i = 0; i < families.size(); ++i) {
    const ModeBasis basis = policy.nominal_for(sweep.rows[i].ell, kTwoPi);
    FredholmReport rep = fredholm_report(families[i], -1.0, med, basis);
    if (knee < 0 && rep.neumann_bound < 1.0) knee = static_cast<int>(i);
    if (knee >= 0 && static_cast<int>(i) >= knee) {
      max_neumann_past = std::max(max_neumann_past, rep.neumann_bound);
      min_sigma = std::min(min_sigma, rep.sigma_min);
      if (!(rep.neumann_bound < 1.0 && rep.sigma_min >= 0.5)) ok = false;
    }
  }
  const double dt = now_sec() - t0;
  Outcome o;
  o.pass = knee >= 0 && ok;
  o.metrics = "knee at ell/2pi = " + (knee >= 0 ? std::to_string(knee + 4) : std::string("none")) +
              ", max neumann past knee " + fmt(max_neumann_past) + ", min sigma_min " +
              fmt(min_sigma) + ", " + fmt(dt) + " s";
  return o;
}

// --- 9: pole-count constancy and forward-backward return ---------------------

Outcome criterion9() {
  const double t0 = now_sec();
  RunConfig cfg = default_run_config();
  const PathSpec fwd_path = make_path_spec(cfg);
  const double tau1 = cfg.tau1();
  const ModeBasis basis = cfg.base_basis();

  Trajectory fwd = track_poles(fwd_path, cfg.spectral.lambda, cfg.medium, basis, tau1);
  bool constant = fwd.N > 0;
  for (const TrackStep& st : fwd.steps) {
    if (static_cast<int>(st.poles.size()) != fwd.N) constant = false;
    if (st.flags == 0 && st.n_trusted != fwd.N) constant = false;
  }

  PathSpec bwd_path = fwd_path;
  std::reverse(bwd_path.waypoints.begin(), bwd_path.waypoints.end());
  Trajectory bwd = track_poles(bwd_path, cfg.spectral.lambda, cfg.medium, basis, tau1);

  double worst_return = 1e300;
  if (bwd.N == fwd.N && !fwd.steps.empty() && !bwd.steps.empty()) {
    worst_return = 0.0;
    for (const PoleRecord& p : bwd.steps.back().poles) {
      double best = 1e300;
      for (const PoleRecord& q : fwd.steps.front().poles)
        best = std::min(best, cyl_dist(p.k1, q.k1));
      worst_return = std::max(worst_return, best);
    }
  }
  const double dt = now_sec() - t0;
  Outcome o;
  o.pass = constant && bwd.N == fwd.N && worst_return <= 1e-6;
  o.metrics = "N = " + std::to_string(fwd.N) + " over " + std::to_string(fwd.steps.size()) +
              " steps, worst return distance " + fmt(worst_return) + ", " + fmt(dt) + " s";
  return o;
}

// --- 10: cell-wise Bloch transform isometry and round trip -------------------

Outcome criterion10() {
  const double t0 = now_sec();
  double worst_iso = 0.0, worst_round = 0.0;
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Axis axis = trial % 2 == 0 ? Axis::x1 : Axis::x2;
    GridFunction f = axis == Axis::x1 ? GridFunction::zeros(8, 8, 1, 6)
                                      : GridFunction::zeros(1, 6, 8, 8);
    for (Eigen::Index i = 0; i < f.values.rows(); ++i)
      for (Eigen::Index j = 0; j < f.values.cols(); ++j) f.values(i, j) = cplx(u(rng), u(rng));

    FloquetField field = floquet_forward(axis, f);
    double total = 0.0;
    for (const GridFunction& s : field.slices) total += s.norm() * s.norm();
    worst_iso = std::max(worst_iso,
                         std::abs(total - f.norm() * f.norm()) / (f.norm() * f.norm()));

    GridFunction back = floquet_inverse(axis, field);
    worst_round = std::max(worst_round, (back.values - f.values).norm() / f.norm());
  }
  const double dt = now_sec() - t0;
  Outcome o;
  o.pass = worst_iso <= 1e-12 && worst_round <= 1e-12 && dt < 5.0;
  o.metrics = "100 grids, worst isometry defect " + fmt(worst_iso) + ", worst round trip " +
              fmt(worst_round) + ", " + fmt(dt) + " s";
  return o;
}

// --- 11: bit-identical repeated runs -----------------------------------------

Outcome criterion11() {
#ifndef STRIPRES_CLI_PATH
  return {false, "CLI path not configured"};
#else
  const double t0 = now_sec();
  const fs::path root = fs::temp_directory_path();
  const fs::path dir_a = root / "stripres_acc11_a";
  const fs::path dir_b = root / "stripres_acc11_b";
  const fs::path log_a = root / "stripres_acc11_a.log";
  const fs::path log_b = root / "stripres_acc11_b.log";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  auto invoke = [](const fs::path& out, const fs::path& log) {
    std::string cmd = std::string(STRIPRES_CLI_PATH) + " run-all --out " + out.string() + " > " +
                      log.string() + " 2>&1";
    return std::system(cmd.c_str());
  };
  int rc_a = invoke(dir_a, log_a);
  int rc_b = invoke(dir_b, log_b);

  auto listing = [](const fs::path& dir) {
    std::vector<std::string> names;
    if (fs::exists(dir))
      for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) names.push_back(fs::relative(e.path(), dir).string());
    std::sort(names.begin(), names.end());
    return names;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };

  std::vector<std::string> files_a = listing(dir_a), files_b = listing(dir_b);
  bool same = rc_a == 0 && rc_b == 0 && !files_a.empty() && files_a == files_b;
  std::string first_diff;
  if (same)
    for (const std::string& name : files_a)
      if (slurp(dir_a / name) != slurp(dir_b / name)) {
        same = false;
        first_diff = name;
        break;
      }
  const double dt = now_sec() - t0;
  Outcome o;
  o.pass = same;
  o.metrics = std::to_string(files_a.size()) + " files compared, exit codes " +
              std::to_string(rc_a) + "/" + std::to_string(rc_b) +
              (first_diff.empty() ? "" : ", first difference " + first_diff) + ", " + fmt(dt) +
              " s";
  return o;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  pin_blas_single_thread();
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--criterion N]\n";
      return 2;
    }
  }

  Outcome (*checks[])() = {criterion1, criterion2, criterion3, criterion4,  criterion5,
                           criterion6, criterion7, criterion8, criterion9,  criterion10,
                           criterion11};
  const int n = static_cast<int>(sizeof(checks) / sizeof(checks[0]));
  if (only < 0 || only > n) {
    std::cerr << "criterion out of range\n";
    return 2;
  }

  int failures = 0;
  for (int i = 1; i <= n; ++i) {
    if (only != 0 && i != only) continue;
    Outcome o;
    try {
      o = checks[i - 1]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.metrics = std::string("exception: ") + e.what();
    }
    std::cout << "criterion " << i << ": " << o.metrics << " -> " << (o.pass ? "pass" : "FAIL")
              << std::endl;
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
