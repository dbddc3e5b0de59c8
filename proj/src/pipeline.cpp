#include "stripres/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "stripres/cell_operator.hpp"
#include "stripres/errors.hpp"
#include "stripres/io_util.hpp"
#include "stripres/parallel.hpp"
#include "stripres/symbol.hpp"

namespace stripres {

using json = nlohmann::ordered_json;

void RunConfig::validate() const {
  medium.validate();
  const SpectralConfig& s = spectral;
  if (!(s.theta > 0 && s.theta < kPi)) throw ConfigError("theta must lie in (0, pi)");
  const double dmax = std::min(kPi / 4, kPi - s.theta);
  if (!(s.delta > 0 && s.delta < dmax))
    throw ConfigError("delta must lie in (0, min(pi/4, pi - theta))");
  if (s.tau1_override != 0.0) {
    double n = s.tau1_override / kTwoPi;
    if (!(s.tau1_override > 0) || std::abs(n - std::round(n)) > 1e-9)
      throw ConfigError("tau1_override must be a positive multiple of 2*pi");
  }
  if (s.line_scan_samples < 16)
    throw ConfigError("line_scan_samples must be >= 16 (pole-free line scan contract)");
  if (s.z0_samples < 8) throw ConfigError("z0_samples must be >= 8 for classification");
  if (s.ells_over_2pi.empty()) throw ConfigError("ells_over_2pi must be nonempty");
  for (size_t i = 0; i < s.ells_over_2pi.size(); ++i) {
    if (s.ells_over_2pi[i] <= 0) throw ConfigError("decay heights must be positive");
    if (i > 0 && s.ells_over_2pi[i] <= s.ells_over_2pi[i - 1])
      throw ConfigError("decay heights must strictly ascend");
  }
  if (s.riesz_q_nodes < 4 || s.riesz_q_nodes % 4 != 0)
    throw ConfigError("riesz_q_nodes must be a positive multiple of 4");
  if (s.mu_fractions.empty()) throw ConfigError("mu_fractions must be nonempty");
  if (s.n1_margin < 1 || s.n2_margin < 1) throw ConfigError("basis margins must be >= 1");
  if (path.max_step <= 0) throw ConfigError("max_step must be positive");
  if (path.collision_tol <= 0) throw ConfigError("collision_tol must be positive");
  if (path.start_im < 0 || path.start_im >= s.delta)
    throw ConfigError("start_im must lie in [0, delta)");
  if (path.auto_path) {
    if (path.im_top <= start_im()) throw ConfigError("im_top must exceed the entry height");
  } else {
    if (path.waypoints.size() < 2) throw ConfigError("manual path needs >= 2 waypoints");
    for (cplx w : path.waypoints)
      if (!(w.real() > s.theta && w.real() < kPi + s.delta))
        throw ConfigError("waypoint outside the band theta < Re k2 < pi + delta");
  }
}

double RunConfig::tau1() const {
  if (spectral.tau1_override != 0.0) return spectral.tau1_override;
  return select_tau1(spectral.lambda, sup_norm_eps0(medium), spectral.theta);
}

double RunConfig::start_im() const {
  return path.start_im > 0 ? path.start_im : spectral.delta / 8;
}

ModeBasis RunConfig::base_basis() const {
  double top = path.im_top;
  if (!path.auto_path)
    for (cplx w : path.waypoints) top = std::max(top, w.imag());
  int k1 = spectral.base_n1_half;
  int k2 = spectral.base_n2_half;
  if (k1 <= 0) k1 = static_cast<int>(std::ceil(std::max(top, 0.0) / kTwoPi)) + spectral.n1_margin;
  if (k2 <= 0) k2 = static_cast<int>(std::ceil(tau1() / kTwoPi)) + spectral.n2_margin;
  return ModeBasis::symmetric(k1, k2);
}

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.medium.eps0_background = 1.0;
  cfg.medium.eps1_rectangles = {{0.3, 0.7, 0.3, 0.7, 1.0}};
  return cfg;
}

PathSpec make_path_spec(const RunConfig& cfg) {
  PathSpec ps;
  ps.max_step = cfg.path.max_step;
  ps.collision_tol = cfg.path.collision_tol;
  ps.theta = cfg.spectral.theta;
  ps.delta = cfg.spectral.delta;
  if (cfg.path.auto_path) {
    const double s0 = cfg.start_im();
    ps.waypoints = {cplx((kPi + cfg.spectral.theta) / 2, s0), cplx(kPi, s0),
                    cplx(kPi, cfg.path.im_top)};
  } else {
    ps.waypoints = cfg.path.waypoints;
  }
  return ps;
}

bool RunReport::all_passed() const {
  for (const StageResult& s : stages)
    if (!s.ran || !s.passed) return false;
  return !stages.empty();
}

const StageResult* RunReport::stage(const std::string& name) const {
  for (const StageResult& s : stages)
    if (s.name == name) return &s;
  return nullptr;
}

namespace {

struct StageOutcome {
  bool passed = false;
  std::string detail;
};

// Sequential stage driver: a failure (or exception) halts everything after it.
class StageRunner {
 public:
  explicit StageRunner(RunReport& rep) : rep_(rep) {}

  void run(const std::string& name, const std::function<StageOutcome()>& body) {
    StageResult r;
    r.name = name;
    if (halted_) {
      r.detail = "skipped: earlier stage failed";
      rep_.stages.push_back(std::move(r));
      return;
    }
    r.ran = true;
    try {
      StageOutcome out = body();
      r.passed = out.passed;
      r.detail = std::move(out.detail);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    if (!r.passed) halted_ = true;
    rep_.stages.push_back(std::move(r));
  }

 private:
  RunReport& rep_;
  bool halted_ = false;
};

bool contour_contains(const RectContour& c, cplx k1) {
  const double mid = c.sign * kPi / 2;
  return k1.real() >= mid - 2 * c.delta && k1.real() <= mid + 2 * c.delta &&
         k1.imag() >= c.m2 - kTwoPi && k1.imag() <= c.m2;
}

std::string fmt_brief(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

RunReport run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  pin_blas_single_thread();

  const double lambda = cfg.spectral.lambda;
  const double theta = cfg.spectral.theta;
  const double delta = cfg.spectral.delta;
  const double tau1 = cfg.tau1();
  const ModeBasis base = cfg.base_basis();
  const BasisPolicy policy{cfg.spectral.n1_margin, cfg.spectral.n2_margin};
  const double dedupe_tol = cfg.path.collision_tol / 2;
  const int threads = cfg.quad.threads;

  std::vector<double> ells;
  for (double e : cfg.spectral.ells_over_2pi) ells.push_back(kTwoPi * e);

  RunReport rep;
  rep.tau1 = tau1;
  StageRunner stages(rep);

  std::string line_scan_csv_text;
  std::vector<AFamily> families;

  stages.run("select_tau1", [&]() -> StageOutcome {
    std::ostringstream os;
    os << "tau1 = " << fmt_brief(tau1)
       << (cfg.spectral.tau1_override != 0.0 ? " (override)" : " (selected)");
    return {true, os.str()};
  });

  stages.run("pole_free_lines", [&]() -> StageOutcome {
    std::vector<cplx> probes;
    probes.emplace_back((theta + kPi - delta / 2) / 2, 0.0);
    if (cfg.path.auto_path)
      probes.emplace_back(kPi, cfg.path.im_top);
    else
      probes.push_back(cfg.path.waypoints.back());
    std::ostringstream csv;
    csv << "re_k2,im_k2,im_k1,min_sigma\n";
    double worst = std::numeric_limits<double>::infinity();
    for (cplx k2p : probes)
      for (int sgn : {+1, -1}) {
        double v = sigma_min_scan(sgn * tau1, k2p, lambda, cfg.medium, base,
                                  cfg.spectral.line_scan_samples, threads);
        worst = std::min(worst, v);
        csv << fmt17(k2p.real()) << ',' << fmt17(k2p.imag()) << ',' << fmt17(sgn * tau1) << ','
            << fmt17(v) << '\n';
      }
    line_scan_csv_text = csv.str();
    std::ostringstream os;
    os << "min sigma_min on Im k1 = +-tau1: " << fmt_brief(worst);
    return {worst > 1e-6, os.str()};
  });

  stages.run("classify_delta0", [&]() -> StageOutcome {
    const double lo = theta, hi = kPi - delta / 2;
    const std::vector<std::pair<double, double>> windows = {
        {lo, hi}, {lo, (lo + hi) / 2}, {(lo + hi) / 2, hi}};
    std::string last_err = "no window classified";
    for (const auto& [wlo, whi] : windows) {
      std::vector<std::vector<PoleRecord>> samples;
      for (int i = 0; i < cfg.spectral.z0_samples; ++i) {
        double u = wlo + (i + 0.5) * (whi - wlo) / cfg.spectral.z0_samples;
        samples.push_back(
            dedupe_poles(pencil_eigs(cplx(u, 0.0), lambda, cfg.medium, base, tau1), dedupe_tol));
      }
      try {
        ClassifyResult cls = classify_and_delta0(samples);
        rep.delta0 = cls.delta0;
        rep.n_plus = cls.n_plus;
        rep.n_minus = cls.n_minus;
        std::ostringstream os;
        os << "window (" << fmt_brief(wlo) << ", " << fmt_brief(whi)
           << "): delta0 = " << fmt_brief(cls.delta0) << ", N+ = " << cls.n_plus
           << ", N- = " << cls.n_minus << ", Nreal = " << cls.n_real;
        return {true, os.str()};
      } catch (const GapCollapse& e) {
        last_err = e.what();
      }
    }
    return {false, last_err};
  });

  stages.run("track_path", [&]() -> StageOutcome {
    rep.trajectory = track_poles(make_path_spec(cfg), lambda, cfg.medium, base, tau1);
    rep.n = rep.trajectory.N;
    int flagged = 0, mismatched = 0;
    for (const TrackStep& st : rep.trajectory.steps) {
      if (st.flags != 0)
        ++flagged;
      else if (st.n_trusted != rep.trajectory.N)
        ++mismatched;
    }
    std::ostringstream os;
    os << "N = " << rep.trajectory.N << " over " << rep.trajectory.steps.size() << " steps, "
       << flagged << " flagged, " << mismatched << " unflagged count changes";
    return {mismatched == 0, os.str()};
  });

  stages.run("riesz_localization", [&]() -> StageOutcome {
    const std::vector<RectContour> contours = {
        {+1, 0.0, delta}, {+1, kTwoPi, delta}, {-1, 0.0, delta}, {-1, kTwoPi, delta}};
    int certified = 0;
    std::string first_fail;
    for (double ell : ells) {
      cplx k2(kPi, kPi / 2 + ell);
      ModeBasis bl = policy.nominal_for(ell, tau1);
      std::vector<PoleRecord> qplus;
      for (const PoleRecord& r :
           dedupe_poles(pencil_eigs(k2, lambda, cfg.medium, bl, tau1), dedupe_tol))
        if (r.k1.imag() > 1e-6 && r.k1.imag() < tau1 - 1e-6) qplus.push_back(r);
      bool ok = true;
      for (double frac : cfg.spectral.mu_fractions) {
        const double mu = lambda * frac;
        std::vector<int> ranks =
            riesz_ranks(contours, k2, mu, cfg.medium, bl, cfg.spectral.riesz_q_nodes);
        for (size_t c = 0; c < contours.size(); ++c) {
          RieszRecord rec;
          rec.ell = ell;
          rec.mu = mu;
          rec.contour_sign = contours[c].sign;
          rec.contour_m2 = contours[c].m2;
          rec.rank = ranks[c];
          for (const PoleRecord& p : qplus)
            if (contour_contains(contours[c], p.k1)) rec.holds_qplus = true;
          rep.riesz.push_back(rec);
          if ((rec.holds_qplus && rec.rank != 1) || rec.rank >= 2) {
            ok = false;
            if (first_fail.empty()) {
              std::ostringstream os;
              os << "ell = " << fmt_brief(ell) << ", mu = " << fmt_brief(mu) << ", contour "
                 << (contours[c].sign > 0 ? "+" : "-") << fmt_brief(contours[c].m2)
                 << ": rank " << rec.rank;
              first_fail = os.str();
            }
          }
        }
      }
      if (ok) {
        ++certified;
        if (rep.m_empirical == 0.0) rep.m_empirical = ell;
      }
    }
    std::ostringstream os;
    os << certified << "/" << ells.size() << " heights certified";
    if (!first_fail.empty()) os << "; first failure: " << first_fail;
    return {certified == static_cast<int>(ells.size()), os.str()};
  });

  stages.run("assemble_decay", [&]() -> StageOutcome {
    rep.sweep = a_decay_sweep(kPi, ells, lambda, cfg.medium, policy, tau1, cfg.quad, &families);
    rep.slope = rep.sweep.slope_fit;
    rep.c_empirical = rep.sweep.c_empirical;
    std::ostringstream os;
    os << "slope = " << fmt_brief(rep.slope) << ", max ell*||A|| = " << fmt_brief(rep.c_empirical);
    bool ok = rep.slope >= -1.3 && rep.slope <= -0.7;
    if (!ok) os << " (slope outside [-1.3, -0.7])";
    return {ok, os.str()};
  });

  stages.run("fredholm_scan", [&]() -> StageOutcome {
    for (size_t i = 0; i < families.size(); ++i)
      rep.fredholm.push_back(
          fredholm_report(families[i], lambda, cfg.medium, policy.nominal_for(ells[i], tau1)));
    int knee = -1;
    for (size_t i = 0; i < rep.fredholm.size(); ++i)
      if (rep.fredholm[i].neumann_bound < 1.0) {
        knee = static_cast<int>(i);
        break;
      }
    if (knee < 0) return {false, "no height reaches neumann_bound < 1"};
    double worst = std::numeric_limits<double>::infinity();
    for (size_t i = knee; i < rep.fredholm.size(); ++i)
      worst = std::min(worst, rep.fredholm[i].sigma_min);
    std::ostringstream os;
    os << "knee at ell = " << fmt_brief(ells[knee])
       << ", min sigma_min past knee = " << fmt_brief(worst);
    return {worst >= 0.5, os.str()};
  });

  if (!cfg.output.dir.empty()) {
    ensure_dir(cfg.output.dir);
    auto emit = [&](const std::string& name, const std::string& text) {
      atomic_write_text(cfg.output.dir + "/" + name, text);
      rep.artifacts.push_back(name);
    };
    if (cfg.output.write_csv) {
      if (!line_scan_csv_text.empty()) emit("line_scan.csv", line_scan_csv_text);
      if (!rep.trajectory.steps.empty()) emit("trajectory.csv", trajectory_csv(rep.trajectory));
      if (!rep.riesz.empty()) {
        std::ostringstream os;
        os << "ell,mu,contour_sign,contour_m2,rank,holds_qplus\n";
        for (const RieszRecord& r : rep.riesz)
          os << fmt17(r.ell) << ',' << fmt17(r.mu) << ',' << r.contour_sign << ','
             << fmt17(r.contour_m2) << ',' << r.rank << ',' << (r.holds_qplus ? 1 : 0) << '\n';
        emit("riesz.csv", os.str());
      }
      if (!rep.sweep.rows.empty()) emit("decay.csv", decay_csv(rep.sweep));
      if (!rep.fredholm.empty()) emit("fredholm.csv", fredholm_csv(rep.fredholm));
    }
    rep.artifacts.push_back("report.json");
    atomic_write_text(cfg.output.dir + "/report.json", report_to_json_text(rep, cfg));
  }
  return rep;
}

namespace {

json rectangles_to_json(const std::vector<Rectangle>& rects) {
  json arr = json::array();
  for (const Rectangle& r : rects) arr.push_back({r.x1_lo, r.x1_hi, r.x2_lo, r.x2_hi, r.value});
  return arr;
}

std::vector<Rectangle> rectangles_from_json(const json& arr) {
  std::vector<Rectangle> out;
  for (const auto& it : arr) {
    if (!it.is_array() || it.size() != 5)
      throw ConfigError("rectangle entries must be [x1_lo, x1_hi, x2_lo, x2_hi, value]");
    out.push_back({it[0].get<double>(), it[1].get<double>(), it[2].get<double>(),
                   it[3].get<double>(), it[4].get<double>()});
  }
  return out;
}

json config_sections_json(const RunConfig& cfg, bool with_output) {
  json j;
  j["medium"] = {{"eps0_background", cfg.medium.eps0_background},
                 {"eps0_rectangles", rectangles_to_json(cfg.medium.eps0_rectangles)},
                 {"eps1_rectangles", rectangles_to_json(cfg.medium.eps1_rectangles)}};
  const SpectralConfig& s = cfg.spectral;
  j["spectral"] = {{"lambda", s.lambda},
                   {"theta", s.theta},
                   {"delta", s.delta},
                   {"tau1_override", s.tau1_override},
                   {"base_n1_half", s.base_n1_half},
                   {"base_n2_half", s.base_n2_half},
                   {"n1_margin", s.n1_margin},
                   {"n2_margin", s.n2_margin},
                   {"line_scan_samples", s.line_scan_samples},
                   {"z0_samples", s.z0_samples},
                   {"ells_over_2pi", s.ells_over_2pi},
                   {"riesz_q_nodes", s.riesz_q_nodes},
                   {"mu_fractions", s.mu_fractions}};
  json wps = json::array();
  for (cplx w : cfg.path.waypoints) wps.push_back({w.real(), w.imag()});
  j["path"] = {{"auto", cfg.path.auto_path},     {"waypoints", wps},
               {"max_step", cfg.path.max_step},  {"collision_tol", cfg.path.collision_tol},
               {"start_im", cfg.path.start_im},  {"im_top", cfg.path.im_top}};
  j["quadrature"] = {{"q_line", cfg.quad.q_line},
                     {"q_circle", cfg.quad.q_circle},
                     {"big_margin_n1", cfg.quad.big_margin_n1},
                     {"aliasing_budget", cfg.quad.aliasing_budget},
                     {"check_convergence", cfg.quad.check_convergence},
                     {"conv_tol", cfg.quad.conv_tol},
                     {"threads", cfg.quad.threads}};
  if (with_output)
    j["output"] = {{"dir", cfg.output.dir}, {"write_csv", cfg.output.write_csv}};
  return j;
}

}  // namespace

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  RunConfig cfg = default_run_config();
  try {
    if (j.contains("medium")) {
      const json& m = j["medium"];
      cfg.medium.eps0_background = m.value("eps0_background", cfg.medium.eps0_background);
      if (m.contains("eps0_rectangles"))
        cfg.medium.eps0_rectangles = rectangles_from_json(m["eps0_rectangles"]);
      if (m.contains("eps1_rectangles"))
        cfg.medium.eps1_rectangles = rectangles_from_json(m["eps1_rectangles"]);
    }
    if (j.contains("spectral")) {
      const json& s = j["spectral"];
      SpectralConfig& c = cfg.spectral;
      c.lambda = s.value("lambda", c.lambda);
      c.theta = s.value("theta", c.theta);
      c.delta = s.value("delta", c.delta);
      c.tau1_override = s.value("tau1_override", c.tau1_override);
      c.base_n1_half = s.value("base_n1_half", c.base_n1_half);
      c.base_n2_half = s.value("base_n2_half", c.base_n2_half);
      c.n1_margin = s.value("n1_margin", c.n1_margin);
      c.n2_margin = s.value("n2_margin", c.n2_margin);
      c.line_scan_samples = s.value("line_scan_samples", c.line_scan_samples);
      c.z0_samples = s.value("z0_samples", c.z0_samples);
      if (s.contains("ells_over_2pi"))
        c.ells_over_2pi = s["ells_over_2pi"].get<std::vector<double>>();
      c.riesz_q_nodes = s.value("riesz_q_nodes", c.riesz_q_nodes);
      if (s.contains("mu_fractions"))
        c.mu_fractions = s["mu_fractions"].get<std::vector<double>>();
    }
    if (j.contains("path")) {
      const json& p = j["path"];
      PathConfig& c = cfg.path;
      c.auto_path = p.value("auto", c.auto_path);
      if (p.contains("waypoints")) {
        c.waypoints.clear();
        for (const auto& w : p["waypoints"]) {
          if (!w.is_array() || w.size() != 2) throw ConfigError("waypoints must be [re, im]");
          c.waypoints.emplace_back(w[0].get<double>(), w[1].get<double>());
        }
      }
      c.max_step = p.value("max_step", c.max_step);
      c.collision_tol = p.value("collision_tol", c.collision_tol);
      c.start_im = p.value("start_im", c.start_im);
      c.im_top = p.value("im_top", c.im_top);
    }
    if (j.contains("quadrature")) {
      const json& q = j["quadrature"];
      QuadratureSpec& c = cfg.quad;
      c.q_line = q.value("q_line", c.q_line);
      c.q_circle = q.value("q_circle", c.q_circle);
      c.big_margin_n1 = q.value("big_margin_n1", c.big_margin_n1);
      c.aliasing_budget = q.value("aliasing_budget", c.aliasing_budget);
      c.check_convergence = q.value("check_convergence", c.check_convergence);
      c.conv_tol = q.value("conv_tol", c.conv_tol);
      c.threads = q.value("threads", c.threads);
    }
    if (j.contains("output")) {
      const json& o = j["output"];
      cfg.output.dir = o.value("dir", cfg.output.dir);
      cfg.output.write_csv = o.value("write_csv", cfg.output.write_csv);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field failure: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json_text(const RunConfig& cfg) {
  return config_sections_json(cfg, true).dump(2) + "\n";
}

std::string report_to_json_text(const RunReport& rep, const RunConfig& cfg) {
  json j;
  j["passed"] = rep.all_passed();
  j["tau1"] = rep.tau1;
  j["delta0"] = rep.delta0;
  j["m_empirical"] = rep.m_empirical;
  j["c_empirical"] = rep.c_empirical;
  j["slope"] = rep.slope;
  j["n"] = rep.n;
  j["n_plus"] = rep.n_plus;
  j["n_minus"] = rep.n_minus;
  json st = json::array();
  for (const StageResult& s : rep.stages)
    st.push_back({{"name", s.name}, {"ran", s.ran}, {"passed", s.passed}, {"detail", s.detail}});
  j["stages"] = st;
  j["artifacts"] = rep.artifacts;
  j["config"] = config_sections_json(cfg, false);
  return j.dump(2) + "\n";
}

}  // namespace stripres
