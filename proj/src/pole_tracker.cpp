#include "stripres/pole_tracker.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "stripres/cell_operator.hpp"
#include "stripres/errors.hpp"
#include "stripres/io_util.hpp"

namespace stripres {
namespace {

struct RawEig {
  cplx value;
  double tail;
};

double eigvec_tail(const VecC& head, const ModeBasis& basis) {
  double edge = 0, total = 0;
  for (int i = 0; i < basis.size(); ++i) {
    auto [n1, n2] = basis.at(i);
    double w = std::norm(head(i));
    total += w;
    if (basis.edge(n1, n2)) edge += w;
  }
  return total > 0 ? edge / total : 1.0;
}

bool in_z_band(cplx k2, const PathSpec& path) {
  return k2.real() > path.theta && k2.real() < kPi + path.delta;
}

double min_pairwise_cyl(const std::vector<PoleRecord>& recs) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < recs.size(); ++i)
    for (size_t j = i + 1; j < recs.size(); ++j)
      best = std::min(best, cyl_dist(recs[i].k1, recs[j].k1));
  return best;
}

struct MatchResult {
  std::vector<PoleRecord> matched;
  bool ambiguous = false;
};

// Nearest-neighbor matching of tracked records onto fresh candidates in the
// cylinder metric.  Ambiguous when the runner-up is within 2x of the nearest
// or when two tracked records claim the same candidate.
MatchResult match_records(const std::vector<PoleRecord>& prev,
                          const std::vector<PoleRecord>& cand) {
  MatchResult res;
  if (cand.size() < prev.size()) {
    res.ambiguous = true;
    return res;
  }
  std::vector<int> taken(cand.size(), -1);
  for (const PoleRecord& p : prev) {
    double best = std::numeric_limits<double>::infinity(), second = best;
    int arg = -1;
    for (size_t c = 0; c < cand.size(); ++c) {
      double d = cyl_dist(p.k1, cand[c].k1);
      if (d < best) {
        second = best;
        best = d;
        arg = static_cast<int>(c);
      } else if (d < second) {
        second = d;
      }
    }
    if (arg < 0 || (std::isfinite(second) && second < 2.0 * best) || taken[arg] >= 0) {
      res.ambiguous = true;
      return res;
    }
    taken[arg] = p.index;
    PoleRecord r = cand[arg];
    r.index = p.index;
    r.klass = p.klass;
    res.matched.push_back(r);
  }
  return res;
}

}  // namespace

const char* pole_class_name(PoleClass klass) {
  switch (klass) {
    case PoleClass::up: return "up";
    case PoleClass::down: return "down";
    case PoleClass::real_line: return "real";
    case PoleClass::untrusted: return "untrusted";
  }
  return "?";
}

MatC pencil_companion(cplx k2, double mu, const MediumSpec& medium, const ModeBasis& basis) {
  const int n = basis.size();
  MatC w = MatC::Zero(2 * n, 2 * n);
  w.block(0, n, n, n).setIdentity();
  w.block(n, 0, n, n) = mu * convolution_matrix(medium, EpsPart::eps0, basis);
  for (int i = 0; i < n; ++i) {
    w(n + i, i) -= symbol(basis.m1(i), basis.m2(i), cplx(0, 0), k2);
    w(n + i, n + i) = -2.0 * basis.m1(i);
  }
  return w;
}

std::vector<PoleRecord> pencil_eigs(cplx k2, double mu, const MediumSpec& medium,
                                    const ModeBasis& basis, double tau1,
                                    const PencilOptions& opts) {
  const int n = basis.size();
  MatC w = pencil_companion(k2, mu, medium, basis);
  VecC vals;
  MatC vecs;
  eig_dense(w, vals, vecs);

  std::vector<RawEig> raws;
  for (int i = 0; i < 2 * n; ++i) {
    if (std::abs(vals(i).imag()) >= tau1) continue;
    VecC head = vecs.col(i).head(n);
    double hn = head.norm();
    double tail = hn > 0 ? eigvec_tail(head / hn, basis) : 1.0;
    if (opts.check_residual && hn > 0) {
      VecC u = head / hn;
      MatC q = assemble_shifted({vals(i), k2}, mu, medium, basis);
      double resid = (q * u).norm() / std::max(1.0, spectral_norm(q));
      if (resid > opts.resid_tol)
        throw EigKernelFailure("pencil eigenvector residual " + std::to_string(resid) +
                               " above tolerance");
    }
    raws.push_back({vals(i), tail});
  }

  std::vector<PoleRecord> out;
  for (const RawEig& r : raws) {
    PoleRecord rec;
    rec.k1_raw = r.value;
    rec.k1 = cplx(fold_pi(r.value.real()), r.value.imag());
    rec.tail_mass = r.tail;
    rec.klass = r.tail <= opts.tail_tol ? PoleClass::up : PoleClass::untrusted;
    bool merged = false;
    for (PoleRecord& kept : out) {
      if (std::abs(kept.k1 - rec.k1) < opts.fold_merge_tol) {
        if (rec.tail_mass < kept.tail_mass) kept = rec;
        merged = true;
        break;
      }
    }
    if (!merged) out.push_back(rec);
  }
  if (!opts.include_untrusted) {
    out.erase(std::remove_if(out.begin(), out.end(),
                             [&](const PoleRecord& r) { return r.tail_mass > opts.tail_tol; }),
              out.end());
  }
  // Classification here is provisional (trusted records default to `up`);
  // classify_and_delta0 assigns the real klass from sample geometry.
  std::sort(out.begin(), out.end(), [](const PoleRecord& a, const PoleRecord& b) {
    if (a.k1.imag() != b.k1.imag()) return a.k1.imag() < b.k1.imag();
    return a.k1.real() < b.k1.real();
  });
  return out;
}

std::vector<PoleRecord> dedupe_poles(const std::vector<PoleRecord>& records, double tol) {
  std::vector<std::vector<PoleRecord>> groups;
  for (const PoleRecord& r : records) {
    std::vector<size_t> hits;
    for (size_t g = 0; g < groups.size(); ++g)
      for (const PoleRecord& q : groups[g])
        if (cyl_dist(q.k1, r.k1) < tol) {
          hits.push_back(g);
          break;
        }
    if (hits.empty()) {
      groups.push_back({r});
    } else {
      std::vector<PoleRecord> merged{r};
      for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
        merged.insert(merged.end(), groups[*it].begin(), groups[*it].end());
        groups.erase(groups.begin() + static_cast<long>(*it));
      }
      groups.push_back(std::move(merged));
    }
  }
  std::vector<PoleRecord> out;
  for (const auto& g : groups)
    out.push_back(*std::min_element(g.begin(), g.end(),
                                    [](const PoleRecord& a, const PoleRecord& b) {
                                      return a.tail_mass < b.tail_mass;
                                    }));
  std::sort(out.begin(), out.end(), [](const PoleRecord& a, const PoleRecord& b) {
    if (a.k1.imag() != b.k1.imag()) return a.k1.imag() < b.k1.imag();
    return a.k1.real() < b.k1.real();
  });
  return out;
}

ClassifyResult classify_and_delta0(const std::vector<std::vector<PoleRecord>>& samples,
                                   double tol_real) {
  if (samples.size() < 8)
    throw ConfigError("classify_and_delta0: need at least 8 real k2 samples");
  double min_imag = std::numeric_limits<double>::infinity();
  for (const auto& s : samples)
    for (const PoleRecord& r : s)
      if (std::abs(r.k1.imag()) > tol_real)
        min_imag = std::min(min_imag, std::abs(r.k1.imag()));
  if (!std::isfinite(min_imag))
    throw GapCollapse("classify_and_delta0: no non-real poles at any sample");
  if (min_imag < 10.0 * tol_real)
    throw GapCollapse("classify_and_delta0: smallest non-real |Im k1| = " +
                      std::to_string(min_imag) + " leaves no clean delta0");

  ClassifyResult res;
  res.delta0 = 0.5 * min_imag;
  res.samples = samples;
  for (auto& s : res.samples)
    for (PoleRecord& r : s) {
      if (r.tail_mass > 0.05) {
        r.klass = PoleClass::untrusted;
      } else if (std::abs(r.k1.imag()) <= tol_real) {
        r.klass = PoleClass::real_line;
      } else if (r.k1.imag() > res.delta0) {
        r.klass = PoleClass::up;
      } else {
        r.klass = PoleClass::down;
      }
    }
  for (const PoleRecord& r : res.samples.front()) {
    if (r.klass == PoleClass::up) ++res.n_plus;
    if (r.klass == PoleClass::down) ++res.n_minus;
    if (r.klass == PoleClass::real_line) ++res.n_real;
  }
  return res;
}

Trajectory track_poles(const PathSpec& path, double mu, const MediumSpec& medium,
                       const ModeBasis& basis, double tau1, const PencilOptions& opts) {
  if (path.waypoints.size() < 2)
    throw ConfigError("track_poles: need at least two waypoints");
  bool ascends = true, descends = true;
  for (size_t i = 0; i + 1 < path.waypoints.size(); ++i) {
    if (path.waypoints[i + 1].imag() < path.waypoints[i].imag() - 1e-12) ascends = false;
    if (path.waypoints[i + 1].imag() > path.waypoints[i].imag() + 1e-12) descends = false;
  }
  // Forward paths climb into the strip; the reversed traversal of the same
  // path (used by return-trip checks) is the only descending shape allowed.
  if (!ascends && !descends)
    throw ConfigError("track_poles: Im k2 must be monotone along the path");
  for (cplx w : path.waypoints)
    if (!in_z_band(w, path)) throw PathExitsZ("track_poles: waypoint outside Z band");

  const double dedupe_tol = 0.5 * path.collision_tol;
  const double min_step = path.max_step * std::pow(2.0, -14);

  auto poles_at = [&](cplx k2) {
    return dedupe_poles(pencil_eigs(k2, mu, medium, basis, tau1, opts), dedupe_tol);
  };

  Trajectory traj;
  {
    TrackStep s0;
    s0.k2 = path.waypoints.front();
    s0.poles = poles_at(s0.k2);
    for (size_t i = 0; i < s0.poles.size(); ++i) s0.poles[i].index = static_cast<int>(i);
    s0.n_trusted = static_cast<int>(s0.poles.size());
    traj.N = s0.n_trusted;
    traj.steps.push_back(std::move(s0));
  }

  // Lateral detour state: nonzero while the path is displaced in Re k2.
  double offset = 0.0;

  auto advance_to = [&](cplx target, unsigned base_flags) {
    const TrackStep& cur = traj.steps.back();
    cplx from = cur.k2;
    double span = std::abs(target - from);
    if (span < 1e-15) return;
    int pieces = std::max(1, static_cast<int>(std::ceil(span / path.max_step)));
    cplx piece_start = from;
    for (int p = 1; p <= pieces;) {
      cplx goal = from + (target - from) * (double(p) / pieces);
      unsigned flags = base_flags;
      double seg = std::abs(goal - piece_start);
      // Adaptive halving between piece_start and goal.
      while (true) {
        cplx attempt = goal;
        double step = std::abs(attempt - piece_start);
        bool ok = false;
        std::vector<PoleRecord> cand;
        while (true) {
          cand = poles_at(attempt);
          MatchResult m = match_records(traj.steps.back().poles, cand);
          if (!m.ambiguous) {
            TrackStep st;
            st.k2 = attempt;
            st.poles = std::move(m.matched);
            st.flags = flags;
            st.n_trusted = static_cast<int>(cand.size());
            double mind = min_pairwise_cyl(st.poles);
            if (mind < path.collision_tol) st.flags |= kFlagProximity;
            traj.steps.push_back(std::move(st));
            ok = true;
            break;
          }
          step /= 2;
          if (step < min_step)
            throw TrackingLost("track_poles: matching ambiguous at minimal step near k2=" +
                               fmt17(attempt.real()) + "+" + fmt17(attempt.imag()) + "i");
          flags |= kFlagHalved;
          attempt = piece_start + (attempt - piece_start) * 0.5;
        }
        (void)seg;
        if (ok && std::abs(traj.steps.back().k2 - goal) < 1e-15) {
          piece_start = goal;
          ++p;
          break;
        }
        piece_start = traj.steps.back().k2;
      }
    }
  };

  auto handle_collision_region = [&](cplx resume_target) {
    // Offset laterally by +-delta/4 in Re, preferring the side with the larger
    // pole separation, then continue ascending and probe the original line.
    const TrackStep cur = traj.steps.back();
    double candidates[2] = {path.delta / 4, -path.delta / 4};
    double best_sep = -1;
    double chosen = 0;
    for (double off : candidates) {
      cplx probe = cur.k2 + off;
      if (!in_z_band(probe, path)) continue;
      auto recs = poles_at(probe);
      double sep = min_pairwise_cyl(recs);
      if (sep > best_sep) {
        best_sep = sep;
        chosen = off;
      }
    }
    if (chosen == 0.0)
      throw PathExitsZ("track_poles: lateral offset leaves Z on both sides");
    offset = chosen;
    advance_to(cur.k2 + chosen, kFlagOffset);
    // Ascend on the offset line until the original line is collision-free.
    while (true) {
      cplx here = traj.steps.back().k2;
      cplx next_up = here + cplx(0, path.max_step);
      if (next_up.imag() >= resume_target.imag() - 1e-12) break;
      auto direct = poles_at(cplx(here.real() - offset, next_up.imag()));
      advance_to(next_up, kFlagOffset);
      if (min_pairwise_cyl(direct) >= 2.0 * path.collision_tol) break;
    }
    cplx back = traj.steps.back().k2 - offset;
    offset = 0.0;
    advance_to(back, kFlagOffset);
  };

  for (size_t w = 1; w < path.waypoints.size(); ++w) {
    cplx target = path.waypoints[w];
    while (std::abs(traj.steps.back().k2 - target) > 1e-15) {
      advance_to(target, 0);
      if (traj.steps.back().flags & kFlagProximity) handle_collision_region(target);
    }
  }
  return traj;
}

namespace {

// Quadrature half of riesz_rank, with the companion spectrum precomputed by
// the caller so batches over contours share one eigendecomposition.
int riesz_rank_quadrature(const RectContour& contour, cplx k2, double mu,
                          const MediumSpec& medium, const ModeBasis& basis, int q_nodes,
                          const VecC& eigvals) {
  const int n = basis.size();
  std::vector<cplx> nodes = gamma_contour_points(contour, q_nodes);

  // Pre-check: no companion eigenvalue within 1e-4 of the contour polyline.
  for (int i = 0; i < eigvals.size(); ++i) {
    for (size_t j = 0; j < nodes.size(); ++j) {
      cplx a = nodes[j], b = nodes[(j + 1) % nodes.size()];
      cplx ab = b - a;
      double t = std::clamp(((eigvals(i) - a) * std::conj(ab)).real() / std::norm(ab), 0.0, 1.0);
      if (std::abs(eigvals(i) - (a + t * ab)) < 1e-4)
        throw EigOnContour("riesz_rank: companion eigenvalue within 1e-4 of contour");
    }
  }

  MatC proj = MatC::Zero(2 * n, 2 * n);
  for (size_t j = 0; j < nodes.size(); ++j) {
    cplx z = nodes[j];
    cplx wgt = nodes[(j + 1) % nodes.size()] - z;
    // (W - z)^{-1} in blocks via the pencil Q(z) = assemble_shifted((z,k2), mu):
    //   TL = Q^{-1}(B - z), TR = -Q^{-1}, BL = I + z*TL, BR = -z*Q^{-1};
    // (B - z) is diagonal, so TL is a column scaling of Q^{-1}.
    CellSolver q(assemble_shifted({z, k2}, mu, medium, basis));
    MatC qinv = q.solve_block(MatC::Identity(n, n));
    MatC tl(n, n);
    for (int i = 0; i < n; ++i) tl.col(i) = (-2.0 * basis.m1(i) - z) * qinv.col(i);
    cplx c = wgt / cplx(0, kTwoPi);
    proj.block(0, 0, n, n) += c * tl;
    proj.block(0, n, n, n) += (-c) * qinv;
    proj.block(n, 0, n, n) += c * (MatC::Identity(n, n) + z * tl);
    proj.block(n, n, n, n) += (-c * z) * qinv;
  }
  VecR sv = singular_values(proj);
  return static_cast<int>((sv.array() > 0.5).count());
}

}  // namespace

std::vector<int> riesz_ranks(const std::vector<RectContour>& contours, cplx k2, double mu,
                             const MediumSpec& medium, const ModeBasis& basis, int q_nodes) {
  VecC vals;
  MatC vecs;
  eig_dense(pencil_companion(k2, mu, medium, basis), vals, vecs);
  std::vector<int> ranks;
  ranks.reserve(contours.size());
  for (const RectContour& c : contours)
    ranks.push_back(riesz_rank_quadrature(c, k2, mu, medium, basis, q_nodes, vals));
  return ranks;
}

int riesz_rank(const RectContour& contour, cplx k2, double mu, const MediumSpec& medium,
               const ModeBasis& basis, int q_nodes) {
  return riesz_ranks({contour}, k2, mu, medium, basis, q_nodes).front();
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  os << "step,re_k2,im_k2,pole_index,re_k1,im_k1,klass,tail_mass,flags\n";
  for (size_t s = 0; s < traj.steps.size(); ++s) {
    const TrackStep& st = traj.steps[s];
    std::string flags;
    if (st.flags & kFlagProximity) flags += "proximity";
    if (st.flags & kFlagHalved) flags += std::string(flags.empty() ? "" : ";") + "halved";
    if (st.flags & kFlagOffset) flags += std::string(flags.empty() ? "" : ";") + "offset";
    if (flags.empty()) flags = "-";
    for (const PoleRecord& r : st.poles) {
      os << s << ',' << fmt17(st.k2.real()) << ',' << fmt17(st.k2.imag()) << ','
         << r.index << ',' << fmt17(r.k1.real()) << ',' << fmt17(r.k1.imag()) << ','
         << pole_class_name(r.klass) << ',' << fmt17(r.tail_mass) << ',' << flags << '\n';
    }
  }
  return os.str();
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  atomic_write_text(path, trajectory_csv(traj));
}

}  // namespace stripres
