#include "stripres/medium.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "stripres/errors.hpp"

namespace stripres {
namespace {

const std::vector<Rectangle>& part_rects(const MediumSpec& spec, EpsPart part) {
  return part == EpsPart::eps0 ? spec.eps0_rectangles : spec.eps1_rectangles;
}

double part_background(const MediumSpec& spec, EpsPart part) {
  return part == EpsPart::eps0 ? spec.eps0_background : 0.0;
}

// Integral over [a,b] of e^{-i mu x} dx, cancellation-safe.
cplx interval_coef(double a, double b, double mu) {
  double len = b - a;
  cplx m(mu, 0);
  return std::exp(cplx(0, -mu * (a + b) * 0.5)) * len * sinc(0.5 * len * m);
}

void check_rect(const Rectangle& r) {
  if (!(0.0 <= r.x1_lo && r.x1_lo < r.x1_hi && r.x1_hi <= 1.0) ||
      !(0.0 <= r.x2_lo && r.x2_lo < r.x2_hi && r.x2_hi <= 1.0))
    throw ConfigError("rectangle bounds must satisfy 0 <= lo < hi <= 1 in both axes");
}

// Breakpoint arrangement of the rectangle corners along one axis.
std::vector<double> breakpoints(const std::vector<Rectangle>& rects, bool axis1) {
  std::set<double> cuts{0.0, 1.0};
  for (const auto& r : rects) {
    cuts.insert(axis1 ? r.x1_lo : r.x2_lo);
    cuts.insert(axis1 ? r.x1_hi : r.x2_hi);
  }
  return {cuts.begin(), cuts.end()};
}

// Exact extrema of eps0 over the cell by evaluating at open-subrectangle
// midpoints of the corner arrangement (eps0 is constant on each piece).
std::pair<double, double> eps0_range(const MediumSpec& spec) {
  auto xs = breakpoints(spec.eps0_rectangles, true);
  auto ys = breakpoints(spec.eps0_rectangles, false);
  double lo = spec.eps0_background, hi = spec.eps0_background;
  bool first = true;
  for (size_t i = 0; i + 1 < xs.size(); ++i) {
    for (size_t j = 0; j + 1 < ys.size(); ++j) {
      double v = eval_eps(spec, EpsPart::eps0, 0.5 * (xs[i] + xs[i + 1]),
                          0.5 * (ys[j] + ys[j + 1]));
      if (first) {
        lo = hi = v;
        first = false;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  return {lo, hi};
}

}  // namespace

double eval_eps(const MediumSpec& spec, EpsPart part, double x1, double x2) {
  double v = part_background(spec, part);
  for (const auto& r : part_rects(spec, part))
    if (r.x1_lo <= x1 && x1 < r.x1_hi && r.x2_lo <= x2 && x2 < r.x2_hi) v += r.value;
  return v;
}

void MediumSpec::validate() const {
  for (const auto& r : eps0_rectangles) check_rect(r);
  for (const auto& r : eps1_rectangles) check_rect(r);
  if (eps0_range(*this).first <= 0.0)
    throw ConfigError("eps0 must be bounded below by a positive constant");
  bool nonzero = false;
  for (const auto& r : eps1_rectangles) {
    if (!(r.x1_lo > 0.0 && r.x1_hi < 1.0))
      throw ConfigError("eps1 support must lie strictly inside (0,1) in x1");
    if (r.value != 0.0) nonzero = true;
  }
  if (!nonzero) throw ConfigError("eps1 must be nonzero on some rectangle");
}

cplx fourier_coefficient(const MediumSpec& spec, EpsPart part, int q1, int q2) {
  cplx v = (q1 == 0 && q2 == 0) ? cplx(part_background(spec, part), 0) : cplx(0, 0);
  for (const auto& r : part_rects(spec, part))
    v += r.value * interval_coef(r.x1_lo, r.x1_hi, kTwoPi * q1) *
         interval_coef(r.x2_lo, r.x2_hi, kTwoPi * q2);
  return v;
}

MatC convolution_matrix(const MediumSpec& spec, EpsPart part, const ModeBasis& basis) {
  const int n = basis.size();
  std::map<std::pair<int, int>, cplx> cache;
  MatC out(n, n);
  for (int i = 0; i < n; ++i) {
    auto [a1, a2] = basis.at(i);
    for (int j = 0; j < n; ++j) {
      auto [b1, b2] = basis.at(j);
      std::pair<int, int> q{a1 - b1, a2 - b2};
      auto it = cache.find(q);
      if (it == cache.end())
        it = cache.emplace(q, fourier_coefficient(spec, part, q.first, q.second)).first;
      out(i, j) = it->second;
    }
  }
  return out;
}

double sup_norm_eps0(const MediumSpec& spec) { return eps0_range(spec).second; }

double inf_eps0(const MediumSpec& spec) { return eps0_range(spec).first; }

double l2_norm_sq_eps(const MediumSpec& spec, EpsPart part) {
  auto xs = breakpoints(part_rects(spec, part), true);
  auto ys = breakpoints(part_rects(spec, part), false);
  double total = 0;
  for (size_t i = 0; i + 1 < xs.size(); ++i) {
    for (size_t j = 0; j + 1 < ys.size(); ++j) {
      double v = eval_eps(spec, part, 0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
      total += v * v * (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
    }
  }
  return total;
}

}  // namespace stripres
