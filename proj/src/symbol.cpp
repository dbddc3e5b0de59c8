#include "stripres/symbol.hpp"

#include <stdexcept>

#include "stripres/errors.hpp"

namespace stripres {

HammerBounds hammer_bounds(double m1, double m2, double xi1, double xi2, double eta1,
                           double eta2) {
  double a = m1 + xi1, b = m2 + xi2;
  double t1 = b * b - eta1 * eta1;
  double t2 = a * a - eta2 * eta2;
  double cross = a * eta1 + b * eta2;
  return {t1 * t1 + t2 * t2, 2.0 * cross * cross};
}

double min_gap(double beta, double m) {
  if (!(beta > 0.0 && beta < kPi)) throw std::invalid_argument("min_gap: beta must lie in (0,pi)");
  double n = m / kTwoPi;
  if (m < 0.0 || std::abs(n - std::round(n)) > 1e-12)
    throw std::invalid_argument("min_gap: m must be a nonnegative multiple of 2*pi");
  return (2.0 * m + 3.0 * kPi + beta) * (kPi - beta);
}

double select_tau1(double lambda, double eps0_sup, double theta) {
  if (lambda <= 0.0) return kTwoPi;
  if (!(eps0_sup > 0.0)) throw std::invalid_argument("select_tau1: eps0_sup must be positive");
  if (!(theta > 0.0 && theta < kPi))
    throw std::invalid_argument("select_tau1: theta must lie in (0,pi)");
  for (int n = 1;; ++n) {
    double tau1 = kTwoPi * n;
    if (theta * (2.0 * (tau1 - kTwoPi) + 4.0 * kPi - theta) >= 2.0 * lambda * eps0_sup)
      return tau1;
  }
}

bool lines_contains(cplx k1, const LinesSet& lines, double tol) {
  double re = k1.real(), im = k1.imag();
  for (double s : {+1.0, -1.0})
    for (double t : {+1.0, -1.0})
      if (std::abs(re - (s * kPi / 2 + t * 2.0 * lines.delta)) <= tol) return true;
  if (re < -kPi - tol || re > kPi + tol) return false;
  double nu = kTwoPi * std::round(im / kTwoPi);
  return std::abs(im - nu) <= tol && std::abs(nu) <= lines.tau1 + tol;
}

std::vector<cplx> gamma_contour_points(const RectContour& c, int q_nodes) {
  if (q_nodes < 8 || q_nodes % 4 != 0)
    throw std::invalid_argument("gamma_contour_points: q_nodes must be a multiple of 4, >= 8");
  double cx = c.sign * kPi / 2;
  double x_lo = cx - 2.0 * c.delta, x_hi = cx + 2.0 * c.delta;
  double y_lo = c.m2 - kTwoPi, y_hi = c.m2;
  const int per_side = q_nodes / 4;
  std::vector<cplx> pts;
  pts.reserve(q_nodes);
  auto side = [&](cplx from, cplx to) {
    for (int i = 0; i < per_side; ++i)
      pts.push_back(from + (to - from) * (static_cast<double>(i) / per_side));
  };
  side({x_lo, y_lo}, {x_hi, y_lo});
  side({x_hi, y_lo}, {x_hi, y_hi});
  side({x_hi, y_hi}, {x_lo, y_hi});
  side({x_lo, y_hi}, {x_lo, y_lo});
  return pts;
}

cplx free_pole_oracle(double m1, double m2, double xi2, double ell, int sign) {
  double s = sign >= 0 ? 1.0 : -1.0;
  double re = s * (kPi / 2 + ell) - m1;
  double mag = std::abs(m2 + xi2);
  double im = (m2 >= 0.0) ? -s * mag : s * mag;
  return {re, im};
}

}  // namespace stripres
