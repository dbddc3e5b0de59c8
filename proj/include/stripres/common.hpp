#pragma once

#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace stripres {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Representative of x in [-pi, pi).
inline double fold_pi(double x) {
  double y = x - kTwoPi * std::floor((x + kPi) / kTwoPi);
  if (y >= kPi) y -= kTwoPi;  // guards the floor rounding edge
  return y;
}

inline cplx fold_re(cplx z) { return {fold_pi(z.real()), z.imag()}; }

// Distance on the cylinder C/2pi (real parts compared modulo 2pi).
inline double cyl_dist(cplx a, cplx b) {
  double dr = fold_pi(a.real() - b.real());
  double di = a.imag() - b.imag();
  return std::hypot(dr, di);
}

// sin(z)/z, stable near zero.
inline cplx sinc(cplx z) {
  if (std::abs(z) < 1e-4) {
    cplx z2 = z * z;
    return 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
  }
  return std::sin(z) / z;
}

// phi(mu) = (e^{i mu} - 1)/(i mu) = e^{i mu/2} sinc(mu/2): the L2(0,1) pairing
// of e^{i mu x} against the constant mode; cancellation-free for all mu.
inline cplx phase_average(cplx mu) {
  cplx half = 0.5 * mu;
  return std::exp(cplx(0, 1) * half) * sinc(half);
}

}  // namespace stripres
