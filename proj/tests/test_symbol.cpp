#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "stripres/symbol.hpp"

using namespace stripres;

TEST_CASE("symbol equals the sum of shifted complex squares") {
  // s((2pi,0), (0,i)) = 4pi^2 - 1.
  CHECK(std::abs(symbol(kTwoPi, 0.0, cplx(0, 0), cplx(0, 1)) - cplx(4 * kPi * kPi - 1, 0)) <
        1e-12);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int t = 0; t < 200; ++t) {
    double m1 = u(rng), m2 = u(rng);
    cplx k1(u(rng), u(rng)), k2(u(rng), u(rng));
    cplx want = (m1 + k1) * (m1 + k1) + (m2 + k2) * (m2 + k2);
    CHECK(std::abs(symbol(m1, m2, k1, k2) - want) < 1e-11);
  }
}

TEST_CASE("lower bounds never exceed the squared symbol modulus") {
  // Hand case: m = 0, xi = 0, eta = (1,2): s = -5, |s|^2 = 25, b1 = 17, b2 = 0.
  HammerBounds hb = hammer_bounds(0, 0, 0, 0, 1, 2);
  CHECK(hb.b1 == doctest::Approx(17.0).epsilon(1e-14));
  CHECK(hb.b2 == doctest::Approx(0.0).epsilon(1e-14));

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> mode(-20, 20);
  std::uniform_real_distribution<double> xi(-kPi, kPi), eta(-10.0, 10.0);
  for (int t = 0; t < 20000; ++t) {
    double m1 = kTwoPi * mode(rng), m2 = kTwoPi * mode(rng);
    double x1 = xi(rng), x2 = xi(rng), e1 = eta(rng), e2 = eta(rng);
    double lhs = std::norm(symbol(m1, m2, cplx(x1, e1), cplx(x2, e2)));
    HammerBounds b = hammer_bounds(m1, m2, x1, x2, e1, e2);
    CHECK(std::max(b.b1, b.b2) <= lhs * (1 + 1e-9) + 1e-300);
    // b2 is half the squared imaginary part of s.
    double ims = std::imag(symbol(m1, m2, cplx(x1, e1), cplx(x2, e2)));
    CHECK(b.b2 == doctest::Approx(0.5 * ims * ims).epsilon(1e-9));
  }
}

TEST_CASE("interval gap bound formula and tightness") {
  CHECK(min_gap(kPi / 2, 0.0) == doctest::Approx(7 * kPi * kPi / 4).epsilon(1e-14));
  CHECK(min_gap(kPi / 4, kTwoPi) ==
        doctest::Approx((2 * kTwoPi + 3 * kPi + kPi / 4) * (kPi - kPi / 4)).epsilon(1e-14));

  // Small brute force: the bound is attained at the grid endpoint xi2 = 3pi/2.
  for (double beta : {kPi / 4, kPi / 2}) {
    for (double m : {0.0, kTwoPi}) {
      double target = (m + kTwoPi) * (m + kTwoPi);
      double best = 1e300;
      for (int n2 = -30; n2 <= 30; ++n2)
        for (int i = 0; i <= 20000; ++i) {
          double xi2 = (kPi - beta) + 2 * beta * i / 20000.0;
          best = std::min(best, std::abs((kTwoPi * n2 + xi2) * (kTwoPi * n2 + xi2) - target));
        }
      CHECK(best >= min_gap(beta, m) * (1 - 1e-9));
    }
  }
  double attained = std::abs((0.0 + 3 * kPi / 2) * (3 * kPi / 2) - kTwoPi * kTwoPi);
  CHECK(attained == doctest::Approx(min_gap(kPi / 2, 0.0)).epsilon(1e-14));
}

TEST_CASE("tau1 selection is the smallest admissible multiple of 2pi") {
  CHECK(select_tau1(-1.0, 5.0, 1.0) == doctest::Approx(kTwoPi));
  CHECK(select_tau1(0.0, 5.0, 1.0) == doctest::Approx(kTwoPi));
  for (double lambda : {0.5, 3.0, 10.0, 40.0})
    for (double sup : {1.0, 3.0})
      for (double theta : {0.5, 1.0, 2.0}) {
        double got = select_tau1(lambda, sup, theta);
        double expect = 0;
        for (int n = 1; n <= 1000; ++n) {
          double t = kTwoPi * n;
          if (theta * (2 * (t - kTwoPi) + 4 * kPi - theta) >= 2 * lambda * sup) {
            expect = t;
            break;
          }
        }
        CHECK(got == doctest::Approx(expect).epsilon(1e-14));
        // Monotone: larger coupling never shrinks tau1.
        CHECK(select_tau1(lambda + 1.0, sup, theta) >= got - 1e-12);
        CHECK(select_tau1(lambda, sup, theta + 0.5) <= got + 1e-12);
      }
}

TEST_CASE("folding and cylinder distance") {
  CHECK(fold_pi(kPi) == doctest::Approx(-kPi));
  CHECK(fold_pi(-kPi) == doctest::Approx(-kPi));
  CHECK(fold_pi(3 * kPi) == doctest::Approx(-kPi));
  CHECK(fold_pi(0.3 + 4 * kTwoPi) == doctest::Approx(0.3));
  CHECK(fold_re(cplx(kPi + 0.1, 2.0)).real() == doctest::Approx(-kPi + 0.1));
  CHECK(fold_re(cplx(kPi + 0.1, 2.0)).imag() == doctest::Approx(2.0));
  // Wrap-around metric.
  CHECK(cyl_dist(cplx(kPi - 0.1, 1.0), cplx(-kPi + 0.1, 1.0)) == doctest::Approx(0.2));
  CHECK(cyl_dist(cplx(0.5, 1.0), cplx(0.5 + kTwoPi, 3.0)) == doctest::Approx(2.0));
}

TEST_CASE("free pole oracle annihilates the symbol") {
  for (int sign : {+1, -1})
    for (double m1 : {0.0, kTwoPi, -2 * kTwoPi})
      for (double m2 : {0.0, kTwoPi, -kTwoPi})
        for (double ell : {kTwoPi, 3 * kTwoPi}) {
          double xi2 = 0.8;
          cplx k1 = free_pole_oracle(m1, m2, xi2, ell, sign);
          cplx k2(xi2, kPi / 2 + ell);
          CHECK(std::abs(symbol(m1, m2, k1, k2)) < 1e-9 * (1 + std::norm(k1)));
        }
}

TEST_CASE("lines set membership") {
  LinesSet lines{kPi / 8, kTwoPi};
  CHECK(lines_contains(cplx(kPi / 2 + kPi / 4, 0.37), lines));
  CHECK(lines_contains(cplx(-kPi / 2 - kPi / 4, -5.9), lines));
  CHECK(lines_contains(cplx(0.2, kTwoPi), lines));
  CHECK(lines_contains(cplx(-1.0, 0.0), lines));
  CHECK_FALSE(lines_contains(cplx(0.2, 1.23), lines));
  CHECK_FALSE(lines_contains(cplx(0.2, 2 * kTwoPi), lines));  // |nu| > tau1
}

TEST_CASE("contour discretization is a counterclockwise rectangle") {
  RectContour c{+1, kTwoPi, kPi / 8};
  int q = 16;
  std::vector<cplx> pts = gamma_contour_points(c, q);
  REQUIRE(static_cast<int>(pts.size()) == q);

  double lo = kPi / 2 - 2 * c.delta, hi = kPi / 2 + 2 * c.delta;
  double bot = c.m2 - kTwoPi, top = c.m2;
  CHECK(pts[0].real() == doctest::Approx(lo));
  CHECK(pts[0].imag() == doctest::Approx(bot));
  double area2 = 0;
  for (int i = 0; i < q; ++i) {
    cplx a = pts[i], b = pts[(i + 1) % q];
    bool on_edge = std::abs(a.real() - lo) < 1e-12 || std::abs(a.real() - hi) < 1e-12 ||
                   std::abs(a.imag() - bot) < 1e-12 || std::abs(a.imag() - top) < 1e-12;
    CHECK(on_edge);
    area2 += a.real() * b.imag() - b.real() * a.imag();
  }
  // Positive signed area = counterclockwise; equals the rectangle area.
  CHECK(area2 / 2 == doctest::Approx((hi - lo) * (top - bot)).epsilon(1e-12));
  CHECK_THROWS(gamma_contour_points(c, 10));  // not a multiple of 4
}
