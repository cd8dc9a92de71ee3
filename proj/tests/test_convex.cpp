#include <doctest.h>

#include <cmath>
#include <vector>

#include "ellopt/convex.hpp"

using namespace ellopt;

namespace {

// sup_s { s t - psi(s) } by golden-section search of the concave objective
// over [lo, hi] (the objective is concave, so the search is exact up to the
// bracket width).
double brute_conjugate(const ConvexFunctionSpec& psi, double t, double lo, double hi) {
  auto obj = [&](double s) { return s * t - evaluate(psi, s); };
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = obj(c), fd = obj(d);
  for (int k = 0; k < 300 && b - a > 1e-15 * (1.0 + std::abs(b)); ++k) {
    if (fc < fd) {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = obj(d);
    } else {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = obj(c);
    }
  }
  return std::max({obj(lo), obj(hi), obj(0.5 * (a + b))});
}

struct Case {
  ConvexFunctionSpec psi;
  double lo;
  double hi;
};

std::vector<Case> cases() {
  return {
      {PowerOverP{2.0}, 0.0, 50.0},
      {PowerOverP{3.0}, 0.0, 50.0},
      {PowerOverP{1.5}, 0.0, 200.0},
      {Quadratic{}, 0.0, 50.0},
      {Quadratic{true}, -50.0, 50.0},
      {LinearOnInterval{0.5, 2.0, 3.0}, 0.5, 2.0},
      {IndicatorInterval{1.0, 2.0}, 1.0, 2.0},
  };
}

}  // namespace

TEST_CASE("conjugates match the brute-force supremum on [0, 10]") {
  for (const Case& c : cases()) {
    CAPTURE(describe(c.psi));
    for (int k = 0; k <= 400; ++k) {
      const double t = 10.0 * k / 400.0;
      const double ref = brute_conjugate(c.psi, t, c.lo, c.hi);
      CHECK(std::abs(conjugate(c.psi, t) - ref) <= 1e-8 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST_CASE("closed-form values") {
  CHECK(conjugate(PowerOverP{2.0}, 3.0) == doctest::Approx(4.5));
  CHECK(conjugate(PowerOverP{3.0}, 4.0) == doctest::Approx(std::pow(4.0, 1.5) / 1.5));
  CHECK(conjugate(PowerOverP{2.0}, -1.0) == doctest::Approx(0.0));
  CHECK(conjugate(LinearOnInterval{0.0, 1.0, 2.0}, 1.0) == doctest::Approx(0.0));
  CHECK(conjugate(LinearOnInterval{0.0, 1.0, 2.0}, 3.0) == doctest::Approx(1.0));
  CHECK(conjugate(IndicatorInterval{1.0, 2.0}, -1.0) == doctest::Approx(-1.0));
  CHECK(evaluate(IndicatorInterval{1.0, 2.0}, 3.0) == kInf);
  CHECK(evaluate(PowerOverP{2.0}, -1.0) == kInf);
}

TEST_CASE("Fenchel-Young holds on sample grids") {
  for (const Case& c : cases()) {
    CAPTURE(describe(c.psi));
    double worst = kInf;
    for (int i = 0; i < 100; ++i) {
      const double s = c.lo + (std::min(c.hi, 10.0) - c.lo) * i / 99.0;
      for (int j = 0; j < 100; ++j) {
        const double t = -5.0 + 15.0 * j / 99.0;
        worst = std::min(worst, fenchel_residual(c.psi, s, t));
      }
    }
    CHECK(worst >= -1e-12);
  }
}

TEST_CASE("Fenchel-Young equality on the subdifferential") {
  const PowerOverP pw{3.0};
  for (double s : {0.1, 0.5, 1.0, 2.5}) CHECK(std::abs(fenchel_residual(pw, s, s * s)) < 1e-12);
  const LinearOnInterval lin{0.0, 1.0, 2.0};
  CHECK(std::abs(fenchel_residual(lin, 0.0, 1.0)) < 1e-12);
  CHECK(std::abs(fenchel_residual(lin, 1.0, 5.0)) < 1e-12);
  CHECK(std::abs(fenchel_residual(lin, 0.4, 2.0)) < 1e-12);
  CHECK(fenchel_residual(lin, 0.4, 2.5) > 0.1);
}

TEST_CASE("h and h_minus are monotone and bracket the subdifferential") {
  for (const Case& c : cases()) {
    CAPTURE(describe(c.psi));
    double prev_h = -kInf, prev_hm = -kInf;
    for (int k = 0; k <= 400; ++k) {
      const double t = -2.0 + 12.0 * k / 400.0;
      const double h = h_of(c.psi, t), hm = h_minus_of(c.psi, t);
      if (std::isnan(h) || std::isnan(hm)) continue;
      CHECK(hm <= h);
      CHECK(h >= prev_h);
      CHECK(hm >= prev_hm);
      CHECK(std::abs(fenchel_residual(c.psi, h, t)) < 1e-9);
      CHECK(std::abs(fenchel_residual(c.psi, hm, t)) < 1e-9);
      CHECK(conjugate_derivative(c.psi, t) == doctest::Approx(hm));
      prev_h = h;
      prev_hm = hm;
    }
  }
  const LinearOnInterval lin{0.0, 1.0, 2.0};
  CHECK(h_of(lin, 2.0) == 1.0);
  CHECK(h_minus_of(lin, 2.0) == 0.0);
}

TEST_CASE("conjugate derivatives match finite differences") {
  for (const Case& c : cases()) {
    CAPTURE(describe(c.psi));
    for (double t : {0.3, 1.1, 4.2, 7.7}) {
      const double d = 1e-6;
      const double fd1 = (conjugate(c.psi, t + d) - conjugate(c.psi, t - d)) / (2.0 * d);
      CHECK(conjugate_derivative(c.psi, t) == doctest::Approx(fd1).epsilon(1e-6));
      const double fd2 =
          (conjugate_derivative(c.psi, t + d) - conjugate_derivative(c.psi, t - d)) / (2.0 * d);
      CHECK(conjugate_second_derivative(c.psi, t) == doctest::Approx(fd2).epsilon(1e-5));
    }
  }
}

TEST_CASE("recession constants") {
  const auto pw = recession(PowerOverP{2.0});
  CHECK(pw.c_plus == kInf);
  CHECK(is_superlinear(PowerOverP{2.0}));
  const auto ab = recession(AbsoluteValue{});
  CHECK(ab.c_plus == doctest::Approx(1.0));
  CHECK(ab.c_minus == doctest::Approx(-1.0));
  CHECK_FALSE(is_superlinear(AbsoluteValue{}));
  CHECK_FALSE(is_superlinear(LinearOnInterval{}));
  CHECK(conjugate(AbsoluteValue{}, 0.5) == doctest::Approx(0.0));
  CHECK(conjugate(AbsoluteValue{}, 1.5) == kInf);
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(validate(ConvexFunctionSpec{PowerOverP{1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(ConvexFunctionSpec{LinearOnInterval{2.0, 1.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(ConvexFunctionSpec{IndicatorInterval{1.0, 1.0}}), std::invalid_argument);
  CHECK_NOTHROW(validate(ConvexFunctionSpec{Quadratic{}}));
}
