#include <doctest.h>

#include <algorithm>
#include <random>

#include "ellopt/opt_coefficient.hpp"

using namespace ellopt;

namespace {

// Test-local lens: harmonic-mean lower and arithmetic-type upper curve.
bool lens_oracle(double l1, double l2, double a, double b) {
  if (l1 > l2) std::swap(l1, l2);
  const double tol = 1e-12;
  return l1 >= a - tol && l2 <= b + tol && a * b / (a + b - l1) <= l2 + tol && l2 <= a + b - a * b / l1 + tol;
}

}  // namespace

TEST_CASE("t-search agrees with the lens on random pairs") {
  std::mt19937_64 rng(20240101);
  std::uniform_real_distribution<double> U(1.0, 2.0);
  std::size_t agree = 0;
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    const double l1 = U(rng), l2 = U(rng);
    const bool ref = lens_oracle(l1, l2, 1.0, 2.0);
    CHECK(lens_contains(l1, l2, 1.0, 2.0) == ref);
    agree += gclosure_contains_tsearch({{l1, l2}, 1.0, 2.0}) == ref;
  }
  CHECK(agree == n);
}

TEST_CASE("lens boundary points are inside") {
  for (auto [l1, l2] : {std::pair{1.5, 4.0 / 3.0}, {1.5, 5.0 / 3.0}, {4.0 / 3.0, 1.5}, {1.0, 1.0}, {2.0, 2.0}}) {
    CAPTURE(l1);
    CAPTURE(l2);
    CHECK(lens_contains(l1, l2, 1.0, 2.0));
    CHECK(gclosure_contains_tsearch({{l1, l2}, 1.0, 2.0}));
    CHECK(gclosure_contains({{l1, l2}, 1.0, 2.0}));
  }
}

TEST_CASE("points just outside the lens are rejected") {
  CHECK_FALSE(gclosure_contains_tsearch({{1.5, 4.0 / 3.0 - 1e-6}, 1.0, 2.0}));
  CHECK_FALSE(gclosure_contains_tsearch({{1.5, 5.0 / 3.0 + 1e-6}, 1.0, 2.0}));
  CHECK_FALSE(gclosure_contains_tsearch({{1.0, 2.0}, 1.0, 2.0}));
  CHECK_FALSE(gclosure_contains_tsearch({{0.9, 1.5}, 1.0, 2.0}));
}

TEST_CASE("simple laminates lie in the closure in any dimension") {
  const double a = 1.0, b = 3.0;
  for (int k = 0; k <= 10; ++k) {
    const double t = k / 10.0;
    const double mu = t * a + (1.0 - t) * b;
    const double nu = 1.0 / (t / a + (1.0 - t) / b);
    CHECK(gclosure_contains_tsearch({{nu, mu}, a, b}));
    CHECK(gclosure_contains_tsearch({{nu, mu, mu}, a, b}));
  }
  // The pure-alpha eigenvalue forces t = 1, the pure-beta ones t = 0.
  CHECK_FALSE(gclosure_contains_tsearch({{1.0, 3.0, 3.0}, a, b}));
  CHECK(gclosure_contains_tsearch({{1.0, 1.0, 1.0}, a, b}));
  CHECK(gclosure_contains_tsearch({{3.0, 3.0, 3.0}, a, b}));
}

TEST_CASE("eigenvalue order does not matter") {
  CHECK(gclosure_contains({{5.0 / 3.0, 1.5}, 1.0, 2.0}) == gclosure_contains({{1.5, 5.0 / 3.0}, 1.0, 2.0}));
  CHECK(gclosure_contains_tsearch({{1.9, 1.2}, 1.0, 2.0}) == lens_oracle(1.9, 1.2, 1.0, 2.0));
}
