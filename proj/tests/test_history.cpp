#include "avgmpc/history.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace avgmpc;

namespace {

HistoryState scalar_history(std::initializer_list<double> values) {
  std::vector<Vector> cols;
  for (double v : values) cols.push_back(Vector::Constant(1, v));
  const int T = static_cast<int>(cols.size()) + 1;
  return HistoryState(T, 1, std::move(cols));
}

Vector v1(double a) { return Vector::Constant(1, a); }

const OutputRange kRange{v1(-35), v1(25)};

}  // namespace

TEST_CASE("shift update drops the oldest column") {
  const HistoryState H = scalar_history({1, 2});
  const HistoryState next = shift_update(H, v1(3), kRange);
  CHECK(next == scalar_history({2, 3}));

  const HistoryState example = scalar_history({-2, -2, -2, -2, -1});
  CHECK(shift_update(example, v1(0), kRange) == scalar_history({-2, -2, -2, -1, 0}));
}

TEST_CASE("period one keeps an empty history") {
  const HistoryState H(1, 1, {});
  CHECK(H.empty());
  CHECK(shift_update(H, v1(4), kRange).empty());
  CHECK(norm_replacement(H) == 0.0);
  CHECK_THROWS_AS(iss_function(H, v1(0), 2.0), DomainError);
}

TEST_CASE("shift update rejects outputs outside the range") {
  CHECK_THROWS_AS(shift_update(scalar_history({0}), v1(30), kRange), DomainError);
  CHECK_THROWS_AS(shift_update(scalar_history({0}), Vector::Zero(2), kRange), DomainError);
}

TEST_CASE("history construction validates the shape") {
  CHECK_THROWS_AS(HistoryState(3, 1, {v1(0)}), ConfigError);
  CHECK_THROWS_AS(HistoryState(2, 2, {v1(0)}), ConfigError);
  CHECK_THROWS_AS(HistoryState(0, 1, {}), ConfigError);
}

TEST_CASE("norm replacement examples") {
  CHECK(norm_replacement(scalar_history({-2, -2, -1})) == 0.0);
  CHECK(norm_replacement(scalar_history({0.5, -1, 2})) == 2.0);
  Vector a(2), b(2);
  a << 1, -3;
  b << 0.5, 0.5;
  CHECK(norm_replacement(HistoryState(3, 2, {a, b})) == 1.0);
}

TEST_CASE("ISS function examples") {
  CHECK(iss_function(scalar_history({1, -2}), v1(0), 2.0) == 9.0);
  CHECK(iss_function(scalar_history({-2, 0.5}), v1(0), 2.0) == 4.5);
  CHECK(iss_function(HistoryState::constant(6, v1(0.3)), v1(0.3), 2.0) == 0.0);
  CHECK_THROWS_AS(iss_function(scalar_history({1}), v1(0), 0.0), DomainError);
}

TEST_CASE("period remainder and the multiples-of-T bound") {
  CHECK(period_remainder(12, 6) == 0);
  CHECK(period_remainder(10, 3) == 2);
  CHECK(period_remainder(4, 3) == 2);
  CHECK(period_sum_bound(scalar_history({-2, -2, -2, -2, -1}), 12).isZero());
  CHECK(period_sum_bound(scalar_history({-1.5, -0.5}), 4)[0] == 2.0);
  // N = 10, T = 3: the two newest of two columns.
  CHECK(period_sum_bound(scalar_history({1, 2}), 10)[0] == -3.0);
  // N = 7, T = 6: k = 5 newest columns of five.
  CHECK(period_sum_bound(scalar_history({1, 1, 1, 1, 1}), 7)[0] == -5.0);
  // N = 11, T = 6: k = 1, only the newest column.
  CHECK(period_sum_bound(scalar_history({1, 1, 1, 1, 7}), 11)[0] == -7.0);
}

TEST_CASE("flat round trip") {
  Vector a(2), b(2);
  a << 1, 2;
  b << 3, 4;
  const HistoryState H(3, 2, {a, b});
  const std::vector<double> flat = H.flatten();
  CHECK(flat == std::vector<double>{1, 2, 3, 4});
  CHECK(HistoryState::from_flat(3, 2, flat) == H);
  CHECK_THROWS_AS(HistoryState::from_flat(3, 2, std::vector<double>{1, 2, 3}), ConfigError);
}

TEST_CASE("membership in the admissible history set") {
  CHECK(in_history_set(scalar_history({-35, 25}), kRange));
  CHECK_FALSE(in_history_set(scalar_history({-36, 0}), kRange));
}

TEST_CASE("sandwich and decrease inequalities on random histories") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(-4.0, 4.0);
  for (double kappa : {1.0, 2.0, 0.5}) {
    for (int T : {2, 3, 6}) {
      for (int p : {1, 2}) {
        for (int s = 0; s < 200; ++s) {
          std::vector<Vector> cols;
          for (int j = 0; j < T - 1; ++j) cols.push_back(Vector::NullaryExpr(p, [&] { return uni(rng); }));
          const HistoryState H(T, p, cols);
          const Vector hs = Vector::NullaryExpr(p, [&] { return uni(rng); });
          const Vector hn = Vector::NullaryExpr(p, [&] { return uni(rng); });
          const double v = iss_function(H, hs, kappa);
          const double dev = std::pow(deviation_one_norm(H, hs), kappa);
          const double tol = 1e-12 * (1 + v);
          REQUIRE(dev <= v + tol);
          REQUIRE(v <= (T - 1.0) * (T - 1.0) * dev + tol);
          const double diff = iss_function(H.shifted(hn), hs, kappa) - v;
          REQUIRE(diff <= -dev + (T - 1.0) * std::pow((hn - hs).lpNorm<1>(), kappa) + tol);
        }
      }
    }
  }
}

TEST_CASE("norm replacement is zero exactly for nonpositive histories and monotone") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  for (int s = 0; s < 500; ++s) {
    const int T = 2 + s % 5, p = 1 + s % 3;
    std::vector<Vector> cols;
    for (int j = 0; j < T - 1; ++j) cols.push_back(Vector::NullaryExpr(p, [&] { return uni(rng); }));
    bool nonpositive = true;
    for (const Vector& c : cols) nonpositive = nonpositive && (c.array() <= 0).all();
    const double v = norm_replacement(HistoryState(T, p, cols));
    REQUIRE(v >= 0.0);
    REQUIRE((v == 0.0) == nonpositive);
    cols[static_cast<std::size_t>(s % (T - 1))][s % p] += std::abs(uni(rng));
    REQUIRE(norm_replacement(HistoryState(T, p, cols)) >= v);
    for (Vector& c : cols) c = -c.cwiseAbs();
    REQUIRE(norm_replacement(HistoryState(T, p, cols)) == 0.0);
  }
}
