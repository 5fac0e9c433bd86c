#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "jointgt/errors.hpp"
#include "jointgt/kernels.hpp"
#include "jointgt/ot.hpp"

using namespace jointgt;

namespace {

std::vector<double> random_cost(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> dist(0.0, 2.0);
  std::vector<double> c(rows * cols);
  for (double& x : c) x = dist(rng);
  return c;
}

// With uniform marginals on a square problem the optimum is attained at a
// permutation matrix scaled by 1/n, so enumerating permutations is exact.
double permutation_optimum(const std::vector<double>& cost, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + perm[i]];
    best = std::min(best, total / static_cast<double>(n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("long IPOT runs reach the permutation optimum") {
  std::mt19937_64 rng(100);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 3);
    CAPTURE(trial);
    const auto cost = random_cost(rng, n, n);
    const double exact = permutation_optimum(cost, n);
    const TransportPlan plan = ipot_uniform(cost, n, n, {.beta = 1.0, .inner_k = 1, .outer_n = 2000});
    CHECK(plan.cost(cost) <= exact * 1.01 + 1e-12);
    CHECK(plan.cost(cost) >= exact - 1e-9);
    CHECK(plan.row_violation() < 1e-3);
    CHECK(plan.col_violation() < 1e-3);
  }
}

TEST_CASE("default IPOT settings give a finite cost no better than the optimum") {
  std::mt19937_64 rng(200);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 3);
    const auto cost = random_cost(rng, n, n);
    const TransportPlan plan = ipot_uniform(cost, n, n);
    const double c = plan.cost(cost);
    CHECK(std::isfinite(c));
    CHECK(c >= 0.0);
    CHECK(c >= permutation_optimum(cost, n) - 1e-9);
    for (double v : plan.plan) CHECK(v >= 0.0);
  }
}

TEST_CASE("more proximal steps move the cost towards the optimum") {
  std::mt19937_64 rng(300);
  for (int trial = 0; trial < 20; ++trial) {
    const auto cost = random_cost(rng, 4, 4);
    const double exact = permutation_optimum(cost, 4);
    const double gap_1 = ipot_uniform(cost, 4, 4, {.outer_n = 1}).cost(cost) - exact;
    const double gap_10 = ipot_uniform(cost, 4, 4, {.outer_n = 10}).cost(cost) - exact;
    const double gap_500 = ipot_uniform(cost, 4, 4, {.outer_n = 500}).cost(cost) - exact;
    CHECK(gap_10 <= gap_1 + 1e-12);
    CHECK(gap_500 <= gap_10 + 1e-12);
  }
}

TEST_CASE("a two-by-two problem with a cheap diagonal") {
  const std::vector<double> cost = {0.0, 1.0, 1.0, 0.0};
  const TransportPlan plan = ipot_uniform(cost, 2, 2, {.outer_n = 200});
  CHECK(plan.at(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(plan.at(1, 1) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(plan.at(0, 1) < 1e-12);
}

TEST_CASE("rectangular problems with general marginals") {
  std::mt19937_64 rng(400);
  const auto cost = random_cost(rng, 3, 5);
  const std::vector<double> a = {0.5, 0.3, 0.2};
  const std::vector<double> b = {0.1, 0.1, 0.2, 0.25, 0.35};
  const TransportPlan plan = ipot(cost, 3, 5, a, b, {.outer_n = 500});
  CHECK(plan.row_violation() < 1e-6);
  CHECK(plan.col_violation() < 1e-12);  // the last scaling sweep fixes the columns
  const auto rows = plan.row_sums();
  CHECK(rows[0] == doctest::Approx(0.5).epsilon(1e-6));

  const TransportPlan one = ipot_uniform(std::vector<double>{0.7}, 1, 1);
  CHECK(one.at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("kernel variants give the same plan") {
  namespace k = jointgt::kernels;
  const k::Isa saved = k::active().isa;
  std::mt19937_64 rng(500);
  const auto cost = random_cost(rng, 5, 7);
  k::select(k::Isa::kScalar);
  const TransportPlan ref = ipot_uniform(cost, 5, 7, {.outer_n = 50});
  for (const auto* table : {k::avx2_table(), k::neon_table()}) {
    if (table == nullptr) continue;
    k::select(table->isa);
    const TransportPlan got = ipot_uniform(cost, 5, 7, {.outer_n = 50});
    for (std::size_t i = 0; i < ref.plan.size(); ++i) CHECK(got.plan[i] == doctest::Approx(ref.plan[i]).epsilon(1e-12));
  }
  k::select(saved);
}

TEST_CASE("invalid marginals, costs and settings are rejected") {
  const std::vector<double> cost(4, 1.0);
  const std::vector<double> half = {0.5, 0.5};
  CHECK_THROWS_AS(ipot(cost, 2, 2, std::vector<double>{0.5, 0.6}, half), MarginalError);
  CHECK_THROWS_AS(ipot(cost, 2, 2, std::vector<double>{1.5, -0.5}, half), MarginalError);
  CHECK_THROWS_AS(ipot(cost, 2, 2, std::vector<double>{1.0}, half), MarginalError);
  CHECK_THROWS_AS(ipot(cost, 2, 2, half, std::vector<double>{1.0, 0.0}), MarginalError);

  std::vector<double> bad = cost;
  bad[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ipot_uniform(bad, 2, 2), NumericError);
  bad[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ipot_uniform(bad, 2, 2), NumericError);
  // exp(-C / beta) underflows to zero everywhere.
  CHECK_THROWS_AS(ipot_uniform(std::vector<double>(4, 2000.0), 2, 2, {.beta = 1.0}), NumericError);

  CHECK_THROWS_AS(ipot_uniform(cost, 3, 2), ShapeError);
  CHECK_THROWS_AS(ipot_uniform(cost, 2, 2, {.beta = 0.0}), UsageError);
  CHECK_THROWS_AS(ipot_uniform(cost, 2, 2, {.beta = 1.0, .inner_k = 1, .outer_n = 0}), UsageError);
}
