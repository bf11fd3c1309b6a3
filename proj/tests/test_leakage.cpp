#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "desync/error.hpp"
#include "desync/leakage.hpp"

using namespace desync;

namespace {

// Two-pass textbook evaluation, independent of RunningStats.
double welch_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  auto mean = [](const std::vector<double>& v) {
    long double s = 0;
    for (double a : v) s += a;
    return static_cast<double>(s / v.size());
  };
  auto var = [](const std::vector<double>& v, double m) {
    long double s = 0;
    for (double a : v) s += (a - m) * (a - m);
    return static_cast<double>(s / (v.size() - 1));
  };
  const double mx = mean(x), my = mean(y);
  return (mx - my) / std::sqrt(var(x, mx) / x.size() + var(y, my) / y.size());
}

std::vector<double> random_set(Rng& rng, std::size_t n, double mu, double sd) {
  std::vector<double> v(n);
  for (auto& a : v) a = rng.normal(mu, sd);
  return v;
}

}  // namespace

TEST_CASE("welch_t hand-evaluated example") {
  const std::vector<double> xs{1, 2, 3, 4}, ys{2, 3, 4, 5};
  const auto r = welch_t(xs, ys);
  CHECK(r.t_statistic == doctest::Approx(-1.0 / std::sqrt((5.0 / 3.0) / 4 + (5.0 / 3.0) / 4)).epsilon(1e-14));
  CHECK(r.t_statistic == doctest::Approx(-1.0954451150103321).epsilon(1e-14));
  CHECK_FALSE(r.leaks);
  CHECK(r.low_power);
  CHECK(welch_t(ys, xs).t_statistic == -r.t_statistic);
}

TEST_CASE("welch_t degenerate variances and preconditions") {
  const std::vector<double> a(5, 2.0), b(5, 3.0);
  CHECK(welch_t(a, a).t_statistic == 0.0);
  CHECK_FALSE(welch_t(a, a).leaks);
  const auto r = welch_t(a, b);
  CHECK(std::isinf(r.t_statistic));
  CHECK(r.t_statistic < 0);
  CHECK(r.leaks);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(welch_t(one, a), DataError);
}

TEST_CASE("threshold is strict") {
  // Construct |t| exactly 4.5 via a custom threshold equal to |t|.
  const std::vector<double> xs{1, 2, 3, 4}, ys{2, 3, 4, 5};
  const double t = std::abs(welch_t(xs, ys).t_statistic);
  CHECK_FALSE(welch_t(xs, ys, t).leaks);
  CHECK(welch_t(xs, ys, std::nextafter(t, 0.0)).leaks);
}

TEST_CASE("welch_t matches the oracle on random small instances") {
  Rng rng(314);
  for (int i = 0; i < 100; ++i) {
    const auto nx = static_cast<std::size_t>(rng.uniform(2, 21));
    const auto ny = static_cast<std::size_t>(rng.uniform(2, 21));
    const auto xs = random_set(rng, nx, rng.uniform(-1, 1), rng.uniform(0.1, 3));
    const auto ys = random_set(rng, ny, rng.uniform(-1, 1), rng.uniform(0.1, 3));
    const double o = welch_oracle(xs, ys);
    REQUIRE(std::abs(welch_t(xs, ys).t_statistic - o) <= 1e-12 * std::abs(o));
  }
}

TEST_CASE("welch_t antisymmetry, shift and scale invariance") {
  Rng rng(2718);
  for (int i = 0; i < 1000; ++i) {
    const auto xs = random_set(rng, 2 + i % 30, 1.0, 0.5);
    const auto ys = random_set(rng, 2 + (i * 7) % 30, 1.2, 0.7);
    const double t = welch_t(xs, ys).t_statistic;
    REQUIRE(welch_t(ys, xs).t_statistic == -t);
    const double c = rng.uniform(-10, 10), k = rng.uniform(0.01, 100);
    std::vector<double> xs2 = xs, ys2 = ys, xs3 = xs, ys3 = ys;
    for (auto& v : xs2) v += c;
    for (auto& v : ys2) v += c;
    for (auto& v : xs3) v *= k;
    for (auto& v : ys3) v *= k;
    REQUIRE(std::abs(welch_t(xs2, ys2).t_statistic - t) <= 1e-9 * std::max(1.0, std::abs(t)));
    REQUIRE(std::abs(welch_t(xs3, ys3).t_statistic - t) <= 1e-9 * std::max(1.0, std::abs(t)));
  }
}

TEST_CASE("TVLA examples") {
  const auto set = builtin_profiles();
  const Rng rng(20230);
  TvlaOptions opt;
  const auto open = tvla_campaign(set.at("tanh"), std::nullopt, opt, rng);
  CHECK(open.leaks);
  const auto prot = tvla_campaign(set.at("tanh"), calibrated_delay(), opt, rng);
  CHECK_FALSE(prot.leaks);
  CHECK(prot.fixed_input == open.fixed_input);
  CHECK(prot.is_protected);

  const TimingProfile flat("relu", {TimingCluster{{{-2.0, 2.0}}, 2e-5, 0.0, "all"}});
  CHECK(tvla_campaign(flat, std::nullopt, opt, rng).t_statistic == 0.0);

  // Campaign determinism.
  const auto again = tvla_campaign(set.at("tanh"), std::nullopt, opt, rng);
  CHECK(again.t_statistic == open.t_statistic);

  opt.fixed_input = 3.0;
  CHECK_THROWS_AS(tvla_campaign(set.at("tanh"), std::nullopt, opt, rng), DomainError);
  opt.fixed_input.reset();
  opt.n_per_set = 2;
  CHECK(tvla_campaign(set.at("sigmoid"), std::nullopt, opt, rng).low_power);
}

TEST_CASE("per-layer aggregation sums layer_width calls") {
  const TimingProfile flat("relu", {TimingCluster{{{-2.0, 2.0}}, 2e-5, 0.0, "all"}});
  TvlaOptions opt;
  opt.n_per_set = 10;
  opt.aggregate = Aggregation::PerLayer;
  opt.layer_width = 8;
  CHECK(tvla_campaign(flat, std::nullopt, opt, Rng(1)).t_statistic == 0.0);
  const auto r = tvla_campaign(builtin_profiles().at("sigmoid"), std::nullopt, opt, Rng(1));
  CHECK(r.aggregate == "per-layer");
  opt.layer_width = 0;
  CHECK_THROWS_AS(tvla_campaign(flat, std::nullopt, opt, Rng(1)), ConfigError);
  CHECK(parse_aggregation("per-call") == Aggregation::PerCall);
  CHECK_THROWS_AS(parse_aggregation("sum"), ConfigError);
}

TEST_CASE("distinguisher examples") {
  const auto set = builtin_profiles();
  const std::vector<double> exact{set.at("relu").aggregate_mean()};
  const auto v = distinguish(exact, set, std::nullopt);
  CHECK(v.predicted == "relu");
  CHECK(v.scores.front().second == 0.0);
  CHECK(v.n_queries == 1);

  // Equidistant between sigmoid and tanh: the earlier candidate wins.
  const double mid = 0.5 * (set.at("sigmoid").aggregate_mean() + set.at("tanh").aggregate_mean());
  const std::vector<double> tie{mid};
  const auto vt = distinguish(tie, set, std::nullopt);
  if (vt.scores[1].second == vt.scores[2].second) CHECK(vt.predicted == "sigmoid");

  const std::vector<double> shifted{set.at("tanh").aggregate_mean() + calibrated_delay().effective_mean()};
  CHECK(distinguish(shifted, set, calibrated_delay()).predicted == "tanh");

  CHECK_THROWS_AS(distinguish(std::vector<double>{}, set, std::nullopt), DataError);
  ProfileSet one({set.at("relu")});
  CHECK_THROWS_AS(distinguish(exact, one, std::nullopt), ConfigError);
}

TEST_CASE("accuracy sweep: unprotected separates, protected collapses") {
  const auto set = builtin_profiles();
  const auto open = accuracy_sweep(set, std::nullopt, 10, 1000, Rng(5));
  CHECK(open.overall() >= 0.99);
  CHECK(open.accuracy(1) == 1.0);  // sigmoid
  const auto prot = accuracy_sweep(set, calibrated_delay(), 10, 1000, Rng(5));
  CHECK(prot.overall() <= 0.55);
  const auto regime = accuracy_sweep(set, table2_regime_delay(), 10, 1000, Rng(5));
  CHECK(regime.overall() <= 0.55);

  const auto open1 = accuracy_sweep(set, std::nullopt, 1, 1000, Rng(6));
  const auto prot1 = accuracy_sweep(set, calibrated_delay(), 1, 1000, Rng(6));
  CHECK(prot1.overall() <= open1.overall());

  const auto again = accuracy_sweep(set, std::nullopt, 10, 1000, Rng(5));
  CHECK(again.confusion == open.confusion);
  CHECK_THROWS_AS(accuracy_sweep(set, std::nullopt, 10, 0, Rng(5)), DataError);
}

TEST_CASE("i.i.d. uniform queries: tanh's cluster spread costs a little accuracy") {
  const auto set = builtin_profiles();
  const auto t = accuracy_sweep(set, std::nullopt, 10, 1000, Rng(5), QueryPlan::Uniform);
  CHECK(t.plan == QueryPlan::Uniform);
  CHECK(t.accuracy(0) == 1.0);
  CHECK(t.overall() > 0.97);
  CHECK(parse_query_plan("stratified") == QueryPlan::Stratified);
  CHECK_THROWS_AS(parse_query_plan("grid"), ConfigError);
}
