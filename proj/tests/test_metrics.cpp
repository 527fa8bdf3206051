#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "liftbench/errors.hpp"
#include "liftbench/metrics.hpp"
#include "liftbench/text.hpp"

using namespace liftbench;

namespace {

std::vector<double> random_lambdas(SeededRng& rng) {
  const std::size_t t = 1 + rng.below(64);
  std::vector<double> v(t);
  for (auto& x : v) {
    // mostly mild, occasionally catastrophic
    x = rng.below(10) == 0 ? -40.0 * rng.unit() : -3.0 * rng.unit();
  }
  return v;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("clip_ll_2 of the worked example is -7/6") {
  const TokenLogLikelihoods lams({-0.5, -3.0, -1.0});
  CHECK(score(lams, MetricKind::clip_ll(2)) == -7.0 / 6.0);
}

TEST_CASE("raw and clipped agree when every lambda is above the floor") {
  const TokenLogLikelihoods lams({-0.008});
  CHECK(score(lams, MetricKind::raw_ll()) == -0.008);
  CHECK(score(lams, MetricKind::clip_ll(2)) == -0.008);
}

TEST_CASE("zero loss is a fixed point") {
  const TokenLogLikelihoods lams({0.0, 0.0});
  CHECK(score(lams, MetricKind::sqrt_loss()) == 0.0);
  CHECK(score(lams, MetricKind::log_one_plus()) == 0.0);
  CHECK(score(lams, MetricKind::raw_ll()) == 0.0);
}

TEST_CASE("transforms match their definitions") {
  CHECK(transform(-4.0, MetricKind::sqrt_loss()) == doctest::Approx(-2.0));
  CHECK(transform(-(std::exp(1.0) - 1.0), MetricKind::log_one_plus()) == doctest::Approx(-1.0));
  CHECK(transform(-7.0, MetricKind::clip_ll(5)) == -5.0);
  CHECK(transform(-1.5, MetricKind::clip_ll(3)) == -1.5);
}

TEST_CASE("empty and invalid targets are rejected") {
  CHECK_THROWS_AS(TokenLogLikelihoods({}), EmptyTarget);
  CHECK_THROWS_AS(TokenLogLikelihoods({0.1}), Error);
  CHECK_THROWS_AS(TokenLogLikelihoods({std::nan("")}), Error);
  CHECK_THROWS_AS(MetricKind::clip_ll(0), Error);
}

TEST_CASE("metric names round trip") {
  for (const auto& k : standard_metric_suite()) CHECK(MetricKind::parse(k.name()) == k);
  CHECK(MetricKind::clip_ll(2).name() == "clip_ll_2");
  CHECK(MetricKind::parse("clip_ll_2.5").k == 2.5);
  CHECK_THROWS_AS(MetricKind::parse("clip_ll_"), Error);
  CHECK_THROWS_AS(MetricKind::parse("nll"), Error);
}

TEST_CASE("lift is the difference of scores") {
  CHECK(lift(-0.231, -0.316) == doctest::Approx(0.085).epsilon(1e-12));
  CHECK(lift(-0.5, -0.5) == 0.0);
  // exact forecast vs empty on the toy probe, to the printed precision
  CHECK(std::abs(lift(-0.008, -1.543) - 1.534) <= 0.0015);
}

TEST_CASE("tagged lifts refuse mismatched scores") {
  const MetricValue a{-0.2, MetricKind::clip_ll(2), "s", "t", std::nullopt};
  MetricValue b = a;
  b.value = -0.3;
  CHECK(lift(a, b) == doctest::Approx(0.1));
  b.kind = MetricKind::raw_ll();
  CHECK_THROWS_AS(lift(a, b), MetricMismatch);
  b = a;
  b.scorer_id = "other";
  CHECK_THROWS_AS(lift(a, b), MetricMismatch);
  b = a;
  b.target_digest = "other";
  CHECK_THROWS_AS(lift(a, b), MetricMismatch);
  b = a;
  b.window = 50;
  CHECK_THROWS_AS(lift(a, b), MetricMismatch);
}

TEST_CASE("window score uses the first n tokens and saturates") {
  std::vector<double> v;
  for (int i = 0; i < 10; ++i) v.push_back(-0.5 * i);
  const TokenLogLikelihoods lams(v);
  const auto k = MetricKind::clip_ll(2);
  CHECK(window_score(lams, 4, k) == doctest::Approx((0.0 - 0.5 - 1.0 - 1.5) / 4.0));
  CHECK(window_score(lams, 10, k) == score(lams, k));
  CHECK(window_score(lams, 400, k) == score(lams, k));
  CHECK_THROWS_AS(window_score(lams, 0, k), Error);
  CHECK(std::size(kStandardWindows) == 4);
}

TEST_CASE("softening chain and clip identity on random vectors") {
  SeededRng rng(20240917);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto v = random_lambdas(rng);
    const TokenLogLikelihoods lams(v);
    const double raw = score(lams, MetricKind::raw_ll());
    const double c5 = score(lams, MetricKind::clip_ll(5));
    const double c3 = score(lams, MetricKind::clip_ll(3));
    const double c2 = score(lams, MetricKind::clip_ll(2));
    REQUIRE(raw <= c5);
    REQUIRE(c5 <= c3);
    REQUIRE(c3 <= c2);
    REQUIRE(c2 <= 0.0);
    const double lo = *std::min_element(v.begin(), v.end());
    for (double k : {2.0, 3.0, 5.0}) {
      if (lo >= -k) REQUIRE(score(lams, MetricKind::clip_ll(k)) == raw);
    }
  }
}

TEST_CASE("softened transforms are increasing and gentler than raw below -1") {
  SeededRng rng(5);
  for (int trial = 0; trial < 10000; ++trial) {
    const double a = -20.0 * rng.unit();
    const double b = a - 1e-3 - rng.unit();
    for (auto k : {MetricKind::sqrt_loss(), MetricKind::log_one_plus()}) {
      REQUIRE(transform(a, k) > transform(b, k));
      if (b < -1.0) REQUIRE(transform(b, k) > b);
    }
  }
}

TEST_CASE("scores are permutation invariant") {
  SeededRng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    auto v = random_lambdas(rng);
    const TokenLogLikelihoods a(v);
    std::shuffle(v.begin(), v.end(), std::mt19937_64(trial));
    const TokenLogLikelihoods b(v);
    for (const auto& k : standard_metric_suite()) {
      REQUIRE(score(a, k) == doctest::Approx(score(b, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("one catastrophic token moves raw a lot and clipped very little") {
  const std::vector<double> base(99, -0.1);
  std::vector<double> with = base;
  with.push_back(-30.0);
  std::vector<double> without = base;
  without.push_back(-0.1);
  const TokenLogLikelihoods a(with), b(without);
  const double d_raw = std::abs(score(a, MetricKind::raw_ll()) - score(b, MetricKind::raw_ll()));
  const double d_clip = std::abs(score(a, MetricKind::clip_ll(2)) - score(b, MetricKind::clip_ll(2)));
  CHECK(d_raw >= 0.29);
  CHECK(d_clip <= 0.02);
}

}  // TEST_SUITE
