#include <doctest.h>

#include <chrono>
#include <random>
#include <vector>

#include "oracles/oracles.hpp"
#include "xslice/config.hpp"
#include "xslice/metrics.hpp"

using namespace xslice;

namespace {

SliceProfile prof(SliceKind k) { return default_config().slices[static_cast<int>(k)]; }

std::vector<TtiRecord> records(std::initializer_list<int> util) {
  std::vector<TtiRecord> out;
  std::int64_t t = 0;
  for (int u : util) {
    TtiRecord r;
    r.tti = t++;
    r.utilization_rbs = u;
    r.drained_bits = {0, 0, 0};
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("slice_utilization sums RB sets over users and ORUs") {
  Assignment a;
  a.rbs[{0, 0}] = {0, 1};
  a.rbs[{1, 0}] = {2, 3};
  a.rbs[{2, 0}] = {4, 5};
  CHECK(slice_utilization(a) == 6);
  CHECK(slice_utilization(Assignment{}) == 0);
  Assignment split;
  split.rbs[{0, 1}] = {0, 1, 2, 3};
  split.rbs[{0, 2}] = {4, 5};
  CHECK(slice_utilization(split) == 6);
}

TEST_CASE("window_max_utilization") {
  CHECK(window_max_utilization(records({4, 6, 5})) == 6);
  CHECK(window_max_utilization(records({3, 3, 3})) == 3);
  CHECK(window_max_utilization(records({7})) == 7);
  CHECK_THROWS_AS(window_max_utilization(std::vector<TtiRecord>{}), std::invalid_argument);
}

TEST_CASE("utilization_variation") {
  const std::vector<double> h10 = {8.0, 12.0, 10.0};
  CHECK(utilization_variation(12.0, h10).value == doctest::Approx(0.2));
  CHECK(utilization_variation(10.0, h10).value == 0.0);
  const std::vector<double> h5 = {5.0};
  CHECK(utilization_variation(10.0, h5).value == 1.0);
  CHECK_FALSE(utilization_variation(10.0, h5).degenerate);
  const std::vector<double> idle = {0.0, 0.0};
  const auto v = utilization_variation(3.0, idle);
  CHECK(v.value == 0.0);
  CHECK(v.degenerate);
  CHECK_THROWS_AS(utilization_variation(1.0, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("normalized_throughput_avg") {
  const auto e = prof(SliceKind::embb);
  const std::vector<double> one = {16e6};
  CHECK(normalized_throughput_avg(one, e) == 1.0);
  const std::vector<double> two = {16e6, 8e6};
  CHECK(normalized_throughput_avg(two, e) == 0.75);
  const std::vector<double> zero = {0.0, 0.0, 0.0};
  CHECK(normalized_throughput_avg(zero, e) == 0.0);
  CHECK_THROWS_AS(normalized_throughput_avg(std::vector<double>{}, e), std::invalid_argument);
}

TEST_CASE("normalized_delay_avg") {
  const auto u = prof(SliceKind::urllc);
  CHECK(normalized_delay_avg(std::vector<double>{2e-3}, u).value == doctest::Approx(1.0));
  CHECK(normalized_delay_avg(std::vector<double>{1e-3}, u).value == doctest::Approx(2.0));
  CHECK(normalized_delay_avg(std::vector<double>{1e-3, 2e-3}, u).value == doctest::Approx(1.5));
  const auto ex = normalized_delay_avg(std::vector<double>{1e-3, 0.0}, u);
  CHECK(ex.value == doctest::Approx(2.0));
  CHECK(ex.excluded == 1);
  CHECK_THROWS_AS(normalized_delay_avg(std::vector<double>{0.0, 0.0}, u), std::invalid_argument);
}

TEST_CASE("qos_indicator") {
  CHECK(qos_indicator(1.2, 1.1) == 1);
  CHECK(qos_indicator(0.9, 1.5) == 0);
  CHECK(qos_indicator(1.0, 1.0) == 1);
  CHECK(qos_indicator(1.5, 0.99) == 0);
}

TEST_CASE("eccdf closed forms") {
  const std::vector<double> s = {1.0, 2.0, 3.0};
  const auto c = eccdf(s);
  CHECK(c.at(2.0) == doctest::Approx(1.0 / 3.0));
  CHECK(c.at(0.5) == 1.0);
  CHECK(c.at(3.0) == 0.0);
  CHECK(c.at(10.0) == 0.0);
  CHECK(c.values == std::vector<double>{1.0, 2.0, 3.0});
  const std::vector<double> dup = {2.0, 1.0, 2.0, 2.0};
  const auto d = eccdf(dup);
  CHECK(d.values == std::vector<double>{1.0, 2.0});
  CHECK(d.survival == std::vector<double>{0.75, 0.0});
  CHECK_THROWS_AS(eccdf(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("property: eccdf matches the direct count, nonincreasing, within [0, 1]") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> len(1, 60);
  std::uniform_int_distribution<int> val(-5, 5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> s(static_cast<std::size_t>(len(rng)));
    for (auto& x : s) x = val(rng) * 0.5;
    const auto c = eccdf(s);
    double prev = 1.0;
    for (double x = -4.0; x <= 4.0; x += 0.25) {
      const double y = c.at(x);
      CHECK(y == doctest::Approx(oracle::survival(s, x)));
      CHECK(y <= prev);
      CHECK(y >= 0.0);
      CHECK(y <= 1.0);
      prev = y;
    }
    for (std::size_t i = 0; i < c.values.size(); ++i) {
      CHECK(c.survival[i] == oracle::survival(s, c.values[i]));
    }
    CHECK(c.survival.back() == 0.0);
  }
}

TEST_CASE("property: qos_indicator monotone in each input") {
  const double grid[] = {0.0, 0.5, 0.99, 1.0, 1.01, 2.0};
  for (double r : grid)
    for (double d : grid)
      for (double up : {0.0, 0.01, 0.5}) {
        CHECK(qos_indicator(r + up, d) >= qos_indicator(r, d));
        CHECK(qos_indicator(r, d + up) >= qos_indicator(r, d));
      }
}

TEST_CASE("property: utilization_variation is scale-free") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 80.0);
  std::uniform_real_distribution<double> cdist(0.01, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> h(7);
    for (auto& x : h) x = u(rng);
    const double m = u(rng);
    const double c = cdist(rng);
    auto scaled = h;
    for (auto& x : scaled) x *= c;
    CHECK(utilization_variation(m * c, scaled).value ==
          doctest::Approx(utilization_variation(m, h).value).epsilon(1e-12));
  }
}

TEST_CASE("property: normalized_throughput_avg is linear per user") {
  const auto p = prof(SliceKind::mmtc);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2e6);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a = {u(rng), u(rng), u(rng)};
    std::vector<double> b = a;
    const double extra = u(rng);
    b[1] += extra;
    CHECK(normalized_throughput_avg(b, p) - normalized_throughput_avg(a, p) ==
          doctest::Approx(extra / p.r_min_bps / 3.0));
  }
}

TEST_CASE("property: window max over a concatenation is the max of the parts") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> u(0, 84);
  std::uniform_int_distribution<int> len(1, 20);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TtiRecord> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
    for (auto& r : a) r.utilization_rbs = u(rng);
    for (auto& r : b) r.utilization_rbs = u(rng);
    auto ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    CHECK(window_max_utilization(ab) ==
          std::max(window_max_utilization(a), window_max_utilization(b)));
  }
}

TEST_CASE("window_kpis aggregates a hand-built window") {
  const auto cfg = default_config();
  const auto u = cfg.slices[1];  // URLLC, d_max 2 ms, r_min 3.8 Mbps
  SliceState s;
  s.kind = SliceKind::urllc;
  s.user_ids = {3, 4, 5};
  s.queues.resize(3);
  // User 2 never completes but holds a packet from tti 6.
  s.queues[2].push_back({3840, 6, 3840, std::nullopt});
  std::vector<TtiRecord> w(10);
  for (int t = 0; t < 10; ++t) {
    w[t].tti = t;
    w[t].utilization_rbs = t == 4 ? 18 : 6;
    w[t].drained_bits = {3800, 1900, 0};
    // User 0 packets take 1 ms, user 1 packets 4 ms.
    w[t].completed_delays_s = {1e-3, 4e-3};
    w[t].completed_users = {0, 1};
  }
  const std::vector<double> hist = {9.0, 27.0};
  const auto k = window_kpis(w, u, s, cfg.topology, hist);
  // Throughputs 3.8 Mbps, 1.9 Mbps, 0 over 10 ms.
  CHECK(k.r_avg == doctest::Approx((1.0 + 0.5 + 0.0) / 3.0));
  // Delays 1 ms, 4 ms and the censored head-of-line age 4 ms + 0.1 ms.
  CHECK(k.d_valid);
  CHECK(k.d_avg == doctest::Approx((2.0 + 0.5 + 2e-3 / 4.1e-3) / 3.0));
  CHECK(k.u_max == 18.0);
  CHECK(k.delta == doctest::Approx(0.0));
  CHECK(k.delta_valid);
  // Only user 0 meets both targets.
  CHECK(k.qos_fraction == doctest::Approx(1.0 / 3.0));

  const auto first = window_kpis(w, u, s, cfg.topology, std::vector<double>{});
  CHECK(first.delta == 0.0);
  CHECK_FALSE(first.delta_valid);
}

TEST_CASE("window_kpis: idle slice has no delay sample") {
  const auto cfg = default_config();
  SliceState s;
  s.kind = SliceKind::mmtc;
  s.user_ids = {6, 7, 8};
  s.queues.resize(3);
  std::vector<TtiRecord> w(10);
  for (auto& r : w) r.drained_bits = {0, 0, 0};
  const auto k = window_kpis(w, cfg.slices[2], s, cfg.topology, std::vector<double>{});
  CHECK(k.r_avg == 0.0);
  CHECK_FALSE(k.d_valid);
  CHECK(k.u_max == 0.0);
  CHECK(k.qos_fraction == 0.0);
}

TEST_CASE("formula suite runs well under a second") {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> s(10000);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i % 97);
  const auto c = eccdf(s);
  CHECK(c.values.size() == 97);
  const auto dt = std::chrono::steady_clock::now() - t0;
  CHECK(std::chrono::duration<double>(dt).count() < 1.0);
}

}  // TEST_SUITE
