#include <doctest.h>

#include <cmath>
#include <numeric>

#include "crmac/errors.hpp"
#include "crmac/simulator.hpp"

using namespace crmac;

namespace {

SimConfig config(MacParams mac, SpectrumParams sp, std::uint64_t slots, std::uint64_t seed = 1) {
  SimConfig c;
  c.mac = mac;
  c.spectrum = sp;
  c.slots = slots;
  c.warmup_slots = std::min<std::uint64_t>(10'000, slots / 10);
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("simulation is a function of the seed") {
  const SimConfig c = config({5, 3, 16}, {2, 0.5, 0.8, 0.05}, 50'000, 42);
  const SimStats a = simulate(c);
  const SimStats b = simulate(c);
  CHECK(a == b);
  SimConfig other = c;
  other.seed = 43;
  CHECK_FALSE(simulate(other) == a);
}

TEST_CASE("counters are conserved") {
  for (auto view : {PuView::Independent, PuView::Shared}) {
    for (auto domain : {CollisionDomain::Medium, CollisionDomain::PerChannel}) {
      SimConfig c = config({6, 2, 8}, {3, 0.4, 0.7, 0.1}, 40'000, 9);
      c.pu_view = view;
      c.collision = domain;
      const SimStats s = simulate(c);
      CHECK(s.successes + s.collisions == s.attempts);
      CHECK(s.measured_slots == c.slots - c.warmup_slots);
      CHECK(s.idle_slots <= s.measured_slots);
      CHECK(s.busy_blocked_slots <= s.idle_slots);
      CHECK(std::accumulate(s.per_station_attempts.begin(), s.per_station_attempts.end(),
                            std::uint64_t{0}) == s.attempts);
      CHECK(s.pu_interference <= s.attempts);
      CHECK(s.pu_views == (view == PuView::Shared ? 1u : 6u));
      if (domain == CollisionDomain::Medium) CHECK(s.successes <= s.measured_slots);
    }
  }
}

TEST_CASE("primary-user occupancy matches alpha") {
  const SimStats s = simulate(config({4, 3, 16}, {3, 0.3, 0.9, 0.05}, 200'000, 3));
  for (int c = 0; c < 3; ++c) CHECK(std::abs(estimate_activity(s, c) - 0.3) < 0.01);
  CHECK_THROWS(estimate_activity(s, 3));
}

TEST_CASE("interference share equals the missed-detection posterior") {
  const double alpha = 0.5, pd = 0.6, pf = 0.1;
  const SimStats s = simulate(config({5, 3, 16}, {1, alpha, pd, pf}, 300'000, 11));
  const double expected = alpha * (1 - pd) / (alpha * (1 - pd) + (1 - alpha) * (1 - pf));
  const double observed = double(s.pu_interference) / s.attempts;
  CHECK(std::abs(observed - expected) < 4.0 * binomial_std_error(expected, s.attempts) + 1e-3);
}

TEST_CASE("a single station never collides") {
  const SimStats s = simulate(config({1, 3, 16}, {1, 0.5, 0.9, 0.02}, 20'000));
  CHECK(s.collisions == 0);
  CHECK(s.attempts > 0);
  CHECK(estimate_pc(s) == 0.0);
}

TEST_CASE("always-busy spectrum blocks every slot") {
  const SimStats s = simulate(config({4, 3, 16}, {2, 0.5, 1.0, 1.0}, 10'000));
  CHECK(s.attempts == 0);
  CHECK(s.busy_blocked_slots == s.measured_slots);
  CHECK_THROWS_AS(estimate_pc(s), EstimateError);
  CHECK(estimate_tau(s) == 0.0);
}

TEST_CASE("configuration checks") {
  SimConfig c = config({4, 3, 16}, {1, 0.5, 0.9, 0.02}, 100);
  c.slots = 0;
  c.warmup_slots = 0;
  CHECK_THROWS_AS(simulate(c), ValidationError);
  c.slots = 100;
  c.warmup_slots = 100;
  CHECK_THROWS_AS(simulate(c), ValidationError);
  c.warmup_slots = 0;
  c.mac.n = 0;
  CHECK_THROWS_AS(simulate(c), ValidationError);
}

TEST_CASE("standard error") {
  CHECK(binomial_std_error(0.5, 100) == doctest::Approx(0.05));
  CHECK(binomial_std_error(0.5, 0) == 0.0);
  CHECK(binomial_std_error(0.0, 10) == 0.0);
}

TEST_CASE("independent sensing agrees with the analytic model") {
  const MacParams mac{10, 3, 32};
  const SpectrumParams sp{1, 0.5, 0.9, 0.01607080298642179};
  const Metrics analytic = compute_metrics(solve_fixed_point(mac, sp), mac.n);
  const SimStats s = simulate(config(mac, sp, 300'000, 5));
  const ComparisonReport r = compare(mac, sp, analytic, s, 0.02);
  CHECK(r.pass);
  REQUIRE(r.find("p_c") != nullptr);
  CHECK(r.find("p_c")->delta < 0.01);
  CHECK(r.find("tau") != nullptr);
  CHECK(r.find("throughput") != nullptr);
  CHECK(r.find("nothing") == nullptr);
}

TEST_CASE("shared primary-user view departs from the analytic model") {
  // With one occupancy process seen by all stations the sensing outcomes
  // are correlated, which the per-station chain does not represent.
  const MacParams mac{10, 3, 32};
  const SpectrumParams sp{1, 0.5, 0.9, 0.01607080298642179};
  const Metrics analytic = compute_metrics(solve_fixed_point(mac, sp), mac.n);
  SimConfig c = config(mac, sp, 300'000, 5);
  c.pu_view = PuView::Shared;
  const SimStats s = simulate(c);
  CHECK(estimate_pc(s) - analytic.p_c > 0.05);
  CHECK_FALSE(compare(mac, sp, analytic, s, 0.02).pass);
}

TEST_CASE("per-channel collisions depart from the analytic model when C > 1") {
  const MacParams mac{10, 3, 32};
  const SpectrumParams sp{6, 0.8, 0.5, 0.001};
  const Metrics analytic = compute_metrics(solve_fixed_point(mac, sp), mac.n);
  SimConfig c = config(mac, sp, 200'000, 5);
  const ComparisonReport medium = compare(mac, sp, analytic, simulate(c), 0.02);
  CHECK(medium.pass);
  c.collision = CollisionDomain::PerChannel;
  const SimStats s = simulate(c);
  CHECK(analytic.p_c - estimate_pc(s) > 0.1);
}

TEST_CASE("comparison bookkeeping") {
  const MacParams mac{4, 3, 16};
  const SpectrumParams busy{2, 0.5, 1.0, 1.0};
  const Metrics idle_model = compute_metrics(solve_fixed_point(mac, busy), mac.n);
  const SimStats none = simulate(config(mac, busy, 10'000));
  const ComparisonReport r = compare(mac, busy, idle_model, none, 0.02);
  CHECK(r.pass);
  CHECK_FALSE(r.find("p_c")->note.empty());

  Metrics wrong = idle_model;
  wrong.tau = 0.1;
  CHECK_FALSE(compare(mac, busy, wrong, none, 0.02).pass);

  CHECK_THROWS_AS(compare({5, 3, 16}, busy, idle_model, none, 0.02), ContractError);
  CHECK_THROWS_AS(compare(mac, {2, 0.4, 1.0, 1.0}, idle_model, none, 0.02), ContractError);
  CHECK_THROWS_AS(compare(mac, busy, idle_model, none, -1.0), ValidationError);

  Metrics weighted = idle_model;
  weighted.mode = ThroughputMode::SlotWeighted;
  CHECK(compare(mac, busy, weighted, none, 0.02).find("throughput") == nullptr);
}

namespace {

SimStats counts(std::uint64_t attempts, std::uint64_t collisions, std::uint64_t successes,
                std::uint64_t slots) {
  SimStats s;
  s.mac = {10, 3, 32};
  s.attempts = attempts;
  s.collisions = collisions;
  s.successes = successes;
  s.measured_slots = slots;
  return s;
}

}  // namespace

TEST_CASE("collision and throughput estimators") {
  CHECK(estimate_pc(counts(50, 0, 50, 100)) == 0.0);
  CHECK(estimate_pc(counts(50, 50, 0, 100)) == 1.0);
  CHECK(estimate_pc(counts(100, 38, 62, 1000)) == doctest::Approx(0.38));
  CHECK(estimate_throughput(counts(10, 10, 0, 100)) == 0.0);
  CHECK(estimate_throughput(counts(100, 0, 100, 100)) == 1.0);
  CHECK(estimate_throughput(counts(500'000, 112'580, 387'420, 1'000'000)) == doctest::Approx(0.38742));
  CHECK_THROWS_AS(estimate_throughput(counts(0, 0, 0, 0)), EstimateError);
}

TEST_CASE("comparison of identical and of shifted values") {
  const MacParams mac{10, 3, 32};
  const SpectrumParams sp{1, 0.5, 0.9, 0.0161};
  SimStats s = counts(100'000, 20'000, 80'000, 1'000'000);
  s.spectrum = sp;
  Metrics same;
  same.p_c = 0.2;
  same.tau = 0.01;
  same.throughput = 0.08;
  const ComparisonReport ok = compare(mac, sp, same, s, 0.02);
  CHECK(ok.pass);
  for (const auto& m : ok.metrics) CHECK(m.delta == doctest::Approx(0.0));

  Metrics off = same;
  off.p_c = 0.25;
  const ComparisonReport bad = compare(mac, sp, off, s, 0.02);
  CHECK_FALSE(bad.pass);
  REQUIRE(bad.find("p_c") != nullptr);
  CHECK_FALSE(bad.find("p_c")->pass);
  CHECK(bad.find("p_c")->delta == doctest::Approx(0.05));
  CHECK(bad.find("tau")->pass);
}

TEST_CASE("sweep of the reference window size agrees with the analytic model") {
  const SpectrumParams sp{1, 0.5, 0.9, 0.01607080298642179};
  for (int n : {2, 4, 6, 8, 10}) {
    const MacParams mac{n, 3, 32};
    const Metrics analytic = compute_metrics(solve_fixed_point(mac, sp), n);
    const ComparisonReport r = compare(mac, sp, analytic, simulate(config(mac, sp, 200'000, 100 + n)), 0.02);
    CAPTURE(n);
    CHECK(r.pass);
  }
}
