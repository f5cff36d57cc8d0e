#include "crmac/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "crmac/errors.hpp"

namespace crmac {
namespace {

// mt19937_64 with explicitly defined mappings, so a seed reproduces the same
// stream regardless of the standard library's distribution implementations.
class SlotRng {
 public:
  explicit SlotRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, bound), Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) {
    __extension__ using u128 = unsigned __int128;
    u128 product = static_cast<u128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(product);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        product = static_cast<u128>(engine_()) * bound;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::uint64_t>(product >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

struct Station {
  int stage = 0;
  std::uint64_t counter = 0;
  bool transmitting = false;
  int channel = -1;
};

bool same_config(const MacParams& a, const MacParams& b) {
  return a.n == b.n && a.m == b.m && a.w == b.w;
}

bool same_config(const SpectrumParams& a, const SpectrumParams& b) {
  return a.c == b.c && a.alpha == b.alpha && a.p_d == b.p_d && a.p_f == b.p_f;
}

}  // namespace

void SimConfig::validate() const {
  mac.validate();
  spectrum.validate();
  if (slots < 1) throw ValidationError("slots", "must be >= 1");
  if (warmup_slots >= slots) throw ValidationError("warmup_slots", "must be < slots");
}

SimStats simulate(const SimConfig& config) {
  config.validate();
  const int n = config.mac.n;
  const int channels = config.spectrum.c;
  const double alpha = config.spectrum.alpha;
  const double p_d = config.spectrum.p_d;
  const double p_f = config.spectrum.p_f;
  const std::size_t views = config.pu_view == PuView::Shared ? 1 : static_cast<std::size_t>(n);

  SlotRng rng(config.seed);
  std::vector<char> active(views * static_cast<std::size_t>(channels));
  for (auto& a : active) a = rng.bernoulli(alpha);

  std::vector<Station> stations(static_cast<std::size_t>(n));
  for (auto& st : stations) st.counter = rng.below(static_cast<std::uint64_t>(config.mac.w));

  SimStats stats;
  stats.mac = config.mac;
  stats.spectrum = config.spectrum;
  stats.per_station_attempts.assign(static_cast<std::size_t>(n), 0);
  stats.channel_active.assign(static_cast<std::size_t>(channels), 0);
  stats.pu_views = views;

  std::vector<int> idle_channels(static_cast<std::size_t>(channels));
  std::vector<int> per_channel(static_cast<std::size_t>(channels));

  for (std::uint64_t slot = 0; slot < config.slots; ++slot) {
    const bool measuring = slot >= config.warmup_slots;

    // Primary users: one uniformly chosen channel per view re-samples.
    for (std::size_t v = 0; v < views; ++v) {
      const auto c = rng.below(static_cast<std::uint64_t>(channels));
      active[v * static_cast<std::size_t>(channels) + c] = rng.bernoulli(alpha);
    }

    // Sensing and the MAC reaction of every station.
    int transmitters = 0;
    bool anyone_sensed_idle = false;
    for (std::size_t s = 0; s < stations.size(); ++s) {
      Station& st = stations[s];
      const char* truth = &active[(views == 1 ? 0 : s) * static_cast<std::size_t>(channels)];
      std::size_t idle = 0;
      for (int c = 0; c < channels; ++c) {
        if (!rng.bernoulli(truth[c] ? p_d : p_f)) idle_channels[idle++] = c;
      }
      st.transmitting = false;
      if (idle == 0) continue;  // frozen
      anyone_sensed_idle = true;
      if (st.counter > 0) {
        --st.counter;
        continue;
      }
      st.transmitting = true;
      st.channel = idle_channels[rng.below(idle)];
      ++transmitters;
    }

    if (config.collision == CollisionDomain::PerChannel) {
      std::fill(per_channel.begin(), per_channel.end(), 0);
      for (const Station& st : stations)
        if (st.transmitting) ++per_channel[static_cast<std::size_t>(st.channel)];
    }

    // Outcomes are resolved for everyone before any counter is redrawn.
    for (std::size_t s = 0; s < stations.size(); ++s) {
      Station& st = stations[s];
      if (!st.transmitting) continue;
      const bool collided = config.collision == CollisionDomain::Medium
                                ? transmitters > 1
                                : per_channel[static_cast<std::size_t>(st.channel)] > 1;
      if (measuring) {
        ++stats.attempts;
        ++stats.per_station_attempts[s];
        collided ? ++stats.collisions : ++stats.successes;
        const std::size_t view = views == 1 ? 0 : s;
        if (active[view * static_cast<std::size_t>(channels) + static_cast<std::size_t>(st.channel)])
          ++stats.pu_interference;
      }
      st.stage = collided ? std::min(st.stage + 1, config.mac.m) : 0;
      st.counter = rng.below(static_cast<std::uint64_t>(config.mac.window(st.stage)));
    }

    if (measuring) {
      ++stats.measured_slots;
      if (transmitters == 0) ++stats.idle_slots;
      if (!anyone_sensed_idle) ++stats.busy_blocked_slots;
      for (std::size_t v = 0; v < views; ++v) {
        for (std::size_t c = 0; c < static_cast<std::size_t>(channels); ++c)
          stats.channel_active[c] += static_cast<std::uint64_t>(active[v * static_cast<std::size_t>(channels) + c]);
      }
    }
  }
  return stats;
}

double estimate_pc(const SimStats& stats) {
  if (stats.attempts == 0) throw EstimateError("estimate_pc: no transmission attempts");
  return static_cast<double>(stats.collisions) / static_cast<double>(stats.attempts);
}

double estimate_throughput(const SimStats& stats) {
  if (stats.measured_slots == 0) throw EstimateError("estimate_throughput: no measured slots");
  return static_cast<double>(stats.successes) / static_cast<double>(stats.measured_slots);
}

double estimate_tau(const SimStats& stats) {
  if (stats.measured_slots == 0) throw EstimateError("estimate_tau: no measured slots");
  return static_cast<double>(stats.attempts) /
         (static_cast<double>(stats.measured_slots) * static_cast<double>(stats.mac.n));
}

double estimate_activity(const SimStats& stats, int c) {
  if (stats.measured_slots == 0) throw EstimateError("estimate_activity: no measured slots");
  return static_cast<double>(stats.channel_active.at(static_cast<std::size_t>(c))) /
         (static_cast<double>(stats.measured_slots) * static_cast<double>(stats.pu_views));
}

double binomial_std_error(double p, std::uint64_t trials) {
  if (trials == 0) return 0.0;
  return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(trials));
}

const MetricComparison* ComparisonReport::find(const std::string& name) const {
  for (const auto& m : metrics)
    if (m.name == name) return &m;
  return nullptr;
}

ComparisonReport compare(const MacParams& mac, const SpectrumParams& spectrum,
                         const Metrics& analytic, const SimStats& empirical, double tolerance) {
  if (!same_config(mac, empirical.mac) || !same_config(spectrum, empirical.spectrum))
    throw ContractError("compare: analytic and empirical results describe different configurations");
  if (!(tolerance >= 0.0)) throw ValidationError("tolerance", "must be >= 0");

  ComparisonReport report;
  report.tolerance = tolerance;
  auto add = [&](std::string name, double a, double e, double se, std::string note = {}) {
    MetricComparison m{std::move(name), a, e, se, std::abs(a - e), false, std::move(note)};
    m.pass = m.delta <= tolerance;
    report.metrics.push_back(std::move(m));
  };

  if (empirical.attempts > 0) {
    const double pc = estimate_pc(empirical);
    add("p_c", analytic.p_c, pc, binomial_std_error(pc, empirical.attempts));
  } else if (analytic.tau == 0.0) {
    add("p_c", analytic.p_c, 0.0, 0.0, "no attempts on either side");
  } else {
    MetricComparison m{"p_c", analytic.p_c, 0.0, 0.0, analytic.p_c, false,
                       "no attempts observed although analytic tau > 0"};
    report.metrics.push_back(std::move(m));
  }

  const auto station_slots = empirical.measured_slots * static_cast<std::uint64_t>(mac.n);
  const double tau = estimate_tau(empirical);
  add("tau", analytic.tau, tau, binomial_std_error(tau, station_slots));

  if (analytic.mode == ThroughputMode::SuccessProbability) {
    const double s = estimate_throughput(empirical);
    add("throughput", analytic.throughput, s,
        binomial_std_error(std::min(s, 1.0), empirical.measured_slots));
  }

  report.pass = std::all_of(report.metrics.begin(), report.metrics.end(),
                            [](const MetricComparison& m) { return m.pass; });
  return report;
}

}  // namespace crmac
