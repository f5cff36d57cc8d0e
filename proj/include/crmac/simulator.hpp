#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crmac/clmodel.hpp"
#include "crmac/metrics.hpp"

namespace crmac {

/// Which primary-user occupancy a station senses.
enum class PuView {
  Independent,  ///< every station observes its own occupancy process
  Shared,       ///< one occupancy process per channel, seen by all stations
};

/// Which concurrent secondary transmissions destroy each other.
enum class CollisionDomain {
  Medium,      ///< any two transmissions in the same slot collide
  PerChannel,  ///< only transmissions on the same channel collide
};

struct SimConfig {
  MacParams mac;
  SpectrumParams spectrum;
  std::uint64_t slots = 1'000'000;
  std::uint64_t seed = 1;
  std::uint64_t warmup_slots = 10'000;
  PuView pu_view = PuView::Independent;
  CollisionDomain collision = CollisionDomain::Medium;

  void validate() const;
};

struct SimStats {
  MacParams mac;
  SpectrumParams spectrum;
  std::uint64_t attempts = 0;
  std::uint64_t successes = 0;
  std::uint64_t collisions = 0;          ///< attempts that collided
  std::uint64_t idle_slots = 0;          ///< slots with no transmission
  std::uint64_t busy_blocked_slots = 0;  ///< slots where no station saw an idle channel
  std::uint64_t measured_slots = 0;
  std::uint64_t pu_interference = 0;     ///< attempts on a truly occupied channel
  std::vector<std::uint64_t> per_station_attempts;
  /// Per channel, slots x views in which the primary user was active.
  std::vector<std::uint64_t> channel_active;
  std::uint64_t pu_views = 1;

  bool operator==(const SimStats&) const = default;
};

/// Slot-level Monte Carlo of n saturated stations. Deterministic in the seed.
SimStats simulate(const SimConfig& config);

/// Fraction of attempts that collided. Throws EstimateError without attempts.
double estimate_pc(const SimStats& stats);
/// Successful transmissions per measured slot.
double estimate_throughput(const SimStats& stats);
/// Attempts per station per measured slot.
double estimate_tau(const SimStats& stats);
/// Fraction of slot-views in which channel `c` was occupied.
double estimate_activity(const SimStats& stats, int c);

/// sqrt(p (1 - p) / trials); 0 when trials is 0.
double binomial_std_error(double p, std::uint64_t trials);

struct MetricComparison {
  std::string name;
  double analytic = 0.0;
  double empirical = 0.0;
  double std_error = 0.0;
  double delta = 0.0;  ///< |analytic - empirical|
  bool pass = false;
  std::string note;
};

struct ComparisonReport {
  std::vector<MetricComparison> metrics;
  double tolerance = 0.0;
  bool pass = false;

  const MetricComparison* find(const std::string& name) const;
};

/// Compares p_c, tau and (for success-probability throughput) S. Throws
/// ContractError if the two sides were produced for different configurations.
ComparisonReport compare(const MacParams& mac, const SpectrumParams& spectrum,
                         const Metrics& analytic, const SimStats& empirical, double tolerance);

}  // namespace crmac
