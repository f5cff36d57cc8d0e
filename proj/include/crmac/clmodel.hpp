#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace crmac {

/// CSMA/CA configuration: n saturated stations, stages 0..m, W_i = 2^i * w.
struct MacParams {
  int n = 1;
  int m = 0;
  int w = 1;

  int window(int stage) const { return w << stage; }
  void validate() const;
  bool operator==(const MacParams&) const = default;
};

/// Primary-network view: C homogeneous channels with activity alpha, sensed
/// with detection probability p_d and false-alarm probability p_f.
struct SpectrumParams {
  int c = 1;
  double alpha = 0.0;
  double p_d = 1.0;
  double p_f = 0.0;

  void validate() const;
  bool operator==(const SpectrumParams&) const = default;
};

/// alpha * p_d + (1 - alpha) * p_f
double perceived_busy_prob(const SpectrumParams& spectrum);

/// One row of the perceived-busy-count birth-death chain.
struct ChannelStep {
  double down = 0.0;  ///< s -> s-1
  double stay = 1.0;  ///< s -> s
  double up = 0.0;    ///< s -> s+1
};

ChannelStep channel_subchain_row(int s, const SpectrumParams& spectrum);

/// Binomial(c, q) probability mass, the stationary law of the channel sub-chain.
std::vector<double> binomial_pmf(int c, double q);

struct ChainState {
  int i = 0;  ///< backoff stage
  int k = 0;  ///< backoff counter, k < W_i
  int s = 0;  ///< perceived-busy channel count

  bool operator==(const ChainState&) const = default;
};

/// Dense ordering of (i, k, s): stage-major, then counter, then s fastest.
class StateSpace {
 public:
  StateSpace() = default;
  StateSpace(int m, int w, int c);

  std::size_t size() const { return size_; }
  int stages() const { return m_ + 1; }
  int channels() const { return c_; }
  int window(int stage) const { return w_ << stage; }

  std::size_t index(int i, int k, int s) const;
  std::size_t index(const ChainState& st) const { return index(st.i, st.k, st.s); }
  ChainState state(std::size_t idx) const;

 private:
  int m_ = 0;
  int w_ = 1;
  int c_ = 1;
  std::vector<std::size_t> stage_offset_;  ///< first MAC slot of each stage
  std::size_t size_ = 0;
};

using TransitionMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct CrossLayerChain {
  MacParams mac;
  SpectrumParams spectrum;
  double p_used = 0.0;  ///< collision probability baked into stage escalation
  StateSpace space;
  std::vector<ChainState> states;
  TransitionMatrix transitions;  ///< row = from-state

  /// max_r |sum_c P(r,c) - 1|
  double max_row_sum_error() const;
  double min_entry() const;
};

/// Per slot: the perceived-busy count steps s -> s', then the MAC reacts to
/// s'. Counters decrement only when s' < C; a station at k = 0 transmits when
/// s' < C and otherwise waits without penalty.
CrossLayerChain build_chain(const MacParams& mac, const SpectrumParams& spectrum, double p);

enum class SolveMethod { SparseDirect, PowerIteration, BusyLimit };

struct StationaryDistribution {
  Eigen::VectorXd pi;
  double residual = 0.0;  ///< ||pi P - pi||_inf
  SolveMethod method = SolveMethod::SparseDirect;
};

double stationary_residual(const TransitionMatrix& transitions, const Eigen::VectorXd& pi);

/// Number of closed communicating classes among positive-probability edges.
std::size_t closed_class_count(const TransitionMatrix& transitions);

struct PowerIterationOptions {
  double tolerance = 1e-12;
  long max_iterations = 1'000'000;
};

/// pi_{t+1} = pi_t P from `start` until successive iterates differ by less
/// than the tolerance in the infinity norm.
StationaryDistribution power_iteration(const TransitionMatrix& transitions,
                                       Eigen::VectorXd start,
                                       const PowerIterationOptions& options = {});

/// Unique stationary law of an ergodic chain. Sparse LU on (P^T - I) with
/// one recurrent state pinned, then normalized; falls back to power
/// iteration when the direct answer misses the 1e-10 residual target.
StationaryDistribution stationary_distribution(const CrossLayerChain& chain);

Eigen::VectorXd channel_marginal(const StateSpace& space, const Eigen::VectorXd& pi);
/// Marginal over (i, k), indexed like StateSpace with s dropped.
Eigen::VectorXd mac_marginal(const StateSpace& space, const Eigen::VectorXd& pi);

struct FixedPointOptions {
  double damping = 0.5;
  double tolerance = 1e-9;
  int max_iterations = 500;
};

struct FixedPointSolution {
  CrossLayerChain chain;
  StationaryDistribution stationary;
  double tau = 0.0;
  double p_c = 0.0;           ///< converged collision probability (= chain.p_used)
  double p_c_one_shot = 0.0;  ///< 1 - (1 - tau)^(n-1) from the final chain
  int iterations = 0;
};

/// Damped Picard iteration between the chain's escalation probability and
/// the collision probability implied by its transmission probability.
FixedPointSolution solve_fixed_point(const MacParams& mac, const SpectrumParams& spectrum,
                                     const FixedPointOptions& options = {});

}  // namespace crmac
