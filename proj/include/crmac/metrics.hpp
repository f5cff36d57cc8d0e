#pragma once

#include <Eigen/Core>

#include "crmac/clmodel.hpp"

namespace crmac {

/// How normalized throughput is formed from the slot-event probabilities.
enum class ThroughputMode {
  SuccessProbability,  ///< S = n tau (1 - tau)^(n-1)
  SlotWeighted,        ///< S = rho P_tr / (rho P_tr + P_fr + P_c)
};

struct Metrics {
  double tau = 0.0;
  double p_c = 0.0;           ///< converged collision probability
  double p_c_one_shot = 0.0;  ///< 1 - (1 - tau)^(n-1)
  double p_tr = 0.0;
  double p_fr = 1.0;
  double p_coll_slot = 0.0;
  double throughput = 0.0;
  double rho = 1.0;
  ThroughputMode mode = ThroughputMode::SuccessProbability;
};

/// Sum of pi over states with a zero counter and at least one idle channel.
double transmission_prob(const Eigen::VectorXd& pi, const StateSpace& space);

/// Product form: (sum_i b_{i,0}) * (sum_{s<C} s_c), from separate MAC and
/// channel marginals.
double transmission_prob_factored(const Eigen::VectorXd& mac_marginal,
                                  const Eigen::VectorXd& channel_marginal,
                                  const StateSpace& space);

double collision_prob(double tau, int n);

struct EventProbs {
  double p_tr = 0.0;
  double p_fr = 1.0;
  double p_coll_slot = 0.0;
};

EventProbs event_probs(double tau, int n);

double throughput(double tau, int n, double rho, ThroughputMode mode);

Metrics compute_metrics(const FixedPointSolution& solution, int n,
                        ThroughputMode mode = ThroughputMode::SuccessProbability,
                        double rho = 1.0);

}  // namespace crmac
