#include "crmac/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "crmac/errors.hpp"

namespace crmac {
namespace {

void check_tau_n(double tau, int n) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw ValidationError("tau", "must lie in [0,1]");
  if (n < 1) throw ValidationError("n", "must be >= 1");
}

}  // namespace

double transmission_prob(const Eigen::VectorXd& pi, const StateSpace& space) {
  double tau = 0.0;
  for (int i = 0; i < space.stages(); ++i) {
    for (int s = 0; s < space.channels(); ++s) tau += pi[space.index(i, 0, s)];
  }
  return tau;
}

double transmission_prob_factored(const Eigen::VectorXd& mac_marginal,
                                  const Eigen::VectorXd& channel_marginal,
                                  const StateSpace& space) {
  double heads = 0.0;
  std::size_t offset = 0;
  for (int i = 0; i < space.stages(); ++i) {
    heads += mac_marginal[offset];
    offset += static_cast<std::size_t>(space.window(i));
  }
  double idle = 0.0;
  for (int s = 0; s < space.channels(); ++s) idle += channel_marginal[s];
  return heads * idle;
}

double collision_prob(double tau, int n) {
  check_tau_n(tau, n);
  return 1.0 - std::pow(1.0 - tau, n - 1);
}

EventProbs event_probs(double tau, int n) {
  check_tau_n(tau, n);
  EventProbs e;
  e.p_tr = n * tau * std::pow(1.0 - tau, n - 1);
  e.p_fr = std::pow(1.0 - tau, n);
  e.p_coll_slot = std::max(0.0, 1.0 - e.p_tr - e.p_fr);
  return e;
}

double throughput(double tau, int n, double rho, ThroughputMode mode) {
  const EventProbs e = event_probs(tau, n);
  if (mode == ThroughputMode::SuccessProbability) return e.p_tr;
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("rho: must be > 0");
  const double denom = rho * e.p_tr + e.p_fr + e.p_coll_slot;
  return rho * e.p_tr / denom;
}

Metrics compute_metrics(const FixedPointSolution& solution, int n, ThroughputMode mode,
                        double rho) {
  Metrics out;
  out.tau = solution.tau;
  out.p_c = solution.p_c;
  out.p_c_one_shot = collision_prob(solution.tau, n);
  const EventProbs e = event_probs(solution.tau, n);
  out.p_tr = e.p_tr;
  out.p_fr = e.p_fr;
  out.p_coll_slot = e.p_coll_slot;
  out.rho = rho;
  out.mode = mode;
  out.throughput = throughput(solution.tau, n, rho, mode);
  return out;
}

}  // namespace crmac
