#include "crmac/clmodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SparseLU>

#include "crmac/errors.hpp"
#include "crmac/metrics.hpp"

namespace crmac {
namespace {

constexpr double kResidualTarget = 1e-10;
constexpr std::size_t kMaxStates = 4'000'000;
// Entries of a direct solve below this are rounding noise on transient states.
constexpr double kNegativeSlack = 1e-12;

bool is_probability(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

void MacParams::validate() const {
  if (n < 1) throw ValidationError("n", "must be >= 1");
  if (m < 0 || m > 24) throw ValidationError("m", "must lie in [0,24]");
  if (w < 1) throw ValidationError("w", "must be >= 1");
  if (static_cast<double>(w) * std::ldexp(1.0, m) > 1e8)
    throw ValidationError("w", "largest window 2^m * w exceeds 1e8");
}

void SpectrumParams::validate() const {
  if (c < 1 || c > 64) throw ValidationError("c", "must lie in [1,64]");
  if (!is_probability(alpha)) throw ValidationError("alpha", "must lie in [0,1]");
  if (!is_probability(p_d)) throw ValidationError("p_d", "must lie in [0,1]");
  if (!is_probability(p_f)) throw ValidationError("p_f", "must lie in [0,1]");
}

double perceived_busy_prob(const SpectrumParams& spectrum) {
  spectrum.validate();
  const double q = spectrum.alpha * spectrum.p_d + (1.0 - spectrum.alpha) * spectrum.p_f;
  return std::clamp(q, 0.0, 1.0);
}

ChannelStep channel_subchain_row(int s, const SpectrumParams& spectrum) {
  if (s < 0 || s > spectrum.c) {
    throw std::out_of_range("channel_subchain_row: s=" + std::to_string(s) +
                            " outside [0," + std::to_string(spectrum.c) + "]");
  }
  const double q = perceived_busy_prob(spectrum);
  const double c = spectrum.c;
  ChannelStep step;
  step.up = (c - s) / c * q;
  step.down = s / c * (1.0 - q);
  step.stay = 1.0 - step.up - step.down;
  return step;
}

std::vector<double> binomial_pmf(int c, double q) {
  std::vector<double> pmf(static_cast<std::size_t>(c) + 1, 0.0);
  for (int s = 0; s <= c; ++s) {
    const double log_choose =
        std::lgamma(c + 1.0) - std::lgamma(s + 1.0) - std::lgamma(c - s + 1.0);
    const double busy = s == 0 ? 1.0 : std::pow(q, s);
    const double idle = s == c ? 1.0 : std::pow(1.0 - q, c - s);
    pmf[static_cast<std::size_t>(s)] = std::exp(log_choose) * busy * idle;
  }
  return pmf;
}

StateSpace::StateSpace(int m, int w, int c) : m_(m), w_(w), c_(c) {
  std::size_t offset = 0;
  stage_offset_.reserve(static_cast<std::size_t>(m) + 2);
  for (int i = 0; i <= m; ++i) {
    stage_offset_.push_back(offset);
    offset += static_cast<std::size_t>(w) << i;
  }
  stage_offset_.push_back(offset);
  size_ = offset * static_cast<std::size_t>(c + 1);
}

std::size_t StateSpace::index(int i, int k, int s) const {
  return (stage_offset_[static_cast<std::size_t>(i)] + static_cast<std::size_t>(k)) *
             static_cast<std::size_t>(c_ + 1) +
         static_cast<std::size_t>(s);
}

ChainState StateSpace::state(std::size_t idx) const {
  const auto width = static_cast<std::size_t>(c_ + 1);
  const std::size_t mac = idx / width;
  const auto it = std::upper_bound(stage_offset_.begin(), stage_offset_.end(), mac);
  const auto i = static_cast<int>(std::distance(stage_offset_.begin(), it)) - 1;
  return {i, static_cast<int>(mac - stage_offset_[static_cast<std::size_t>(i)]),
          static_cast<int>(idx % width)};
}

double CrossLayerChain::max_row_sum_error() const {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < transitions.outerSize(); ++r) {
    double sum = 0.0;
    for (TransitionMatrix::InnerIterator it(transitions, r); it; ++it) sum += it.value();
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

double CrossLayerChain::min_entry() const {
  double lowest = 0.0;
  for (Eigen::Index r = 0; r < transitions.outerSize(); ++r) {
    for (TransitionMatrix::InnerIterator it(transitions, r); it; ++it)
      lowest = std::min(lowest, it.value());
  }
  return lowest;
}

CrossLayerChain build_chain(const MacParams& mac, const SpectrumParams& spectrum, double p) {
  mac.validate();
  spectrum.validate();
  if (!is_probability(p)) throw ValidationError("p", "collision probability must lie in [0,1]");

  CrossLayerChain chain;
  chain.mac = mac;
  chain.spectrum = spectrum;
  chain.p_used = p;
  chain.space = StateSpace(mac.m, mac.w, spectrum.c);
  const StateSpace& space = chain.space;
  if (space.size() > kMaxStates) {
    throw ValidationError("w", "state space of " + std::to_string(space.size()) +
                                   " states is too large");
  }

  const int c = spectrum.c;
  std::vector<ChannelStep> steps;
  for (int s = 0; s <= c; ++s) steps.push_back(channel_subchain_row(s, spectrum));

  chain.states.reserve(space.size());
  for (std::size_t idx = 0; idx < space.size(); ++idx) chain.states.push_back(space.state(idx));

  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(space.size() * 3);
  auto add = [&entries](std::size_t from, std::size_t to, double value) {
    if (value > 0.0)
      entries.emplace_back(static_cast<int>(from), static_cast<int>(to), value);
  };

  for (std::size_t from = 0; from < space.size(); ++from) {
    const ChainState st = chain.states[from];
    const ChannelStep& step = steps[static_cast<std::size_t>(st.s)];
    const std::pair<int, double> moves[] = {
        {st.s - 1, step.down}, {st.s, step.stay}, {st.s + 1, step.up}};
    for (const auto& [next_s, ps] : moves) {
      if (ps <= 0.0) continue;
      if (next_s == c) {
        add(from, space.index(st.i, st.k, next_s), ps);  // all busy: freeze
      } else if (st.k > 0) {
        add(from, space.index(st.i, st.k - 1, next_s), ps);
      } else {
        const int w0 = space.window(0);
        for (int k = 0; k < w0; ++k) add(from, space.index(0, k, next_s), ps * (1.0 - p) / w0);
        const int next_stage = std::min(st.i + 1, mac.m);
        const int wj = space.window(next_stage);
        for (int k = 0; k < wj; ++k) add(from, space.index(next_stage, k, next_s), ps * p / wj);
      }
    }
  }

  const auto dim = static_cast<Eigen::Index>(space.size());
  chain.transitions.resize(dim, dim);
  chain.transitions.setFromTriplets(entries.begin(), entries.end());
  chain.transitions.makeCompressed();
  return chain;
}

double stationary_residual(const TransitionMatrix& transitions, const Eigen::VectorXd& pi) {
  const Eigen::VectorXd moved = transitions.transpose() * pi;
  return (moved - pi).lpNorm<Eigen::Infinity>();
}

std::size_t closed_class_count(const TransitionMatrix& transitions) {
  // Iterative Tarjan; a component is closed when no edge leaves it.
  const auto n = static_cast<std::size_t>(transitions.rows());
  constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order(n, unvisited), low(n, 0), component(n, unvisited);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, TransitionMatrix::InnerIterator>> frames;
  std::size_t counter = 0;
  std::size_t components = 0;

  for (std::size_t root = 0; root < n; ++root) {
    if (order[root] != unvisited) continue;
    frames.emplace_back(root, TransitionMatrix::InnerIterator(transitions, static_cast<Eigen::Index>(root)));
    order[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!frames.empty()) {
      auto& [v, it] = frames.back();
      bool descended = false;
      for (; it; ++it) {
        if (it.value() <= 0.0) continue;
        const auto w = static_cast<std::size_t>(it.col());
        if (order[w] == unvisited) {
          order[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          ++it;
          frames.emplace_back(w, TransitionMatrix::InnerIterator(transitions, static_cast<Eigen::Index>(w)));
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], order[w]);
      }
      if (descended) continue;
      const std::size_t done = v;
      frames.pop_back();
      if (!frames.empty()) {
        auto& parent = frames.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == order[done]) {
        std::size_t member;
        do {
          member = stack.back();
          stack.pop_back();
          on_stack[member] = 0;
          component[member] = components;
        } while (member != done);
        ++components;
      }
    }
  }

  std::vector<char> leaks(components, 0);
  for (std::size_t v = 0; v < n; ++v) {
    for (TransitionMatrix::InnerIterator it(transitions, static_cast<Eigen::Index>(v)); it; ++it) {
      if (it.value() > 0.0 && component[static_cast<std::size_t>(it.col())] != component[v])
        leaks[component[v]] = 1;
    }
  }
  return static_cast<std::size_t>(std::count(leaks.begin(), leaks.end(), 0));
}

StationaryDistribution power_iteration(const TransitionMatrix& transitions,
                                       Eigen::VectorXd start,
                                       const PowerIterationOptions& options) {
  if (start.size() != transitions.rows())
    throw ValidationError("start", "length does not match the chain");
  const double mass = start.sum();
  if (!(mass > 0.0)) throw ValidationError("start", "must carry positive mass");
  Eigen::VectorXd pi = start / mass;
  const TransitionMatrix forward = transitions.transpose();
  double change = 0.0;
  for (long iter = 0; iter < options.max_iterations; ++iter) {
    Eigen::VectorXd next = forward * pi;
    next /= next.sum();
    change = (next - pi).lpNorm<Eigen::Infinity>();
    pi.swap(next);
    if (change < options.tolerance) {
      StationaryDistribution out;
      out.residual = stationary_residual(transitions, pi);
      out.pi = std::move(pi);
      out.method = SolveMethod::PowerIteration;
      return out;
    }
  }
  throw SolverError("power iteration did not converge, last step change " +
                        std::to_string(change),
                    stationary_residual(transitions, pi));
}

StationaryDistribution stationary_distribution(const CrossLayerChain& chain) {
  const TransitionMatrix& P = chain.transitions;
  const Eigen::Index n = P.rows();
  if (n == 0) throw ValidationError("chain", "empty state space");
  if (chain.max_row_sum_error() > 1e-12 || chain.min_entry() < 0.0)
    throw ValidationError("chain", "transition matrix is not row-stochastic");
  if (const std::size_t closed = closed_class_count(P); closed > 1) {
    throw NonErgodicError("chain has " + std::to_string(closed) + " closed classes", closed);
  }

  // Rows of A are the balance equations pi_j = sum_r pi_r P(r,j). The row of
  // a recurrent anchor state is replaced by pi_anchor = 1 and the solution is
  // normalized afterwards; a dense row of ones would wreck the LU fill.
  const std::size_t anchor =
      chain.p_used < 1.0 ? chain.space.index(0, 0, 0) : chain.space.index(chain.mac.m, 0, 0);
  const auto pinned = static_cast<Eigen::Index>(anchor);
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(P.nonZeros() + n));
  for (Eigen::Index r = 0; r < n; ++r) {
    for (TransitionMatrix::InnerIterator it(P, r); it; ++it) {
      if (it.col() != pinned)
        entries.emplace_back(static_cast<int>(it.col()), static_cast<int>(r), it.value());
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    entries.emplace_back(static_cast<int>(j), static_cast<int>(j), j == pinned ? 1.0 : -1.0);
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(entries.begin(), entries.end());
  A.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  if (lu.info() == Eigen::Success) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs[pinned] = 1.0;
    Eigen::VectorXd pi = lu.solve(rhs);
    if (lu.info() == Eigen::Success && pi.allFinite() && pi.minCoeff() > -kNegativeSlack) {
      pi = pi.cwiseMax(0.0);
      pi /= pi.sum();
      const double residual = stationary_residual(P, pi);
      if (residual <= kResidualTarget) return {std::move(pi), residual, SolveMethod::SparseDirect};
    }
  }

  StationaryDistribution fallback =
      power_iteration(P, Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
  if (fallback.residual > kResidualTarget) {
    throw SolverError("stationary residual " + std::to_string(fallback.residual) +
                          " above target",
                      fallback.residual);
  }
  return fallback;
}

Eigen::VectorXd channel_marginal(const StateSpace& space, const Eigen::VectorXd& pi) {
  const auto width = static_cast<Eigen::Index>(space.channels() + 1);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(width);
  for (Eigen::Index idx = 0; idx < pi.size(); ++idx) out[idx % width] += pi[idx];
  return out;
}

Eigen::VectorXd mac_marginal(const StateSpace& space, const Eigen::VectorXd& pi) {
  const auto width = static_cast<Eigen::Index>(space.channels() + 1);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(pi.size() / width);
  for (Eigen::Index idx = 0; idx < pi.size(); ++idx) out[idx / width] += pi[idx];
  return out;
}

namespace {

// All channels perceived busy with certainty: every MAC state is absorbing and
// the stationary law is not unique. Take the q -> 1 limit, which keeps the
// idle-slot MAC law and moves all channel mass to s = C.
StationaryDistribution busy_limit_distribution(const CrossLayerChain& chain) {
  SpectrumParams idle = chain.spectrum;
  idle.alpha = 0.0;
  idle.p_f = 0.0;
  const CrossLayerChain reference = build_chain(chain.mac, idle, chain.p_used);
  const StationaryDistribution free_running = stationary_distribution(reference);
  const Eigen::VectorXd mac = mac_marginal(reference.space, free_running.pi);

  const StateSpace& space = chain.space;
  Eigen::VectorXd pi = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.size()));
  const int c = space.channels();
  for (Eigen::Index j = 0; j < mac.size(); ++j) {
    pi[j * (c + 1) + c] = mac[j];
  }
  const double residual = stationary_residual(chain.transitions, pi);
  return {std::move(pi), residual, SolveMethod::BusyLimit};
}

}  // namespace

FixedPointSolution solve_fixed_point(const MacParams& mac, const SpectrumParams& spectrum,
                                     const FixedPointOptions& options) {
  mac.validate();
  spectrum.validate();
  if (!(options.damping > 0.0 && options.damping <= 1.0))
    throw ValidationError("damping", "must lie in (0,1]");
  const bool always_busy = perceived_busy_prob(spectrum) >= 1.0;

  double p = 0.0;
  double previous = 0.0;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    CrossLayerChain chain = build_chain(mac, spectrum, p);
    StationaryDistribution stationary =
        always_busy ? busy_limit_distribution(chain) : stationary_distribution(chain);
    const double tau = std::clamp(transmission_prob(stationary.pi, chain.space), 0.0, 1.0);
    const double target = collision_prob(tau, mac.n);
    const double next = (1.0 - options.damping) * p + options.damping * target;
    if (std::abs(next - p) < options.tolerance) {
      FixedPointSolution out;
      out.chain = std::move(chain);
      out.stationary = std::move(stationary);
      out.tau = tau;
      out.p_c = p;
      out.p_c_one_shot = target;
      out.iterations = iter;
      return out;
    }
    previous = p;
    p = next;
  }
  throw FixedPointError("fixed point did not converge in " +
                            std::to_string(options.max_iterations) + " iterations",
                        previous, p);
}

}  // namespace crmac
