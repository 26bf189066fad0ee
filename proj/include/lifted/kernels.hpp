#pragma once

// Single-step transition logic for the three samplers built on a directional
// proposal: Metropolis-Hastings, its reversible directional variant and the
// lifted (non-reversible) sampler.
//
// Steps mutate the chain state in place. A proposal is described by a Move
// relative to the current state; proposals whose states are cheap to copy use
// the state type itself as the move.

#include <cmath>
#include <concepts>
#include <optional>
#include <stdexcept>
#include <string>

#include "lifted/balancing.hpp"
#include "lifted/rng.hpp"

namespace lifted {

enum class Direction : int { Minus = -1, Plus = 1 };

constexpr Direction operator-(Direction d) {
  return d == Direction::Plus ? Direction::Minus : Direction::Plus;
}
constexpr int sign(Direction d) { return static_cast<int>(d); }
inline Direction random_direction(Rng& rng) {
  return rng.uniform() < 0.5 ? Direction::Minus : Direction::Plus;
}

template <class S>
struct LiftedState {
  S position;
  Direction direction = Direction::Plus;
};

/// Raised when a proposal breaks the directional-neighbourhood contract.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Requirements on a directional proposal over states P::State.
//
//   direction_of(x, m)        which directional neighbourhood of x holds the
//                             move's target, or nullopt if neither does
//   mass(x, nu)               Q(x, N_nu(x)); 0 exactly when N_nu(x) is empty
//   mass_after(x, m, nu)      Q(y, N_nu(y)) for y the target of m; may memoize
//                             into m
//   sample_conditional(x, nu) draw from Q_nu(x, .)
//   sample_unconditional(x)   draw from Q(x, .)
//   log_ratio(x, m)           log pi(y) q(y,x) / (pi(x) q(x,y))
//   apply(x, m)               replace x by the move's target
template <class P>
concept DirectionalProposal =
    requires(const P& p, typename P::State& state, const typename P::State& x,
             typename P::Move& move, Direction nu, Rng& rng) {
      typename P::State;
      typename P::Move;
      { p.direction_of(x, move) } -> std::same_as<std::optional<Direction>>;
      { p.mass(x, nu) } -> std::convertible_to<double>;
      { p.mass_after(x, move, nu) } -> std::convertible_to<double>;
      { p.sample_conditional(x, nu, rng) } -> std::same_as<typename P::Move>;
      { p.sample_unconditional(x, rng) } -> std::same_as<typename P::Move>;
      { p.log_ratio(x, move) } -> std::convertible_to<double>;
      p.apply(state, move);
    };

template <class Move>
struct StepOutcome {
  bool accepted = false;
  /// Set on steps that proposed a move; empty on forced boundary steps.
  std::optional<Move> proposed;
  double acceptance_probability = 0.0;
  /// True when the drawn direction had an empty neighbourhood.
  bool boundary = false;
};

/// Log of the directional ratio r(x,y) Q(x, N_nu(x)) / Q(y, N_-nu(y)).
///
/// This is the acceptance ratio of both the reversible variant and the lifted
/// sampler; it covers interior and boundary states alike because a boundary
/// state's one non-empty neighbourhood carries mass 1.
inline double directional_log_ratio(double log_r, double mass_from, double mass_back) {
  if (!(mass_from > 0.0)) throw ContractViolation("proposal drawn from an empty direction");
  if (!(mass_back > 0.0))
    throw ContractViolation("reverse direction of a proposed state has zero mass");
  // Equal masses cancel exactly, so perfectly balanced proposals reproduce the MH ratio bit for bit.
  if (mass_from == mass_back) return log_r;
  return log_r + std::log(mass_from) - std::log(mass_back);
}

template <DirectionalProposal P>
double mh_acceptance(const P& proposal, const typename P::State& x, typename P::Move& move,
                     BalancingFunction phi) {
  if (!proposal.direction_of(x, move))
    throw ContractViolation("proposed state lies outside the neighbourhood of the current state");
  return phi.from_log(proposal.log_ratio(x, move));
}

template <DirectionalProposal P>
double directional_acceptance(const P& proposal, const typename P::State& x,
                              typename P::Move& move, Direction nu, BalancingFunction phi) {
  const auto d = proposal.direction_of(x, move);
  if (!d || *d != nu)
    throw ContractViolation("conditional proposal left its directional neighbourhood");
  const double log_r = directional_log_ratio(proposal.log_ratio(x, move), proposal.mass(x, nu),
                                             proposal.mass_after(x, move, -nu));
  return phi.from_log(log_r);
}

/// One Metropolis-Hastings step: y ~ Q(x, .), accept with phi(r(x, y)).
/// Draws: the proposal's draws, then one uniform.
template <DirectionalProposal P>
StepOutcome<typename P::Move> mh_step(typename P::State& x, const P& proposal,
                                      BalancingFunction phi, Rng& rng) {
  auto move = proposal.sample_unconditional(x, rng);
  const double a = mh_acceptance(proposal, x, move, phi);
  const bool accept = rng.uniform() < a;
  if (accept) proposal.apply(x, move);
  return {accept, std::move(move), a, false};
}

/// One step of the reversible directional variant: nu uniform, y ~ Q_nu(x, .).
/// An empty N_nu(x) leaves x in place.
/// Draws: one uniform for nu, then (unless at the boundary) the proposal's
/// draws and one uniform.
template <DirectionalProposal P>
StepOutcome<typename P::Move> rev_step(typename P::State& x, const P& proposal,
                                       BalancingFunction phi, Rng& rng) {
  const Direction nu = random_direction(rng);
  if (proposal.mass(x, nu) <= 0.0) return {false, std::nullopt, 0.0, true};
  auto move = proposal.sample_conditional(x, nu, rng);
  const double a = directional_acceptance(proposal, x, move, nu, phi);
  const bool accept = rng.uniform() < a;
  if (accept) proposal.apply(x, move);
  return {accept, std::move(move), a, false};
}

/// One lifted step from (x, nu): move to (y, nu) on acceptance, otherwise flip
/// to (x, -nu). An empty N_nu(x) flips the direction deterministically.
/// Draws: the proposal's draws and one uniform; none at the boundary.
template <DirectionalProposal P>
StepOutcome<typename P::Move> lifted_step(LiftedState<typename P::State>& s, const P& proposal,
                                          BalancingFunction phi, Rng& rng) {
  const Direction nu = s.direction;
  if (proposal.mass(s.position, nu) <= 0.0) {
    s.direction = -nu;
    return {false, std::nullopt, 0.0, true};
  }
  auto move = proposal.sample_conditional(s.position, nu, rng);
  const double a = directional_acceptance(proposal, s.position, move, nu, phi);
  const bool accept = rng.uniform() < a;
  if (accept)
    proposal.apply(s.position, move);
  else
    s.direction = -nu;
  return {accept, std::move(move), a, false};
}

enum class Sampler { MH, Rev, Lifted };

inline std::string to_string(Sampler s) {
  switch (s) {
    case Sampler::MH: return "mh";
    case Sampler::Rev: return "rev";
    case Sampler::Lifted: return "lifted";
  }
  return "?";
}

inline Sampler parse_sampler(const std::string& name) {
  if (name == "mh") return Sampler::MH;
  if (name == "rev") return Sampler::Rev;
  if (name == "lifted") return Sampler::Lifted;
  throw std::invalid_argument("unknown sampler '" + name + "'");
}

/// Runs any of the three samplers from `start` and records f(X_k) after each
/// of `iterations` steps, skipping the first `burn_in`.
template <DirectionalProposal P, class F, class Sink>
void run_chain(Sampler sampler, const P& proposal, BalancingFunction phi,
               typename P::State start, long iterations, long burn_in, Rng& rng, F&& f,
               Sink&& sink) {
  LiftedState<typename P::State> s{std::move(start), random_direction(rng)};
  for (long k = 0; k < iterations; ++k) {
    bool accepted;
    switch (sampler) {
      case Sampler::MH: accepted = mh_step(s.position, proposal, phi, rng).accepted; break;
      case Sampler::Rev: accepted = rev_step(s.position, proposal, phi, rng).accepted; break;
      default: accepted = lifted_step(s, proposal, phi, rng).accepted; break;
    }
    if (k >= burn_in) sink(f(s.position), accepted);
  }
}

}  // namespace lifted
