#pragma once

// Channel model, information state and the single-step probabilistic
// primitives of the n-channel / k-play opportunistic access problem.
//
// Channels are indexed from 0 internally; ActionSet::one_based() and
// ActionSet::to_one_based() convert at the boundary (reports, CLI, tests).

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace osa {

/// Absolute tolerance for probability-range and probability-sum checks.
inline constexpr double kProbabilityTolerance = 1e-12;
/// Absolute tolerance for comparing value functions.
inline constexpr double kValueTolerance = 1e-9;

/// Two-state Markov law shared by every channel.
class TransitionModel {
 public:
  TransitionModel(double p01, double p11);

  double p01() const noexcept { return p01_; }
  double p11() const noexcept { return p11_; }
  /// p11 >= p01: a good channel is at least as likely to stay good.
  bool positively_correlated() const noexcept { return p11_ >= p01_; }
  /// Fixed point of tau, p01 / (1 - p11 + p01). Empty when p11 = 1 and p01 = 0.
  std::optional<double> stationary() const noexcept;

  friend bool operator==(const TransitionModel&, const TransitionModel&) = default;

 private:
  double p01_;
  double p11_;
};

struct HorizonSpec {
  int T = 1;
  double beta = 1.0;

  HorizonSpec() = default;
  HorizonSpec(int T, double beta);
};

/// Symbolic origin of a belief entry: tau^steps applied to p11, p01 or an
/// initial value. Two entries with equal tags within one solve hold equal values.
struct Provenance {
  enum class Origin : std::uint8_t { ObservedBad = 0, ObservedGood = 1, Initial = 2 };

  Origin origin = Origin::Initial;
  std::uint32_t source = 0;  // initial slot for Origin::Initial, otherwise 0
  std::uint32_t steps = 0;

  static Provenance good() { return {Origin::ObservedGood, 0, 0}; }
  static Provenance bad() { return {Origin::ObservedBad, 0, 0}; }
  static Provenance initial(std::uint32_t slot) { return {Origin::Initial, slot, 0}; }
  Provenance advanced() const { return {origin, source, steps + 1}; }

  /// Dense 64-bit key; order matches (origin, source, steps).
  std::uint64_t key() const noexcept {
    return (std::uint64_t{static_cast<std::uint8_t>(origin)} << 62) |
           (std::uint64_t{source} << 32) | std::uint64_t{steps};
  }

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Information state: per-channel probability of being good, optionally
/// tagged with provenance for exact memoization.
class BeliefVector {
 public:
  explicit BeliefVector(std::vector<double> omega);
  BeliefVector(std::vector<double> omega, std::vector<Provenance> tags);

  /// Tags entry i as Initial(i).
  static BeliefVector initial(std::vector<double> omega);

  std::size_t size() const noexcept { return omega_.size(); }
  double operator[](std::size_t i) const { return omega_[i]; }
  std::span<const double> values() const noexcept { return omega_; }
  bool has_provenance() const noexcept { return !tags_.empty(); }
  std::span<const Provenance> provenance() const noexcept { return tags_; }

  friend bool operator==(const BeliefVector&, const BeliefVector&) = default;

 private:
  std::vector<double> omega_;
  std::vector<Provenance> tags_;  // empty or size() entries
};

/// A set of k distinct channels, stored sorted ascending.
class ActionSet {
 public:
  ActionSet() = default;
  explicit ActionSet(std::vector<std::size_t> zero_based);
  static ActionSet one_based(std::initializer_list<std::size_t> indices);
  static ActionSet one_based(std::span<const std::size_t> indices);

  std::size_t size() const noexcept { return idx_.size(); }
  bool empty() const noexcept { return idx_.empty(); }
  bool contains(std::size_t channel) const;
  std::span<const std::size_t> indices() const noexcept { return idx_; }
  auto begin() const noexcept { return idx_.begin(); }
  auto end() const noexcept { return idx_.end(); }
  std::vector<std::size_t> to_one_based() const;
  /// "{1,3}" in one-based notation.
  std::string str() const;

  /// Throws DomainError unless every index is < n and size() == k.
  void validate(std::size_t n, std::size_t k) const;

  friend bool operator==(const ActionSet&, const ActionSet&) = default;
  friend auto operator<=>(const ActionSet&, const ActionSet&) = default;

 private:
  std::vector<std::size_t> idx_;
};

/// Observed states of the sensed channels, aligned with ActionSet order.
struct OutcomeRealization {
  std::vector<std::uint8_t> bits;
  double probability = 1.0;

  std::size_t goods() const noexcept;
};

/// One-step propagation of an unobserved channel: omega*p11 + (1-omega)*p01.
double tau(double omega, const TransitionModel& model);
/// tau applied `steps` times.
double tau_power(double omega, std::uint32_t steps, const TransitionModel& model);

/// prod_i omega_i^{l_i} (1 - omega_i)^{1 - l_i}; 1 for the empty product.
double outcome_probability(std::span<const double> beliefs_on_action,
                           std::span<const std::uint8_t> bits);

/// The acted-on entries of `belief`, in action order.
std::vector<double> beliefs_on(const BeliefVector& belief, const ActionSet& action);

/// All 2^k realizations of the sensed channels with their probabilities.
/// Bit vectors are in binary counting order with the first channel most significant.
std::vector<OutcomeRealization> enumerate_outcomes(std::span<const double> beliefs_on_action);

BeliefVector update_belief(const BeliefVector& belief, const ActionSet& action,
                           const OutcomeRealization& outcome, const TransitionModel& model);

/// Expected one-step reward: sum of the acted-on beliefs.
double immediate_reward(const BeliefVector& belief, const ActionSet& action);

/// All C(n, k) k-subsets in lexicographic order.
std::vector<ActionSet> enumerate_actions(std::size_t n, std::size_t k);

/// Throws DomainError unless value is a probability (within kProbabilityTolerance).
void require_probability(double value, const char* what);

}  // namespace osa
