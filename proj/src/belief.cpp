#include "osa/belief.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "osa/errors.hpp"

namespace osa {

void require_probability(double value, const char* what) {
  if (!(value >= -kProbabilityTolerance && value <= 1.0 + kProbabilityTolerance)) {
    std::ostringstream os;
    os << what << " must lie in [0,1], got " << value;
    throw DomainError(os.str());
  }
}

namespace {

double clamp_probability(double value, const char* what) {
  require_probability(value, what);
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace

TransitionModel::TransitionModel(double p01, double p11)
    : p01_(clamp_probability(p01, "p01")), p11_(clamp_probability(p11, "p11")) {}

std::optional<double> TransitionModel::stationary() const noexcept {
  const double denom = 1.0 - p11_ + p01_;
  if (denom <= 0.0) return std::nullopt;
  return p01_ / denom;
}

HorizonSpec::HorizonSpec(int T_, double beta_) : T(T_), beta(beta_) {
  if (T < 1) throw DomainError("horizon T must be >= 1");
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("discount beta must lie in [0,1]");
}

BeliefVector::BeliefVector(std::vector<double> omega) : omega_(std::move(omega)) {
  if (omega_.empty()) throw DomainError("belief vector must have at least one entry");
  for (double& w : omega_) w = clamp_probability(w, "belief entry");
}

BeliefVector::BeliefVector(std::vector<double> omega, std::vector<Provenance> tags)
    : BeliefVector(std::move(omega)) {
  if (!tags.empty() && tags.size() != omega_.size())
    throw DomainError("provenance tags must match belief length");
  tags_ = std::move(tags);
}

BeliefVector BeliefVector::initial(std::vector<double> omega) {
  std::vector<Provenance> tags(omega.size());
  for (std::size_t i = 0; i < tags.size(); ++i) tags[i] = Provenance::initial(static_cast<std::uint32_t>(i));
  return BeliefVector(std::move(omega), std::move(tags));
}

ActionSet::ActionSet(std::vector<std::size_t> zero_based) : idx_(std::move(zero_based)) {
  std::sort(idx_.begin(), idx_.end());
  if (std::adjacent_find(idx_.begin(), idx_.end()) != idx_.end())
    throw DomainError("action set contains a repeated channel");
}

ActionSet ActionSet::one_based(std::span<const std::size_t> indices) {
  std::vector<std::size_t> zb;
  zb.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i == 0) throw DomainError("one-based channel index must be >= 1");
    zb.push_back(i - 1);
  }
  return ActionSet(std::move(zb));
}

ActionSet ActionSet::one_based(std::initializer_list<std::size_t> indices) {
  return one_based(std::span<const std::size_t>(indices.begin(), indices.size()));
}

bool ActionSet::contains(std::size_t channel) const {
  return std::binary_search(idx_.begin(), idx_.end(), channel);
}

std::vector<std::size_t> ActionSet::to_one_based() const {
  std::vector<std::size_t> out(idx_);
  for (auto& i : out) ++i;
  return out;
}

std::string ActionSet::str() const {
  std::string s = "{";
  for (std::size_t j = 0; j < idx_.size(); ++j) {
    if (j) s += ',';
    s += std::to_string(idx_[j] + 1);
  }
  return s + "}";
}

void ActionSet::validate(std::size_t n, std::size_t k) const {
  if (idx_.size() != k)
    throw DomainError("action set has " + std::to_string(idx_.size()) + " channels, expected " +
                      std::to_string(k));
  if (!idx_.empty() && idx_.back() >= n)
    throw DomainError("action set references channel " + std::to_string(idx_.back() + 1) +
                      " of " + std::to_string(n));
}

std::size_t OutcomeRealization::goods() const noexcept {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

double tau(double omega, const TransitionModel& model) {
  require_probability(omega, "tau argument");
  return omega * model.p11() + (1.0 - omega) * model.p01();
}

double tau_power(double omega, std::uint32_t steps, const TransitionModel& model) {
  for (std::uint32_t s = 0; s < steps; ++s) omega = tau(omega, model);
  return omega;
}

double outcome_probability(std::span<const double> beliefs_on_action,
                           std::span<const std::uint8_t> bits) {
  if (beliefs_on_action.size() != bits.size())
    throw DomainError("outcome bits do not match the number of sensed channels");
  double q = 1.0;
  for (std::size_t i = 0; i < bits.size(); ++i)
    q *= bits[i] ? beliefs_on_action[i] : 1.0 - beliefs_on_action[i];
  return q;
}

std::vector<double> beliefs_on(const BeliefVector& belief, const ActionSet& action) {
  std::vector<double> out;
  out.reserve(action.size());
  for (std::size_t i : action) {
    if (i >= belief.size()) throw DomainError("action references a channel outside the belief");
    out.push_back(belief[i]);
  }
  return out;
}

std::vector<OutcomeRealization> enumerate_outcomes(std::span<const double> beliefs_on_action) {
  const std::size_t k = beliefs_on_action.size();
  if (k >= 31) throw DomainError("too many sensed channels to enumerate outcomes");
  const std::size_t count = std::size_t{1} << k;
  std::vector<OutcomeRealization> out(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    auto& o = out[mask];
    o.bits.resize(k);
    for (std::size_t i = 0; i < k; ++i) o.bits[i] = (mask >> (k - 1 - i)) & 1u;
    o.probability = outcome_probability(beliefs_on_action, o.bits);
  }
  return out;
}

BeliefVector update_belief(const BeliefVector& belief, const ActionSet& action,
                           const OutcomeRealization& outcome, const TransitionModel& model) {
  if (outcome.bits.size() != action.size())
    throw DomainError("outcome is not aligned with the action");
  const std::size_t n = belief.size();
  action.validate(n, action.size());

  std::vector<double> next(n);
  std::vector<Provenance> tags;
  const bool tagged = belief.has_provenance();
  if (tagged) tags.resize(n);

  std::size_t a = 0;
  const auto idx = action.indices();
  for (std::size_t i = 0; i < n; ++i) {
    if (a < idx.size() && idx[a] == i) {
      const bool good = outcome.bits[a++] != 0;
      next[i] = good ? model.p11() : model.p01();
      if (tagged) tags[i] = good ? Provenance::good() : Provenance::bad();
    } else {
      next[i] = tau(belief[i], model);
      if (tagged) tags[i] = belief.provenance()[i].advanced();
    }
  }
  return BeliefVector(std::move(next), std::move(tags));
}

double immediate_reward(const BeliefVector& belief, const ActionSet& action) {
  double r = 0.0;
  for (std::size_t i : action) {
    if (i >= belief.size()) throw DomainError("action references a channel outside the belief");
    r += belief[i];
  }
  return r;
}

std::vector<ActionSet> enumerate_actions(std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw DomainError("need 1 <= k <= n to enumerate actions");
  std::vector<ActionSet> out;
  std::vector<std::size_t> cur(k);
  for (std::size_t j = 0; j < k; ++j) cur[j] = j;
  while (true) {
    out.emplace_back(cur);
    // advance to the next combination in lexicographic order
    std::size_t j = k;
    while (j > 0 && cur[j - 1] == n - k + (j - 1)) --j;
    if (j == 0) break;
    ++cur[j - 1];
    for (std::size_t m = j; m < k; ++m) cur[m] = cur[m - 1] + 1;
  }
  return out;
}

}  // namespace osa
