#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "llmaug/working_memory.hpp"

namespace llmaug {

class Gateway;

enum class Action : int { AcquireEvidence = 0, GenerateCandidate = 1, ReviseWithFeedback = 2, SendResponse = 3 };

inline constexpr int kNumActions = 4;
inline constexpr int kNumFeatures = 6;

const char* to_string(Action action);

template <typename Scalar>
using FeatureVectorT = Eigen::Matrix<Scalar, kNumFeatures, 1>;
template <typename Scalar>
using PolicyWeightsT = Eigen::Matrix<Scalar, kNumActions, kNumFeatures>;
template <typename Scalar>
using ActionDistributionT = Eigen::Matrix<Scalar, kNumActions, 1>;

using FeatureVector = FeatureVectorT<double>;
using PolicyWeights = PolicyWeightsT<double>;
using ActionDistribution = ActionDistributionT<double>;

/// Valid-action set, indexed by Action.
using ActionMask = std::array<bool, kNumActions>;

inline bool allowed(const ActionMask& mask, Action a) { return mask[static_cast<std::size_t>(a)]; }

/// What the turn loop permits beyond the state itself.
struct TurnLimits {
  std::size_t max_iterations = kDefaultMaxIterations;
  bool feedback_enabled = true;
  // When false, candidates are never treated as passing, so revision runs
  // whenever feedback is enabled and budget remains.
  bool verify = true;
};

/// Acquire only before the first generation and only once; Generate only
/// for the first candidate; Revise after a failed latest candidate with
/// budget left; Send once any candidate exists.
ActionMask valid_actions(const DialogState& state, const TurnLimits& limits);

/// [bias, has_evidence, iteration / max, best kf1, candidates / max,
/// min(1, query tokens / 32)].
FeatureVector featurize(const DialogState& state, std::size_t max_iterations = kDefaultMaxIterations);

/// Linear softmax policy; row order follows Action.
struct SoftmaxPolicy {
  PolicyWeights weights = PolicyWeights::Zero();
  std::uint64_t seed = 0;
};

/// Softmax of weights * features over the masked actions; masked-out
/// actions get exactly 0. Throws InvalidInput on an empty mask.
ActionDistribution action_probs(const SoftmaxPolicy& policy, const FeatureVector& features, const ActionMask& mask);

Action sample_action(const SoftmaxPolicy& policy, const FeatureVector& features, const ActionMask& mask,
                     std::mt19937_64& rng);
/// Ties go to the lowest action index.
Action greedy_action(const SoftmaxPolicy& policy, const FeatureVector& features, const ActionMask& mask);

struct EpisodeStep {
  FeatureVector features = FeatureVector::Zero();
  Action action = Action::SendResponse;
  ActionMask mask{};
};

/// One turn under a policy: every decision and the terminal reward.
struct Episode {
  std::vector<EpisodeStep> steps;
  double reward = 0.0;
  bool force_stopped = false;
};

/// G_t = gamma^(T-1-t) * R for a terminal-only reward.
std::vector<double> step_returns(const Episode& episode, double gamma);

/// Exponential moving average of episode rewards.
struct RewardBaseline {
  double value = 0.0;
  double decay = 0.99;

  void update(double reward) { value = decay * value + (1.0 - decay) * reward; }
};

/// Mean over episodes of sum_t (G_t - baseline) * d log pi(a_t | s_t) / d weights.
/// Throws Training, naming the episode, on a non-finite gradient.
PolicyWeights policy_gradient(const SoftmaxPolicy& policy, const std::vector<Episode>& episodes, double gamma,
                              double baseline);

/// One REINFORCE step: weights += lr * gradient, then the baseline absorbs
/// every episode reward in order.
SoftmaxPolicy reinforce_update(SoftmaxPolicy policy, const std::vector<Episode>& episodes, double lr, double gamma,
                               RewardBaseline& baseline);

enum class RulePolicyKind { NoKnowledge, SelfAsk, AlwaysUse };

const char* to_string(RulePolicyKind kind);
/// Accepts "no-knowledge", "self-ask", "always-use".
RulePolicyKind parse_rule_policy(const std::string& name);

struct RuleDecision {
  Action action = Action::SendResponse;
  // Set when the decision cost an LLM call (self-ask).
  std::optional<std::string> self_ask_reply;
};

/// Hand-written policies. SelfAsk asks the LLM whether it can answer
/// without external knowledge and acquires on a reply starting with "no".
/// Throws InvalidConfig for SelfAsk without a gateway.
RuleDecision rule_policy_decide(RulePolicyKind kind, const DialogState& state, const TurnLimits& limits,
                                Gateway* gateway);

/// Checkpoint: "llmaug-policy 1" header, dimensions, seed, then the
/// weights row-major at full precision.
void save_policy(const SoftmaxPolicy& policy, std::ostream& out);
/// Throws Load on a malformed or mismatched checkpoint.
SoftmaxPolicy load_policy(std::istream& in);

}  // namespace llmaug
