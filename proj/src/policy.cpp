#include "llmaug/policy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "llmaug/error.hpp"
#include "llmaug/llm_gateway.hpp"
#include "llmaug/prompt_engine.hpp"
#include "llmaug/text.hpp"

namespace llmaug {

const char* to_string(Action action) {
  switch (action) {
    case Action::AcquireEvidence: return "AcquireEvidence";
    case Action::GenerateCandidate: return "GenerateCandidate";
    case Action::ReviseWithFeedback: return "ReviseWithFeedback";
    case Action::SendResponse: return "SendResponse";
  }
  return "unknown";
}

const char* to_string(RulePolicyKind kind) {
  switch (kind) {
    case RulePolicyKind::NoKnowledge: return "no-knowledge";
    case RulePolicyKind::SelfAsk: return "self-ask";
    case RulePolicyKind::AlwaysUse: return "always-use";
  }
  return "unknown";
}

RulePolicyKind parse_rule_policy(const std::string& name) {
  if (name == "no-knowledge") return RulePolicyKind::NoKnowledge;
  if (name == "self-ask") return RulePolicyKind::SelfAsk;
  if (name == "always-use") return RulePolicyKind::AlwaysUse;
  throw Error(ErrorKind::InvalidInput, "unknown rule policy '" + name + "'");
}

namespace {

bool latest_failed(const DialogState& state, const TurnLimits& limits) {
  if (state.candidates.empty()) return false;
  return !limits.verify || !state.candidates.back().utility.pass;
}

std::size_t index_of(Action a) { return static_cast<std::size_t>(a); }

}  // namespace

ActionMask valid_actions(const DialogState& state, const TurnLimits& limits) {
  ActionMask mask{};
  const bool has_candidate = !state.candidates.empty();
  mask[index_of(Action::AcquireEvidence)] = !has_candidate && !state.evidence_acquired;
  mask[index_of(Action::GenerateCandidate)] = !has_candidate && state.iteration < limits.max_iterations;
  mask[index_of(Action::ReviseWithFeedback)] =
      limits.feedback_enabled && latest_failed(state, limits) && state.iteration < limits.max_iterations;
  mask[index_of(Action::SendResponse)] = has_candidate;
  return mask;
}

FeatureVector featurize(const DialogState& state, std::size_t max_iterations) {
  const double max_it = static_cast<double>(std::max<std::size_t>(1, max_iterations));
  double best = 0.0;
  for (const auto& c : state.candidates) best = std::max(best, c.utility.kf1);
  FeatureVector x;
  x << 1.0, state.evidence.empty() ? 0.0 : 1.0, std::min(1.0, static_cast<double>(state.iteration) / max_it), best,
      std::min(1.0, static_cast<double>(state.candidates.size()) / max_it),
      std::min(1.0, static_cast<double>(tokenize(state.query).size()) / 32.0);
  return x;
}

ActionDistribution action_probs(const SoftmaxPolicy& policy, const FeatureVector& features, const ActionMask& mask) {
  if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; })) {
    throw Error(ErrorKind::InvalidInput, "action mask is empty");
  }
  const ActionDistribution logits = policy.weights * features;
  double max_logit = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < kNumActions; ++a) {
    if (mask[static_cast<std::size_t>(a)]) max_logit = std::max(max_logit, logits(a));
  }
  ActionDistribution probs = ActionDistribution::Zero();
  double total = 0.0;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[static_cast<std::size_t>(a)]) continue;
    probs(a) = std::exp(logits(a) - max_logit);
    total += probs(a);
  }
  return probs / total;
}

Action sample_action(const SoftmaxPolicy& policy, const FeatureVector& features, const ActionMask& mask,
                     std::mt19937_64& rng) {
  const auto probs = action_probs(policy, features, mask);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double cumulative = 0.0;
  int last_valid = 0;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[static_cast<std::size_t>(a)]) continue;
    last_valid = a;
    cumulative += probs(a);
    if (u < cumulative) return static_cast<Action>(a);
  }
  return static_cast<Action>(last_valid);
}

Action greedy_action(const SoftmaxPolicy& policy, const FeatureVector& features, const ActionMask& mask) {
  const auto probs = action_probs(policy, features, mask);
  int best = -1;
  for (int a = 0; a < kNumActions; ++a) {
    if (!mask[static_cast<std::size_t>(a)]) continue;
    if (best < 0 || probs(a) > probs(best)) best = a;
  }
  return static_cast<Action>(best);
}

std::vector<double> step_returns(const Episode& episode, double gamma) {
  const std::size_t n = episode.steps.size();
  std::vector<double> out(n);
  double g = episode.reward;
  for (std::size_t i = n; i-- > 0;) {
    out[i] = g;
    g *= gamma;
  }
  return out;
}

PolicyWeights policy_gradient(const SoftmaxPolicy& policy, const std::vector<Episode>& episodes, double gamma,
                              double baseline) {
  PolicyWeights total = PolicyWeights::Zero();
  if (episodes.empty()) return total;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto& episode = episodes[e];
    const auto returns = step_returns(episode, gamma);
    PolicyWeights grad = PolicyWeights::Zero();
    for (std::size_t t = 0; t < episode.steps.size(); ++t) {
      const auto& step = episode.steps[t];
      const double advantage = returns[t] - baseline;
      if (advantage == 0.0) continue;
      const auto probs = action_probs(policy, step.features, step.mask);
      // d log pi(a) / d w_b = (1[b == a] - pi(b)) x for valid b, 0 otherwise.
      ActionDistribution coeff = -probs;
      coeff(static_cast<int>(step.action)) += 1.0;
      grad.noalias() += advantage * coeff * step.features.transpose();
    }
    if (!grad.allFinite()) {
      throw Error(ErrorKind::Training, "non-finite policy gradient in episode " + std::to_string(e));
    }
    total += grad;
  }
  return total / static_cast<double>(episodes.size());
}

SoftmaxPolicy reinforce_update(SoftmaxPolicy policy, const std::vector<Episode>& episodes, double lr, double gamma,
                               RewardBaseline& baseline) {
  if (episodes.empty()) throw Error(ErrorKind::InvalidInput, "reinforce_update needs at least one episode");
  if (!(lr >= 0.0)) throw Error(ErrorKind::InvalidInput, "learning rate must be non-negative");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorKind::InvalidInput, "gamma must lie in (0, 1]");
  if (lr > 0.0) policy.weights += lr * policy_gradient(policy, episodes, gamma, baseline.value);
  for (const auto& episode : episodes) baseline.update(episode.reward);
  return policy;
}

RuleDecision rule_policy_decide(RulePolicyKind kind, const DialogState& state, const TurnLimits& limits,
                                Gateway* gateway) {
  if (kind == RulePolicyKind::SelfAsk && gateway == nullptr) {
    throw Error(ErrorKind::InvalidConfig, "self-ask policy needs an LLM gateway");
  }
  const auto mask = valid_actions(state, limits);
  RuleDecision decision;
  if (state.candidates.empty()) {
    decision.action = Action::GenerateCandidate;
    if (allowed(mask, Action::AcquireEvidence) && state.evidence.empty()) {
      if (kind == RulePolicyKind::AlwaysUse) {
        decision.action = Action::AcquireEvidence;
      } else if (kind == RulePolicyKind::SelfAsk) {
        decision.self_ask_reply = gateway->complete(LlmRequest{.prompt = render_self_ask_prompt(state)});
        const auto words = tokenize(*decision.self_ask_reply);
        if (!words.empty() && words.front() == "no") decision.action = Action::AcquireEvidence;
      }
    }
    if (!allowed(mask, decision.action)) decision.action = Action::SendResponse;
    return decision;
  }
  decision.action = allowed(mask, Action::ReviseWithFeedback) ? Action::ReviseWithFeedback : Action::SendResponse;
  return decision;
}

void save_policy(const SoftmaxPolicy& policy, std::ostream& out) {
  std::ostringstream buf;
  buf.precision(std::numeric_limits<double>::max_digits10);
  buf << "llmaug-policy 1\n" << kNumActions << ' ' << kNumFeatures << '\n' << "seed " << policy.seed << '\n';
  for (int a = 0; a < kNumActions; ++a) {
    for (int f = 0; f < kNumFeatures; ++f) {
      if (f > 0) buf << ' ';
      buf << policy.weights(a, f);
    }
    buf << '\n';
  }
  out << buf.str();
}

SoftmaxPolicy load_policy(std::istream& in) {
  std::string magic;
  int version = 0;
  int rows = 0;
  int cols = 0;
  std::string seed_key;
  SoftmaxPolicy policy;
  if (!(in >> magic >> version) || magic != "llmaug-policy") throw Error(ErrorKind::Load, "not a policy checkpoint");
  if (version != 1) throw Error(ErrorKind::Load, "unsupported checkpoint version " + std::to_string(version));
  if (!(in >> rows >> cols) || rows != kNumActions || cols != kNumFeatures) {
    throw Error(ErrorKind::Load, "checkpoint dimensions do not match the policy");
  }
  if (!(in >> seed_key >> policy.seed) || seed_key != "seed") throw Error(ErrorKind::Load, "checkpoint seed missing");
  for (int a = 0; a < kNumActions; ++a) {
    for (int f = 0; f < kNumFeatures; ++f) {
      if (!(in >> policy.weights(a, f))) throw Error(ErrorKind::Load, "checkpoint weights truncated");
    }
  }
  if (!policy.weights.allFinite()) throw Error(ErrorKind::Load, "checkpoint holds non-finite weights");
  return policy;
}

}  // namespace llmaug
