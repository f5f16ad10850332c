#include "llmaug/orchestrator.hpp"

#include <chrono>

#include <json.hpp>

namespace llmaug {

using json = nlohmann::json;

const char* to_string(FeedbackMode mode) {
  switch (mode) {
    case FeedbackMode::None: return "none";
    case FeedbackMode::RuleBased: return "rule";
    case FeedbackMode::SelfCriticism: return "self-criticism";
  }
  return "unknown";
}

FeedbackMode parse_feedback_mode(const std::string& name) {
  if (name == "none") return FeedbackMode::None;
  if (name == "rule") return FeedbackMode::RuleBased;
  if (name == "self-criticism") return FeedbackMode::SelfCriticism;
  throw Error(ErrorKind::InvalidInput, "unknown feedback mode '" + name + "'");
}

std::string describe(const PolicyChoice& policy) {
  if (const auto* rule = std::get_if<RulePolicyKind>(&policy)) return to_string(*rule);
  return std::get<TrainedPolicy>(policy).sample ? "trained-sample" : "trained";
}

void AgentConfig::validate() const {
  if (max_iterations < 1) throw Error(ErrorKind::InvalidConfig, "max_iterations must be at least 1");
  if (!(kf1_threshold >= 0.0 && kf1_threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidConfig, "kf1 threshold must lie in [0, 1]");
  }
  if (consolidation.k_retrieve == 0 || consolidation.k_chains == 0 || consolidation.max_len == 0) {
    throw Error(ErrorKind::InvalidConfig, "retrieval and chain counts must be positive");
  }
  if ((corpus == nullptr) != (index == nullptr)) {
    throw Error(ErrorKind::InvalidConfig, "corpus and index must be supplied together");
  }
  backend.validate();
}

TurnLimits AgentConfig::limits() const {
  return TurnLimits{max_iterations, feedback != FeedbackMode::None, use_utility};
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<EvidenceChain> knowledge_chains(const std::vector<std::string>& knowledge) {
  std::vector<EvidenceChain> out;
  out.reserve(knowledge.size());
  for (std::size_t i = 0; i < knowledge.size(); ++i) {
    out.push_back(EvidenceChain{{"gold:" + std::to_string(i)}, 1.0, {knowledge[i]}});
  }
  return out;
}

namespace {

class TurnRunner {
 public:
  TurnRunner(const AgentConfig& config, Gateway& gateway, const TurnOptions& options)
      : config_(config), gateway_(gateway), options_(options), limits_(config.limits()) {}

  TurnResult run(const std::string& query, const std::vector<DialogTurn>& history) {
    state_ = new_state(query, history);
    if (options_.preset_evidence) state_ = with_evidence(state_, *options_.preset_evidence);

    // Acquire + generate + revisions + send, plus slack.
    const std::size_t max_steps = config_.max_iterations + 4;
    for (std::size_t n = 0; n < max_steps; ++n) {
      const auto start = std::chrono::steady_clock::now();
      TraceStep step;
      step.action = decide(step);
      try {
        execute(step);
      } catch (const Error& e) {
        finish_step(step, start);
        fail(e);
      }
      finish_step(step, start);
      if (step.action == Action::SendResponse) {
        trace_.final_state = state_;
        return TurnResult{trace_.response, trace_};
      }
    }
    throw Error(ErrorKind::TurnFailed, "turn did not reach SendResponse");
  }

 private:
  Action decide(TraceStep& step) {
    const auto mask = valid_actions(state_, limits_);
    if (const auto* rule = std::get_if<RulePolicyKind>(&config_.policy)) {
      RuleDecision decision;
      try {
        decision = rule_policy_decide(*rule, state_, limits_, &gateway_);
      } catch (const Error& e) {
        fail(e);
      }
      if (decision.self_ask_reply) {
        ++trace_.llm_call_count;
        step.self_ask_reply = decision.self_ask_reply;
      }
      return decision.action;
    }
    const auto& trained = std::get<TrainedPolicy>(config_.policy);
    EpisodeStep record;
    record.features = featurize(state_, config_.max_iterations);
    record.mask = mask;
    if (trained.sample) {
      if (options_.rng == nullptr) throw Error(ErrorKind::InvalidConfig, "sampling policy needs an rng");
      record.action = sample_action(trained.policy, record.features, mask, *options_.rng);
    } else {
      record.action = greedy_action(trained.policy, record.features, mask);
    }
    step.decision = record;
    return record.action;
  }

  void execute(TraceStep& step) {
    switch (step.action) {
      case Action::AcquireEvidence: {
        std::vector<EvidenceChain> chains;
        if (config_.index != nullptr) {
          chains = consolidate(state_.query, state_.history, *config_.index, *config_.corpus, config_.consolidation);
        }
        state_ = with_evidence(state_, std::move(chains));
        step.evidence_count = state_.evidence.size();
        break;
      }
      case Action::GenerateCandidate:
        generate(step);
        break;
      case Action::ReviseWithFeedback:
        step.feedback = revision_feedback();
        state_ = with_feedback(state_, *step.feedback);
        generate(step);
        break;
      case Action::SendResponse: {
        const CandidateResponse& sent = select_response();
        trace_.response = sent.text;
        trace_.response_kf1 = sent.utility.kf1;
        trace_.response_passed = sent.utility.pass;
        break;
      }
    }
  }

  void generate(TraceStep& step) {
    const bool with_evidence = !state_.evidence.empty();
    const auto prompt = render_task_prompt(config_.task, state_, with_evidence, config_.token_budget);
    step.prompt_hash = fnv1a64(prompt.rendered);
    ++trace_.llm_call_count;
    auto text = gateway_.complete(LlmRequest{.prompt = prompt.rendered});
    auto report = assess(state_, text, config_.kf1_threshold, options_.reference);
    step.report = report;
    state_ = record_candidate(std::move(state_), std::move(text), std::move(report), config_.max_iterations);
  }

  std::string revision_feedback() {
    if (config_.feedback == FeedbackMode::SelfCriticism && !state_.evidence.empty()) {
      ++trace_.llm_call_count;
      return self_criticism_feedback(gateway_, state_, state_.candidates.back().text);
    }
    return state_.feedback.value_or(kRuleFeedback);
  }

  const CandidateResponse& select_response() const {
    if (!config_.use_utility) {
      if (state_.candidates.empty()) throw Error(ErrorKind::NoCandidate, "no candidate responses");
      return state_.candidates.back();
    }
    for (auto it = state_.candidates.rbegin(); it != state_.candidates.rend(); ++it) {
      if (it->utility.pass) return *it;
    }
    return best_candidate(state_);
  }

  void finish_step(TraceStep& step, std::chrono::steady_clock::time_point start) {
    step.duration_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    trace_.steps.push_back(std::move(step));
  }

  [[noreturn]] void fail(const Error& e) {
    trace_.final_state = state_;
    throw TurnFailedError(e.kind(), std::string("turn failed: ") + e.what(), trace_);
  }

  const AgentConfig& config_;
  Gateway& gateway_;
  const TurnOptions& options_;
  TurnLimits limits_;
  DialogState state_;
  TurnTrace trace_;
};

}  // namespace

TurnResult run_turn(const AgentConfig& config, Gateway& gateway, const std::string& query,
                    const std::vector<DialogTurn>& history, const TurnOptions& options) {
  config.validate();
  return TurnRunner(config, gateway, options).run(query, history);
}

Episode episode_from_trace(const TurnTrace& trace) {
  Episode episode;
  for (const auto& step : trace.steps) {
    if (step.decision) episode.steps.push_back(*step.decision);
  }
  episode.reward = trace.response_kf1;
  episode.force_stopped = !trace.response_passed;
  return episode;
}

std::string trace_to_json_line(const TurnTrace& trace, const std::string& item_id) {
  json steps = json::array();
  for (const auto& s : trace.steps) {
    json step = {{"action", to_string(s.action)}, {"duration_ms", s.duration_ms}};
    if (s.evidence_count) step["evidence_count"] = *s.evidence_count;
    if (s.prompt_hash) step["prompt_hash"] = *s.prompt_hash;
    if (s.report) {
      json report = {{"kf1", s.report->kf1}, {"pass", s.report->pass}};
      if (s.report->feedback) report["feedback"] = *s.report->feedback;
      for (const auto& [k, v] : s.report->aux) report["aux"][k] = v;
      step["utility"] = std::move(report);
    }
    if (s.feedback) step["feedback"] = *s.feedback;
    if (s.self_ask_reply) step["self_ask_reply"] = *s.self_ask_reply;
    steps.push_back(std::move(step));
  }
  json line = {{"steps", std::move(steps)},
               {"response", trace.response},
               {"response_kf1", trace.response_kf1},
               {"llm_call_count", trace.llm_call_count}};
  if (!item_id.empty()) line["id"] = item_id;
  return line.dump();
}

}  // namespace llmaug
