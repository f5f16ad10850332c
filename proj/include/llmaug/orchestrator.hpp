#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "llmaug/consolidation.hpp"
#include "llmaug/corpus.hpp"
#include "llmaug/error.hpp"
#include "llmaug/llm_gateway.hpp"
#include "llmaug/policy.hpp"
#include "llmaug/prompt_engine.hpp"
#include "llmaug/retrieval.hpp"
#include "llmaug/utility.hpp"
#include "llmaug/working_memory.hpp"

namespace llmaug {

enum class FeedbackMode { None, RuleBased, SelfCriticism };

const char* to_string(FeedbackMode mode);
/// Accepts "none", "rule", "self-criticism".
FeedbackMode parse_feedback_mode(const std::string& name);

/// A trained softmax policy, acting greedily unless `sample` is set.
struct TrainedPolicy {
  SoftmaxPolicy policy;
  bool sample = false;
};

using PolicyChoice = std::variant<RulePolicyKind, TrainedPolicy>;

std::string describe(const PolicyChoice& policy);

struct AgentConfig {
  Task task = Task::CustomerService;
  PolicyChoice policy = RulePolicyKind::AlwaysUse;
  BackendConfig backend;
  std::shared_ptr<const Corpus> corpus;
  std::shared_ptr<const InvertedIndex> index;
  ConsolidationParams consolidation;
  double kf1_threshold = kDefaultKf1Threshold;
  std::size_t max_iterations = kDefaultMaxIterations;
  std::size_t token_budget = kDefaultTokenBudget;
  FeedbackMode feedback = FeedbackMode::RuleBased;
  // Off: candidates are not gated; with feedback on, every candidate is
  // revised until the budget runs out and the last one is sent.
  bool use_utility = true;

  /// Throws InvalidConfig.
  void validate() const;
  TurnLimits limits() const;
};

struct TraceStep {
  Action action = Action::SendResponse;
  double duration_ms = 0.0;
  std::optional<std::size_t> evidence_count;
  std::optional<std::uint64_t> prompt_hash;
  std::optional<UtilityReport> report;
  std::optional<std::string> feedback;
  std::optional<std::string> self_ask_reply;
  // Present when a softmax policy made the decision.
  std::optional<EpisodeStep> decision;
};

struct TurnTrace {
  std::vector<TraceStep> steps;
  std::string response;
  double response_kf1 = 0.0;
  bool response_passed = false;
  std::size_t llm_call_count = 0;
  DialogState final_state;
};

/// Carries the partial trace of a turn aborted by a gateway failure.
class TurnFailedError : public Error {
 public:
  TurnFailedError(ErrorKind cause, const std::string& what, TurnTrace partial)
      : Error(ErrorKind::TurnFailed, what), cause_(cause), partial_(std::move(partial)) {}

  ErrorKind cause() const noexcept { return cause_; }
  const TurnTrace& partial_trace() const noexcept { return partial_; }

 private:
  ErrorKind cause_;
  TurnTrace partial_;
};

struct TurnOptions {
  // Evidence injected before the loop starts (golden knowledge, or an
  // empty list to disable retrieval). Marks evidence as acquired.
  std::optional<std::vector<EvidenceChain>> preset_evidence;
  // Reference response for the aux metrics in utility reports.
  std::optional<std::string> reference;
  // Needed when a trained policy samples.
  std::mt19937_64* rng = nullptr;
};

struct TurnResult {
  std::string response;
  TurnTrace trace;
};

/// One user turn: decide, execute, verify, repeat until a response is
/// sent. Gateway failures surface as TurnFailedError.
TurnResult run_turn(const AgentConfig& config, Gateway& gateway, const std::string& query,
                    const std::vector<DialogTurn>& history, const TurnOptions& options = {});

/// Decisions made by a softmax policy, as a training episode.
Episode episode_from_trace(const TurnTrace& trace);

/// Single-hop chains holding raw knowledge strings.
std::vector<EvidenceChain> knowledge_chains(const std::vector<std::string>& knowledge);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& text);

/// One JSON object; durations are the only non-deterministic field.
std::string trace_to_json_line(const TurnTrace& trace, const std::string& item_id = {});

}  // namespace llmaug
