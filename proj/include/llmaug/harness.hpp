#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llmaug/orchestrator.hpp"

namespace llmaug {

struct GoldEntry {
  std::size_t turn = 0;  // index of the assistant turn in DialogSession::turns
  std::string response;
  std::vector<std::string> knowledge;
};

struct DialogSession {
  std::string id;
  std::vector<DialogTurn> turns;
  std::vector<GoldEntry> gold;
};

struct QaInstance {
  std::string id;
  std::string question;
  std::vector<std::string> answers;
};

template <typename T>
struct Loaded {
  std::vector<T> items;
  std::vector<std::string> warnings;
};

/// One session per line:
///   {"id", "turns": [{"speaker": "user"|"assistant", "text"}],
///    "gold": [{"turn", "response", "knowledge": [string | {"doc": id}]}]}
/// When `corpus` is given, {"doc": id} entries resolve to document bodies;
/// unknown ids produce a warning and fall back to the id string.
Loaded<DialogSession> load_dialog_dataset(std::istream& in, const Corpus* corpus = nullptr,
                                          const std::string& source_name = "<stream>");
Loaded<DialogSession> load_dialog_dataset(const std::filesystem::path& path, const Corpus* corpus = nullptr);

/// One instance per line: {"id", "question", "answers": [string]}.
Loaded<QaInstance> load_qa_dataset(std::istream& in, const std::string& source_name = "<stream>");
Loaded<QaInstance> load_qa_dataset(const std::filesystem::path& path);

enum class KnowledgeMode { Retrieved, Golden, None };

const char* to_string(KnowledgeMode mode);
/// Accepts "retrieved", "golden", "none".
KnowledgeMode parse_knowledge_mode(const std::string& name);

/// Supplies the gateway for the n-th evaluated item.
using GatewaySource = std::function<std::shared_ptr<Gateway>(std::size_t item)>;

/// One gateway shared by every item.
GatewaySource shared_gateway(std::shared_ptr<Gateway> gateway);
/// A fresh gateway built from `config` (one shared instance).
GatewaySource shared_gateway(const BackendConfig& config);
/// A separate scripted mock per item; item n replays scripts[n].
GatewaySource per_item_scripts(std::vector<std::vector<std::string>> scripts);

struct EvalRow {
  std::string id;
  std::map<std::string, double> metrics;  // x100
  double response_tokens = 0.0;
  double llm_calls = 0.0;
  std::string response;
  std::optional<std::string> error;
};

struct EvalReport {
  std::vector<std::string> metric_names;
  std::map<std::string, double> means;  // x100, over successful rows
  double avg_response_tokens = 0.0;
  double llm_calls_per_turn = 0.0;
  std::size_t error_count = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<EvalRow> rows;  // sorted by id
};

/// Means over successful rows, recomputed from the rows.
void recompute_means(EvalReport& report);

/// Every gold-aligned assistant turn becomes one item. Golden mode injects
/// the gold knowledge as single-hop chains; None disables retrieval. KF1
/// is measured against the knowledge the turn used, or the gold knowledge
/// when it used none. Reference metrics use the gold response.
EvalReport evaluate(const std::vector<DialogSession>& sessions, const AgentConfig& config,
                    KnowledgeMode knowledge_mode, const GatewaySource& gateways,
                    std::vector<std::string>* trace_lines = nullptr);

/// Token P/R/F1 of the best-matching gold answer per question.
EvalReport evaluate_qa(const std::vector<QaInstance>& instances, const AgentConfig& config,
                       KnowledgeMode knowledge_mode, const GatewaySource& gateways,
                       std::vector<std::string>* trace_lines = nullptr);

struct TrainOptions {
  std::size_t episodes = 1000;
  std::uint64_t seed = 0;
  std::size_t eval_every = 100;
  std::size_t batch_size = 8;
  double learning_rate = 0.5;
  double gamma = 1.0;
  KnowledgeMode knowledge_mode = KnowledgeMode::Retrieved;
  SoftmaxPolicy initial;
};

struct CurveRow {
  std::size_t episode = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;

  bool operator==(const CurveRow&) const = default;
};

struct TrainResult {
  SoftmaxPolicy policy;
  std::vector<CurveRow> curve;
  RewardBaseline baseline;
};

/// REINFORCE over dataset replay. Items with index % 5 == 4 are held out
/// for the curve (all items when there are fewer than two). Episode e
/// replays training item e mod n with an rng seeded from (seed, e).
TrainResult train_policy(const std::vector<DialogSession>& sessions, const AgentConfig& config,
                         const TrainOptions& options, const GatewaySource& gateways);

/// Mean reward of `policy` over the held-out items, `repeats` passes.
/// Sampling uses rng streams seeded from (seed, pass, item).
CurveRow policy_reward(const std::vector<DialogSession>& sessions, const AgentConfig& config,
                       const TrainedPolicy& policy, KnowledgeMode knowledge_mode, const GatewaySource& gateways,
                       std::uint64_t seed = 0, std::size_t repeats = 1);

struct AblationGrid {
  std::vector<PolicyChoice> policies;
  std::vector<FeedbackMode> feedback_modes;
  std::vector<bool> utility_settings;
};

struct AblationRow {
  std::string policy;
  FeedbackMode feedback = FeedbackMode::None;
  bool utility = true;
  std::optional<EvalReport> report;
  std::optional<std::string> error;
};

/// Runs evaluate once per grid cell with a fresh gateway source.
std::vector<AblationRow> ablate(const std::vector<DialogSession>& sessions, const AgentConfig& base,
                                const AblationGrid& grid, KnowledgeMode knowledge_mode,
                                const std::function<GatewaySource()>& fresh_gateways);

void write_report_csv(const EvalReport& report, std::ostream& out);
void write_report_table(const EvalReport& report, std::ostream& out);
void write_curve_csv(const std::vector<CurveRow>& curve, std::ostream& out);
void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& out);
void write_ablation_table(const std::vector<AblationRow>& rows, std::ostream& out);

struct ReplOptions {
  bool show_trace = false;
};

/// Line-oriented chat loop: "/quit" exits, "/golden <text>" injects
/// knowledge for the next turn, blank lines re-prompt. Returns the exit
/// code.
int repl(const AgentConfig& config, Gateway& gateway, std::istream& in, std::ostream& out,
         const ReplOptions& options = {});

}  // namespace llmaug
