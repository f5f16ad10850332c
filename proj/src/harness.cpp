#include "llmaug/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "llmaug/text.hpp"

namespace llmaug {

using json = nlohmann::json;

const char* to_string(KnowledgeMode mode) {
  switch (mode) {
    case KnowledgeMode::Retrieved: return "retrieved";
    case KnowledgeMode::Golden: return "golden";
    case KnowledgeMode::None: return "none";
  }
  return "unknown";
}

KnowledgeMode parse_knowledge_mode(const std::string& name) {
  if (name == "retrieved") return KnowledgeMode::Retrieved;
  if (name == "golden") return KnowledgeMode::Golden;
  if (name == "none") return KnowledgeMode::None;
  throw Error(ErrorKind::InvalidInput, "unknown knowledge mode '" + name + "'");
}

// ---------------------------------------------------------------------------
// Dataset loading

namespace {

[[noreturn]] void load_fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw Error(ErrorKind::Load, source + ":" + std::to_string(line) + ": " + msg);
}

const json& require(const json& obj, const char* field, const std::string& source, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end()) load_fail(source, line, std::string("missing field '") + field + "'");
  return *it;
}

std::string require_string(const json& obj, const char* field, const std::string& source, std::size_t line) {
  const auto& v = require(obj, field, source, line);
  if (!v.is_string()) load_fail(source, line, std::string("field '") + field + "' must be a string");
  return v.get<std::string>();
}

template <typename Fn>
void for_each_json_line(std::istream& in, const std::string& source, Fn fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      load_fail(source, line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) load_fail(source, line_no, "expected a JSON object");
    fn(obj, line_no);
  }
}

}  // namespace

Loaded<DialogSession> load_dialog_dataset(std::istream& in, const Corpus* corpus, const std::string& source) {
  Loaded<DialogSession> out;
  for_each_json_line(in, source, [&](const json& obj, std::size_t line) {
    DialogSession session;
    session.id = require_string(obj, "id", source, line);
    const auto& turns = require(obj, "turns", source, line);
    if (!turns.is_array() || turns.empty()) load_fail(source, line, "field 'turns' must be a non-empty array");
    for (std::size_t i = 0; i < turns.size(); ++i) {
      const auto& t = turns[i];
      if (!t.is_object()) load_fail(source, line, "field 'turns' must hold objects");
      const auto speaker = require_string(t, "speaker", source, line);
      DialogTurn turn;
      if (speaker == "user") {
        turn.speaker = Speaker::User;
      } else if (speaker == "assistant") {
        turn.speaker = Speaker::Assistant;
      } else {
        load_fail(source, line, "field 'speaker' must be 'user' or 'assistant' (session " + session.id + ")");
      }
      const Speaker expected = i % 2 == 0 ? Speaker::User : Speaker::Assistant;
      if (turn.speaker != expected) {
        load_fail(source, line, "field 'turns' must alternate starting with user (session " + session.id +
                                    ", turn " + std::to_string(i) + ")");
      }
      turn.text = require_string(t, "text", source, line);
      if (trim(turn.text).empty()) {
        load_fail(source, line, "field 'text' is empty (session " + session.id + ", turn " + std::to_string(i) + ")");
      }
      session.turns.push_back(std::move(turn));
    }
    if (auto it = obj.find("gold"); it != obj.end()) {
      if (!it->is_array()) load_fail(source, line, "field 'gold' must be an array");
      for (const auto& g : *it) {
        if (!g.is_object()) load_fail(source, line, "field 'gold' must hold objects");
        GoldEntry entry;
        const auto& turn = require(g, "turn", source, line);
        if (!turn.is_number_unsigned()) load_fail(source, line, "field 'turn' must be a non-negative integer");
        entry.turn = turn.get<std::size_t>();
        if (entry.turn >= session.turns.size() || session.turns[entry.turn].speaker != Speaker::Assistant) {
          load_fail(source, line, "field 'turn' must index an assistant turn (session " + session.id + ", turn " +
                                      std::to_string(entry.turn) + ")");
        }
        entry.response = require_string(g, "response", source, line);
        if (auto k = g.find("knowledge"); k != g.end()) {
          if (!k->is_array()) load_fail(source, line, "field 'knowledge' must be an array");
          for (const auto& item : *k) {
            if (item.is_string()) {
              entry.knowledge.push_back(item.get<std::string>());
            } else if (item.is_object() && item.contains("doc") && item["doc"].is_string()) {
              const auto id = item["doc"].get<std::string>();
              const Document* doc = corpus != nullptr ? corpus->find(id) : nullptr;
              if (doc != nullptr) {
                entry.knowledge.push_back(doc->body);
              } else {
                out.warnings.push_back(source + ":" + std::to_string(line) + ": session " + session.id +
                                       ": gold knowledge references unknown document '" + id +
                                       "'; using the raw string");
                entry.knowledge.push_back(id);
              }
            } else {
              load_fail(source, line, "field 'knowledge' must hold strings or {\"doc\": id} objects");
            }
          }
        }
        session.gold.push_back(std::move(entry));
      }
    }
    out.items.push_back(std::move(session));
  });
  return out;
}

Loaded<DialogSession> load_dialog_dataset(const std::filesystem::path& path, const Corpus* corpus) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Load, "cannot open dataset " + path.string());
  return load_dialog_dataset(in, corpus, path.string());
}

Loaded<QaInstance> load_qa_dataset(std::istream& in, const std::string& source) {
  Loaded<QaInstance> out;
  for_each_json_line(in, source, [&](const json& obj, std::size_t line) {
    QaInstance inst;
    inst.id = require_string(obj, "id", source, line);
    inst.question = require_string(obj, "question", source, line);
    if (trim(inst.question).empty()) load_fail(source, line, "field 'question' is empty");
    const auto& answers = require(obj, "answers", source, line);
    if (!answers.is_array() || answers.empty()) load_fail(source, line, "field 'answers' must be a non-empty array");
    for (const auto& a : answers) {
      if (!a.is_string()) load_fail(source, line, "field 'answers' must hold strings");
      inst.answers.push_back(a.get<std::string>());
    }
    out.items.push_back(std::move(inst));
  });
  return out;
}

Loaded<QaInstance> load_qa_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Load, "cannot open dataset " + path.string());
  return load_qa_dataset(in, path.string());
}

// ---------------------------------------------------------------------------
// Gateway sources

GatewaySource shared_gateway(std::shared_ptr<Gateway> gateway) {
  return [gateway = std::move(gateway)](std::size_t) { return gateway; };
}

GatewaySource shared_gateway(const BackendConfig& config) {
  return shared_gateway(std::make_shared<Gateway>(config));
}

GatewaySource per_item_scripts(std::vector<std::vector<std::string>> scripts) {
  auto shared = std::make_shared<const std::vector<std::vector<std::string>>>(std::move(scripts));
  return [shared](std::size_t item) {
    if (item >= shared->size()) {
      throw Error(ErrorKind::MockExhausted, "no script for item " + std::to_string(item));
    }
    return std::make_shared<Gateway>(scripted_mock((*shared)[item]));
  };
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

struct TurnItem {
  std::string id;
  std::string query;
  std::vector<DialogTurn> history;
  std::string gold_response;
  std::vector<std::string> knowledge;
};

std::string item_id(const std::string& session, std::size_t turn) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu", turn);
  return session + "#" + buf;
}

std::vector<TurnItem> turn_items(const std::vector<DialogSession>& sessions) {
  std::vector<TurnItem> items;
  for (const auto& s : sessions) {
    for (const auto& g : s.gold) {
      TurnItem item;
      item.id = item_id(s.id, g.turn);
      item.query = s.turns[g.turn - 1].text;
      item.history.assign(s.turns.begin(), s.turns.begin() + static_cast<std::ptrdiff_t>(g.turn - 1));
      item.gold_response = g.response;
      item.knowledge = g.knowledge;
      items.push_back(std::move(item));
    }
  }
  return items;
}

void check_mode(const AgentConfig& config, KnowledgeMode mode) {
  if (mode == KnowledgeMode::Retrieved && config.index == nullptr) {
    throw Error(ErrorKind::InvalidConfig, "retrieved knowledge mode needs a corpus index");
  }
}

TurnOptions options_for(KnowledgeMode mode, const std::vector<std::string>& knowledge) {
  TurnOptions options;
  if (mode == KnowledgeMode::Golden) options.preset_evidence = knowledge_chains(knowledge);
  if (mode == KnowledgeMode::None) options.preset_evidence = std::vector<EvidenceChain>{};
  return options;
}

std::vector<std::pair<std::string, std::string>> config_echo(const AgentConfig& config, KnowledgeMode mode) {
  std::ostringstream threshold;
  threshold << config.kf1_threshold;
  return {{"task", to_string(config.task)},
          {"policy", describe(config.policy)},
          {"feedback", to_string(config.feedback)},
          {"utility", config.use_utility ? "on" : "off"},
          {"kf1_threshold", threshold.str()},
          {"max_iterations", std::to_string(config.max_iterations)},
          {"knowledge", to_string(mode)},
          {"backend", to_string(config.backend.kind)}};
}

EvalRow error_row(const std::string& id, const Error& e) {
  EvalRow row;
  row.id = id;
  row.error = std::string(to_string(e.kind())) + ": " + e.what();
  if (const auto* tf = dynamic_cast<const TurnFailedError*>(&e)) {
    row.llm_calls = static_cast<double>(tf->partial_trace().llm_call_count);
  }
  return row;
}

void finalize(EvalReport& report) {
  std::sort(report.rows.begin(), report.rows.end(), [](const EvalRow& a, const EvalRow& b) { return a.id < b.id; });
  recompute_means(report);
}

}  // namespace

void recompute_means(EvalReport& report) {
  report.means.clear();
  report.avg_response_tokens = 0.0;
  report.llm_calls_per_turn = 0.0;
  report.error_count = 0;
  std::size_t ok = 0;
  for (const auto& name : report.metric_names) report.means[name] = 0.0;
  for (const auto& row : report.rows) {
    if (row.error) {
      ++report.error_count;
      continue;
    }
    ++ok;
    for (const auto& name : report.metric_names) report.means[name] += row.metrics.at(name);
    report.avg_response_tokens += row.response_tokens;
    report.llm_calls_per_turn += row.llm_calls;
  }
  if (ok == 0) return;
  const auto n = static_cast<double>(ok);
  for (auto& [name, value] : report.means) value /= n;
  report.avg_response_tokens /= n;
  report.llm_calls_per_turn /= n;
}

EvalReport evaluate(const std::vector<DialogSession>& sessions, const AgentConfig& config,
                    KnowledgeMode knowledge_mode, const GatewaySource& gateways,
                    std::vector<std::string>* trace_lines) {
  if (config.task == Task::WikiQA) throw Error(ErrorKind::InvalidConfig, "use evaluate_qa for the QA task");
  check_mode(config, knowledge_mode);
  EvalReport report;
  report.metric_names = {"kf1", "bleu4", "rouge1_f", "chrf"};
  report.config = config_echo(config, knowledge_mode);

  const auto items = turn_items(sessions);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    auto options = options_for(knowledge_mode, item.knowledge);
    options.reference = item.gold_response;
    try {
      auto gateway = gateways(i);
      const auto result = run_turn(config, *gateway, item.query, item.history, options);
      const auto& trace = result.trace;
      if (trace_lines != nullptr) trace_lines->push_back(trace_to_json_line(trace, item.id));
      double grounding = 0.0;
      if (!trace.final_state.evidence.empty()) {
        grounding = kf1(result.response, evidence_texts(trace.final_state));
      } else if (!item.knowledge.empty()) {
        grounding = kf1(result.response, item.knowledge);
      }
      EvalRow row;
      row.id = item.id;
      row.response = result.response;
      row.metrics["kf1"] = 100.0 * grounding;
      row.metrics["bleu4"] = 100.0 * bleu4(result.response, item.gold_response);
      row.metrics["rouge1_f"] = 100.0 * rouge1_f(result.response, item.gold_response);
      row.metrics["chrf"] = 100.0 * chrf(result.response, item.gold_response);
      row.response_tokens = static_cast<double>(tokenize(result.response).size());
      row.llm_calls = static_cast<double>(trace.llm_call_count);
      report.rows.push_back(std::move(row));
    } catch (const Error& e) {
      report.rows.push_back(error_row(item.id, e));
    }
  }
  finalize(report);
  return report;
}

EvalReport evaluate_qa(const std::vector<QaInstance>& instances, const AgentConfig& config,
                       KnowledgeMode knowledge_mode, const GatewaySource& gateways,
                       std::vector<std::string>* trace_lines) {
  if (knowledge_mode == KnowledgeMode::Golden) {
    throw Error(ErrorKind::InvalidConfig, "QA instances carry no gold knowledge");
  }
  check_mode(config, knowledge_mode);
  AgentConfig qa_config = config;
  qa_config.task = Task::WikiQA;
  EvalReport report;
  report.metric_names = {"token_p", "token_r", "token_f1"};
  report.config = config_echo(qa_config, knowledge_mode);

  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    try {
      auto gateway = gateways(i);
      const auto result = run_turn(qa_config, *gateway, inst.question, {}, options_for(knowledge_mode, {}));
      if (trace_lines != nullptr) trace_lines->push_back(trace_to_json_line(result.trace, inst.id));
      PrecisionRecallF1 best{};
      bool first = true;
      for (const auto& answer : inst.answers) {
        const auto prf = token_f1(result.response, answer);
        if (first || prf.f1 > best.f1) best = prf;
        first = false;
      }
      EvalRow row;
      row.id = inst.id;
      row.response = result.response;
      row.metrics["token_p"] = 100.0 * best.precision;
      row.metrics["token_r"] = 100.0 * best.recall;
      row.metrics["token_f1"] = 100.0 * best.f1;
      row.response_tokens = static_cast<double>(tokenize(result.response).size());
      row.llm_calls = static_cast<double>(result.trace.llm_call_count);
      report.rows.push_back(std::move(row));
    } catch (const Error& e) {
      report.rows.push_back(error_row(inst.id, e));
    }
  }
  finalize(report);
  return report;
}

// ---------------------------------------------------------------------------
// Policy training

namespace {

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

struct Split {
  std::vector<TurnItem> train;
  std::vector<TurnItem> held_out;
};

Split split_items(const std::vector<DialogSession>& sessions) {
  auto items = turn_items(sessions);
  Split split;
  if (items.size() < 2) {
    split.train = items;
    split.held_out = items;
    return split;
  }
  for (std::size_t i = 0; i < items.size(); ++i) (i % 5 == 4 ? split.held_out : split.train).push_back(items[i]);
  if (split.held_out.empty()) split.held_out.push_back(items.back());
  return split;
}

CurveRow reward_over(const std::vector<TurnItem>& items, const AgentConfig& base, const TrainedPolicy& policy,
                     KnowledgeMode mode, const GatewaySource& gateways, std::uint64_t seed, std::size_t repeats,
                     std::size_t episode) {
  AgentConfig config = base;
  config.policy = policy;
  std::vector<double> rewards;
  for (std::size_t pass = 0; pass < repeats; ++pass) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto rng = stream_rng(seed, pass, i);
      auto options = options_for(mode, items[i].knowledge);
      options.rng = &rng;
      try {
        auto gateway = gateways(i);
        rewards.push_back(run_turn(config, *gateway, items[i].query, items[i].history, options).trace.response_kf1);
      } catch (const Error&) {
        rewards.push_back(0.0);
      }
    }
  }
  CurveRow row;
  row.episode = episode;
  if (rewards.empty()) return row;
  row.mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  row.min = *lo;
  row.max = *hi;
  return row;
}

}  // namespace

CurveRow policy_reward(const std::vector<DialogSession>& sessions, const AgentConfig& config,
                       const TrainedPolicy& policy, KnowledgeMode knowledge_mode, const GatewaySource& gateways,
                       std::uint64_t seed, std::size_t repeats) {
  check_mode(config, knowledge_mode);
  return reward_over(split_items(sessions).held_out, config, policy, knowledge_mode, gateways, seed, repeats, 0);
}

TrainResult train_policy(const std::vector<DialogSession>& sessions, const AgentConfig& config,
                         const TrainOptions& options, const GatewaySource& gateways) {
  if (options.episodes == 0) throw Error(ErrorKind::InvalidInput, "training needs at least one episode");
  if (options.eval_every == 0 || options.batch_size == 0) {
    throw Error(ErrorKind::InvalidInput, "eval_every and batch size must be positive");
  }
  check_mode(config, options.knowledge_mode);
  const auto split = split_items(sessions);
  if (split.train.empty()) throw Error(ErrorKind::InvalidInput, "no gold-aligned turns to train on");

  TrainResult result;
  result.policy = options.initial;
  result.policy.seed = options.seed;
  const std::uint64_t eval_seed = options.seed ^ 0x9E3779B97F4A7C15ULL;
  auto evaluate_now = [&](std::size_t episode) {
    result.curve.push_back(reward_over(split.held_out, config, TrainedPolicy{result.policy, false},
                                       options.knowledge_mode, gateways, eval_seed, 1, episode));
  };
  evaluate_now(0);

  AgentConfig train_config = config;
  std::vector<Episode> batch;
  for (std::size_t e = 0; e < options.episodes; ++e) {
    const auto& item = split.train[e % split.train.size()];
    auto rng = stream_rng(options.seed, e);
    train_config.policy = TrainedPolicy{result.policy, true};
    auto turn_options = options_for(options.knowledge_mode, item.knowledge);
    turn_options.rng = &rng;
    try {
      auto gateway = gateways(e);
      const auto turn = run_turn(train_config, *gateway, item.query, item.history, turn_options);
      batch.push_back(episode_from_trace(turn.trace));
    } catch (const TurnFailedError&) {
    }
    const bool last = e + 1 == options.episodes;
    if (!batch.empty() && (batch.size() == options.batch_size || last)) {
      result.policy = reinforce_update(result.policy, batch, options.learning_rate, options.gamma, result.baseline);
      batch.clear();
    }
    if ((e + 1) % options.eval_every == 0) evaluate_now(e + 1);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Ablation

std::vector<AblationRow> ablate(const std::vector<DialogSession>& sessions, const AgentConfig& base,
                                const AblationGrid& grid, KnowledgeMode knowledge_mode,
                                const std::function<GatewaySource()>& fresh_gateways) {
  if (grid.policies.empty() || grid.feedback_modes.empty() || grid.utility_settings.empty()) {
    throw Error(ErrorKind::InvalidInput, "ablation grid is empty");
  }
  std::vector<AblationRow> rows;
  for (const auto& policy : grid.policies) {
    for (const auto feedback : grid.feedback_modes) {
      for (const bool utility : grid.utility_settings) {
        AblationRow row;
        row.policy = describe(policy);
        row.feedback = feedback;
        row.utility = utility;
        AgentConfig config = base;
        config.policy = policy;
        config.feedback = feedback;
        config.use_utility = utility;
        try {
          row.report = evaluate(sessions, config, knowledge_mode, fresh_gateways());
        } catch (const Error& e) {
          row.error = std::string(to_string(e.kind())) + ": " + e.what();
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string fixed(double v, int digits = 2) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << v;
  return out.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "id";
  for (const auto& m : report.metric_names) out << ',' << m;
  out << ",response_tokens,llm_calls,error\n";
  for (const auto& row : report.rows) {
    out << csv_field(row.id);
    for (const auto& m : report.metric_names) {
      out << ',';
      if (!row.error) out << fixed(row.metrics.at(m), 4);
    }
    out << ',' << (row.error ? "" : fixed(row.response_tokens, 0)) << ',' << fixed(row.llm_calls, 0) << ','
        << csv_field(row.error.value_or("")) << '\n';
  }
  out << "mean";
  for (const auto& m : report.metric_names) out << ',' << fixed(report.means.at(m), 4);
  out << ',' << fixed(report.avg_response_tokens, 4) << ',' << fixed(report.llm_calls_per_turn, 4) << ','
      << report.error_count << " errors\n";
}

void write_report_table(const EvalReport& report, std::ostream& out) {
  for (const auto& [k, v] : report.config) out << k << '=' << v << ' ';
  out << '\n';
  for (const auto& m : report.metric_names) out << std::setw(10) << m;
  out << std::setw(12) << "avg_len" << std::setw(12) << "llm_calls" << std::setw(8) << "items" << std::setw(8)
      << "errors" << '\n';
  for (const auto& m : report.metric_names) out << std::setw(10) << fixed(report.means.at(m));
  out << std::setw(12) << fixed(report.avg_response_tokens) << std::setw(12) << fixed(report.llm_calls_per_turn)
      << std::setw(8) << report.rows.size() << std::setw(8) << report.error_count << '\n';
  out << "(avg_len counts tokens under the retrieval tokenizer)\n";
}

void write_curve_csv(const std::vector<CurveRow>& curve, std::ostream& out) {
  out << "episode,mean,min,max\n";
  for (const auto& r : curve) {
    out << r.episode << ',' << fixed(r.mean, 6) << ',' << fixed(r.min, 6) << ',' << fixed(r.max, 6) << '\n';
  }
}

void write_ablation_csv(const std::vector<AblationRow>& rows, std::ostream& out) {
  out << "policy,feedback,utility,kf1,llm_calls,error\n";
  for (const auto& r : rows) {
    out << r.policy << ',' << to_string(r.feedback) << ',' << (r.utility ? "on" : "off") << ',';
    if (r.report) out << fixed(r.report->means.at("kf1"), 4) << ',' << fixed(r.report->llm_calls_per_turn, 4);
    else out << ',';
    out << ',' << csv_field(r.error.value_or("")) << '\n';
  }
}

void write_ablation_table(const std::vector<AblationRow>& rows, std::ostream& out) {
  out << std::left << std::setw(16) << "policy" << std::setw(16) << "feedback" << std::setw(9) << "utility"
      << std::right << std::setw(10) << "kf1" << std::setw(12) << "llm_calls" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(16) << r.policy << std::setw(16) << to_string(r.feedback) << std::setw(9)
        << (r.utility ? "on" : "off") << std::right;
    if (r.report) {
      out << std::setw(10) << fixed(r.report->means.at("kf1")) << std::setw(12)
          << fixed(r.report->llm_calls_per_turn);
    } else {
      out << "  failed: " << r.error.value_or("");
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// REPL

int repl(const AgentConfig& config, Gateway& gateway, std::istream& in, std::ostream& out,
         const ReplOptions& options) {
  std::vector<DialogTurn> history;
  std::vector<std::string> golden;
  std::string line;
  out << "> " << std::flush;
  while (std::getline(in, line)) {
    const auto text = trim(line);
    if (text.empty()) {
      out << "> " << std::flush;
      continue;
    }
    if (text == "/quit") return 0;
    if (text.rfind("/golden", 0) == 0) {
      const auto knowledge = trim(std::string_view(text).substr(7));
      if (knowledge.empty()) {
        out << "usage: /golden <knowledge text>\n";
      } else {
        golden.push_back(knowledge);
        out << "(knowledge added for the next turn)\n";
      }
      out << "> " << std::flush;
      continue;
    }

    TurnOptions turn_options;
    if (!golden.empty()) turn_options.preset_evidence = knowledge_chains(golden);
    std::mt19937_64 rng(0);
    turn_options.rng = &rng;
    try {
      const auto result = run_turn(config, gateway, text, history, turn_options);
      if (options.show_trace) {
        for (const auto& step : result.trace.steps) {
          out << "[trace] " << to_string(step.action);
          if (step.self_ask_reply) out << " self-ask reply: " << *step.self_ask_reply;
          if (step.evidence_count) out << " chains=" << *step.evidence_count;
          if (step.feedback) out << " feedback: " << *step.feedback;
          if (step.report) out << " kf1 = " << fixed(step.report->kf1, 3) << (step.report->pass ? " pass" : " fail");
          out << '\n';
        }
        for (std::size_t i = 0; i < result.trace.final_state.evidence.size(); ++i) {
          const auto& chain = result.trace.final_state.evidence[i];
          out << "[evidence " << i + 1 << "] " << join(chain.hops, " -> ") << " (score " << fixed(chain.score, 3)
              << ")\n";
        }
        out << "[trace] KF1 = " << fixed(result.trace.response_kf1, 3) << ", llm calls = "
            << result.trace.llm_call_count << '\n';
      }
      out << "Assistant: " << result.response << '\n';
      history.push_back(DialogTurn{Speaker::User, text});
      history.push_back(DialogTurn{Speaker::Assistant, result.response});
      golden.clear();
    } catch (const Error& e) {
      out << "error: " << e.what() << '\n';
    }
    out << "> " << std::flush;
  }
  return 0;
}

}  // namespace llmaug
