#include "llmaug/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "llmaug/harness.hpp"
#include "llmaug/text.hpp"

namespace llmaug {

namespace {

using json = nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
      return kExitUsage;
    case ErrorKind::BackendUnavailable:
    case ErrorKind::RateLimited:
    case ErrorKind::MockExhausted:
    case ErrorKind::Backend:
      return kExitBackend;
    default:
      return kExitData;
  }
}

int exit_code_for(const Error& e) {
  if (const auto* tf = dynamic_cast<const TurnFailedError*>(&e)) return exit_code_for(tf->cause());
  return exit_code_for(e.kind());
}

// Flags shared by every subcommand. Unset optionals leave the config file
// (or the default) in force.
struct GlobalFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::string> model;
  std::optional<std::string> endpoint;
  std::optional<std::string> api_key_env;
  std::optional<double> timeout;
  std::optional<int> max_retries;
  std::optional<int> max_concurrent;
  std::string script_path;
  std::string out_path;
};

struct AgentFlags {
  std::string corpus_path;
  std::optional<std::string> task;
  std::optional<std::string> policy;
  std::optional<std::string> feedback;
  std::optional<std::string> utility;
  std::optional<double> threshold;
  std::optional<std::size_t> max_iterations;
  std::optional<std::size_t> token_budget;
  std::optional<std::string> knowledge;
};

struct Settings {
  AgentConfig agent;
  KnowledgeMode knowledge = KnowledgeMode::Retrieved;
  std::uint64_t seed = 0;
  // Per-item scripts when the script file holds an array of arrays.
  std::optional<std::vector<std::vector<std::string>>> item_scripts;
};

template <typename T>
void read_if(const json& obj, const char* key, T& target) {
  if (auto it = obj.find(key); it != obj.end()) target = it->get<T>();
}

template <typename T>
void read_if(const json& obj, const char* key, std::optional<T>& target) {
  if (auto it = obj.find(key); it != obj.end()) target = it->get<T>();
}

json read_json_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Load, std::string("cannot open ") + what + " " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
}

PolicyChoice parse_policy(const std::string& spec) {
  for (const std::string prefix : {"trained:", "trained-sample:"}) {
    if (spec.rfind(prefix, 0) == 0) {
      const auto path = spec.substr(prefix.size());
      std::ifstream in(path);
      if (!in) throw Error(ErrorKind::Load, "cannot open policy checkpoint " + path);
      return TrainedPolicy{load_policy(in), prefix == "trained-sample:"};
    }
  }
  return parse_rule_policy(spec);
}

bool parse_on_off(const std::string& value) {
  if (value == "on" || value == "true") return true;
  if (value == "off" || value == "false") return false;
  throw Error(ErrorKind::InvalidConfig, "expected on or off, got '" + value + "'");
}

// Config file < flags.
Settings resolve(const GlobalFlags& g, const AgentFlags& a, std::ostream& err) {
  json file = json::object();
  if (!g.config_path.empty()) file = read_json_file(g.config_path, "config");
  if (!file.is_object()) throw Error(ErrorKind::InvalidConfig, "config file must hold a JSON object");

  std::string task = "customer-service", policy = "always-use", feedback = "rule", knowledge = "retrieved";
  std::string utility = "on", backend = "echo";
  Settings s;
  BackendConfig& b = s.agent.backend;
  try {
    read_if(file, "task", task);
    read_if(file, "policy", policy);
    read_if(file, "feedback", feedback);
    read_if(file, "knowledge", knowledge);
    if (auto it = file.find("utility"); it != file.end()) utility = it->get<bool>() ? "on" : "off";
    read_if(file, "kf1_threshold", s.agent.kf1_threshold);
    read_if(file, "max_iterations", s.agent.max_iterations);
    read_if(file, "token_budget", s.agent.token_budget);
    read_if(file, "seed", s.seed);
    if (auto it = file.find("consolidation"); it != file.end()) {
      read_if(*it, "k_retrieve", s.agent.consolidation.k_retrieve);
      read_if(*it, "max_len", s.agent.consolidation.max_len);
      read_if(*it, "k_chains", s.agent.consolidation.k_chains);
      read_if(*it, "query_count", s.agent.consolidation.query_count);
    }
    if (auto it = file.find("backend"); it != file.end()) {
      read_if(*it, "kind", backend);
      read_if(*it, "endpoint", b.endpoint);
      read_if(*it, "model", b.model);
      read_if(*it, "api_key_env", b.api_key_env);
      read_if(*it, "timeout", b.timeout_seconds);
      read_if(*it, "max_retries", b.max_retries);
      read_if(*it, "max_concurrent", b.max_concurrent);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, "config " + g.config_path + ": " + e.what());
  }

  task = a.task.value_or(task);
  policy = a.policy.value_or(policy);
  feedback = a.feedback.value_or(feedback);
  knowledge = a.knowledge.value_or(knowledge);
  utility = a.utility.value_or(utility);
  backend = g.backend.value_or(backend);
  if (a.threshold) s.agent.kf1_threshold = *a.threshold;
  if (a.max_iterations) s.agent.max_iterations = *a.max_iterations;
  if (a.token_budget) s.agent.token_budget = *a.token_budget;
  if (g.seed) s.seed = *g.seed;
  if (g.model) b.model = *g.model;
  if (g.endpoint) b.endpoint = *g.endpoint;
  if (g.api_key_env) b.api_key_env = *g.api_key_env;
  if (g.timeout) b.timeout_seconds = *g.timeout;
  if (g.max_retries) b.max_retries = *g.max_retries;
  if (g.max_concurrent) b.max_concurrent = *g.max_concurrent;

  try {
    s.agent.task = parse_task(task);
    s.agent.policy = parse_policy(policy);
    s.agent.feedback = parse_feedback_mode(feedback);
    s.knowledge = parse_knowledge_mode(knowledge);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidInput) throw Error(ErrorKind::InvalidConfig, e.what());
    throw;
  }
  s.agent.use_utility = parse_on_off(utility);
  b.kind = parse_backend_kind(backend);

  if (b.kind == BackendKind::ScriptedMock) {
    if (g.script_path.empty()) throw Error(ErrorKind::InvalidConfig, "scripted backend needs --script");
    const json script = read_json_file(g.script_path, "script");
    if (!script.is_array() || script.empty()) {
      throw Error(ErrorKind::Parse, g.script_path + ": expected a non-empty JSON array");
    }
    try {
      if (script.front().is_array()) {
        s.item_scripts = script.get<std::vector<std::vector<std::string>>>();
      } else {
        b.responses = script.get<std::vector<std::string>>();
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, g.script_path + ": " + e.what());
    }
  }

  if (!a.corpus_path.empty()) {
    auto ingested = ingest_jsonl(std::filesystem::path(a.corpus_path));
    auto corpus = std::make_shared<Corpus>(std::move(ingested.corpus));
    for (const auto& w : corpus->prune_dangling_links()) ingested.warnings.push_back(w);
    for (const auto& w : ingested.warnings) err << "warning: " << w << '\n';
    s.agent.index = std::make_shared<InvertedIndex>(*corpus);
    s.agent.corpus = std::move(corpus);
  }
  s.agent.validate();
  return s;
}

GatewaySource make_gateways(const Settings& s) {
  if (s.item_scripts) return per_item_scripts(*s.item_scripts);
  return shared_gateway(s.agent.backend);
}

void add_agent_flags(CLI::App* cmd, AgentFlags& a, bool corpus_required) {
  auto* corpus = cmd->add_option("--corpus", a.corpus_path, "Corpus JSONL");
  if (corpus_required) corpus->required();
  cmd->add_option("--task", a.task, "news-chat | customer-service | wiki-qa");
  cmd->add_option("--policy", a.policy, "no-knowledge | self-ask | always-use | trained:FILE | trained-sample:FILE");
  cmd->add_option("--feedback", a.feedback, "none | rule | self-criticism");
  cmd->add_option("--utility", a.utility, "on | off");
  cmd->add_option("--threshold", a.threshold, "KF1 pass threshold");
  cmd->add_option("--max-iterations", a.max_iterations, "Candidate budget per turn");
  cmd->add_option("--token-budget", a.token_budget, "Prompt token budget");
  cmd->add_option("--knowledge", a.knowledge, "retrieved | golden | none");
}

std::unique_ptr<std::ostream> open_out(const std::string& path) {
  if (path.empty()) return nullptr;
  auto file = std::make_unique<std::ofstream>(path);
  if (!*file) throw Error(ErrorKind::Load, "cannot write " + path);
  return file;
}

int report_status(const EvalReport& report, std::ostream& err) {
  if (report.error_count == 0) return kExitOk;
  err << report.error_count << " of " << report.rows.size() << " items failed\n";
  for (const auto& row : report.rows) {
    if (row.error) err << "  " << row.id << ": " << *row.error << '\n';
  }
  return report.error_count == report.rows.size() ? kExitBackend : kExitOk;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) out.push_back(trim(item));
  }
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Knowledge-grounded LLM augmentation toolkit", "llmaug"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--backend", g.backend, "http | scripted | echo");
  app.add_option("--model", g.model, "Model name for the http backend");
  app.add_option("--endpoint", g.endpoint, "Chat-completions URL for the http backend");
  app.add_option("--api-key-env", g.api_key_env, "Environment variable holding the API key");
  app.add_option("--timeout", g.timeout, "Request timeout in seconds");
  app.add_option("--max-retries", g.max_retries, "Retries after the first attempt");
  app.add_option("--max-concurrent", g.max_concurrent, "Concurrent request cap");
  app.add_option("--script", g.script_path, "JSON responses for the scripted backend");
  app.add_option("--out", g.out_path, "Output file (CSV, JSONL or checkpoint)");

  AgentFlags a;

  // ingest
  std::string ingest_input;
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and write it as normalized JSONL");
  ingest->add_option("input", ingest_input, "Corpus JSONL")->required();

  // index
  std::string index_query;
  std::size_t index_k = 5;
  auto* index = app.add_subcommand("index", "Build the BM25 index and optionally query it");
  index->add_option("--corpus", a.corpus_path, "Corpus JSONL")->required();
  index->add_option("--query", index_query, "Query to run");
  index->add_option("--k", index_k, "Results to show")->check(CLI::PositiveNumber);

  // eval / eval-qa
  std::string data_path, trace_path;
  auto* eval = app.add_subcommand("eval", "Evaluate on a dialog dataset");
  add_agent_flags(eval, a, false);
  eval->add_option("--data", data_path, "Dialog JSONL")->required();
  eval->add_option("--trace", trace_path, "Write per-turn traces as JSONL");

  auto* eval_qa = app.add_subcommand("eval-qa", "Evaluate on a QA dataset");
  add_agent_flags(eval_qa, a, false);
  eval_qa->add_option("--data", data_path, "QA JSONL")->required();
  eval_qa->add_option("--trace", trace_path, "Write per-item traces as JSONL");

  // train
  TrainOptions train_options;
  std::size_t runs = 1;
  std::string checkpoint_path;
  auto* train = app.add_subcommand("train", "Train the softmax policy with REINFORCE");
  add_agent_flags(train, a, false);
  train->add_option("--data", data_path, "Dialog JSONL")->required();
  train->add_option("--episodes", train_options.episodes, "Training episodes")->check(CLI::PositiveNumber);
  train->add_option("--eval-every", train_options.eval_every, "Episodes between curve points")
      ->check(CLI::PositiveNumber);
  train->add_option("--batch", train_options.batch_size, "Episodes per update")->check(CLI::PositiveNumber);
  train->add_option("--lr", train_options.learning_rate, "Learning rate");
  train->add_option("--gamma", train_options.gamma, "Discount");
  train->add_option("--runs", runs, "Independent runs (seeds seed..seed+runs-1)")->check(CLI::PositiveNumber);
  train->add_option("--checkpoint", checkpoint_path, "Write the first run's policy here");

  // ablate
  std::string grid_policies = "no-knowledge,self-ask,always-use", grid_feedback = "none,rule",
              grid_utility = "on";
  auto* abl = app.add_subcommand("ablate", "Evaluate a grid of policies, feedback modes and utility settings");
  add_agent_flags(abl, a, false);
  abl->add_option("--data", data_path, "Dialog JSONL")->required();
  abl->add_option("--policies", grid_policies, "Comma-separated policies");
  abl->add_option("--feedback-modes", grid_feedback, "Comma-separated feedback modes");
  abl->add_option("--utility-settings", grid_utility, "Comma-separated on/off");

  // repl
  ReplOptions repl_options;
  auto* rep = app.add_subcommand("repl", "Interactive chat");
  add_agent_flags(rep, a, false);
  rep->add_flag("--show-trace", repl_options.show_trace, "Print actions, evidence chains, KF1 and feedback");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    auto out_file = open_out(g.out_path);

    if (ingest->parsed()) {
      auto result = ingest_jsonl(std::filesystem::path(ingest_input));
      for (const auto& w : result.corpus.prune_dangling_links()) result.warnings.push_back(w);
      for (const auto& w : result.warnings) err << "warning: " << w << '\n';
      write_jsonl(result.corpus, out_file ? *out_file : out);
      const auto stats = result.corpus.stats();
      err << "documents: " << stats.document_count << ", mean body tokens: " << std::fixed << std::setprecision(2)
          << stats.mean_body_tokens << '\n';
      return kExitOk;
    }

    const Settings s = resolve(g, a, err);

    if (index->parsed()) {
      const auto& idx = *s.agent.index;
      std::ostream& dest = out_file ? *out_file : out;
      dest << "documents: " << idx.doc_count() << "\nterms: " << idx.all_postings().size() << "\navgdl: "
           << std::fixed << std::setprecision(4) << idx.avgdl() << '\n';
      if (!index_query.empty()) {
        for (const auto& hit : search(idx, index_query, index_k)) dest << hit.doc_id << '\t' << hit.score << '\n';
      }
      return kExitOk;
    }

    if (rep->parsed()) {
      Gateway gateway(s.agent.backend);
      return repl(s.agent, gateway, in, out, repl_options);
    }

    if (eval->parsed() || eval_qa->parsed()) {
      std::vector<std::string> traces;
      EvalReport report;
      if (eval->parsed()) {
        auto data = load_dialog_dataset(std::filesystem::path(data_path), s.agent.corpus.get());
        for (const auto& w : data.warnings) err << "warning: " << w << '\n';
        report = evaluate(data.items, s.agent, s.knowledge, make_gateways(s), &traces);
      } else {
        auto data = load_qa_dataset(std::filesystem::path(data_path));
        report = evaluate_qa(data.items, s.agent, s.knowledge, make_gateways(s), &traces);
      }
      write_report_table(report, out);
      if (out_file) write_report_csv(report, *out_file);
      if (!trace_path.empty()) {
        auto trace_file = open_out(trace_path);
        for (const auto& line : traces) *trace_file << line << '\n';
      }
      return report_status(report, err);
    }

    if (train->parsed()) {
      auto data = load_dialog_dataset(std::filesystem::path(data_path), s.agent.corpus.get());
      for (const auto& w : data.warnings) err << "warning: " << w << '\n';
      train_options.knowledge_mode = s.knowledge;
      std::vector<TrainResult> results;
      for (std::size_t r = 0; r < runs; ++r) {
        TrainOptions opts = train_options;
        opts.seed = s.seed + r;
        results.push_back(train_policy(data.items, s.agent, opts, make_gateways(s)));
      }
      std::vector<CurveRow> curve = results.front().curve;
      if (runs > 1) {
        for (std::size_t i = 0; i < curve.size(); ++i) {
          double sum = 0.0, lo = results.front().curve[i].mean, hi = lo;
          for (const auto& res : results) {
            const double m = res.curve[i].mean;
            sum += m;
            lo = std::min(lo, m);
            hi = std::max(hi, m);
          }
          curve[i] = CurveRow{curve[i].episode, sum / static_cast<double>(runs), lo, hi};
        }
      }
      write_curve_csv(curve, out_file ? *out_file : out);
      const auto random_reward = policy_reward(data.items, s.agent, TrainedPolicy{SoftmaxPolicy{}, true},
                                               s.knowledge, make_gateways(s), s.seed, 5);
      const auto trained_reward = policy_reward(data.items, s.agent, TrainedPolicy{results.front().policy, false},
                                                s.knowledge, make_gateways(s), s.seed);
      err << std::fixed << std::setprecision(4) << "held-out reward: trained " << trained_reward.mean
          << ", random " << random_reward.mean << '\n';
      if (!checkpoint_path.empty()) {
        auto ckpt = open_out(checkpoint_path);
        save_policy(results.front().policy, *ckpt);
      }
      return kExitOk;
    }

    if (abl->parsed()) {
      auto data = load_dialog_dataset(std::filesystem::path(data_path), s.agent.corpus.get());
      for (const auto& w : data.warnings) err << "warning: " << w << '\n';
      AblationGrid grid;
      try {
        for (const auto& p : split_list(grid_policies)) grid.policies.push_back(parse_policy(p));
        for (const auto& f : split_list(grid_feedback)) grid.feedback_modes.push_back(parse_feedback_mode(f));
        for (const auto& u : split_list(grid_utility)) grid.utility_settings.push_back(parse_on_off(u));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::InvalidInput) throw Error(ErrorKind::InvalidConfig, e.what());
        throw;
      }
      if (grid.policies.empty() || grid.feedback_modes.empty() || grid.utility_settings.empty()) {
        throw Error(ErrorKind::InvalidConfig, "ablation grid is empty");
      }
      const auto rows = ablate(data.items, s.agent, grid, s.knowledge, [&s] { return make_gateways(s); });
      write_ablation_table(rows, out);
      if (out_file) write_ablation_csv(rows, *out_file);
      const bool all_failed =
          std::all_of(rows.begin(), rows.end(), [](const AblationRow& r) { return r.error.has_value(); });
      return all_failed ? kExitBackend : kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace llmaug
