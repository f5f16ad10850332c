#include <doctest.h>

#include <sstream>

#include "fixtures.hpp"
#include "llmaug/harness.hpp"

using namespace llmaug;

namespace {

ErrorKind load_error(const std::string& text) {
  std::istringstream in(text);
  try {
    (void)load_dialog_dataset(in);
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InvalidInput;
}

std::vector<std::string> gold_replay() {
  return nlohmann::json::parse(fixtures::read_file(fixtures::dir() / "gold_replay_script.json"))
      .get<std::vector<std::string>>();
}

struct Fixture {
  AgentConfig config = fixtures::service_agent();
  std::vector<DialogSession> sessions = fixtures::service_sessions(config.corpus.get());
};

double mean_calls(const EvalReport& r) { return r.llm_calls_per_turn; }

}  // namespace

TEST_CASE("dialog loader") {
  std::istringstream two(
      R"({"id": "a", "turns": [{"speaker": "user", "text": "hi"}, {"speaker": "assistant", "text": "hello"}], "gold": [{"turn": 1, "response": "hello", "knowledge": ["k"]}]})"
      "\n\n"
      R"({"id": "b", "turns": [{"speaker": "user", "text": "x"}], "gold": []})"
      "\n");
  const auto loaded = load_dialog_dataset(two);
  REQUIRE(loaded.items.size() == 2);
  CHECK(loaded.items[0].gold[0].knowledge == std::vector<std::string>{"k"});
  CHECK(loaded.warnings.empty());

  CHECK(load_error(R"({"id": "a", "turns": [{"speaker": "assistant", "text": "hi"}], "gold": []})") ==
        ErrorKind::Load);
  CHECK(load_error(R"({"id": "a", "turns": [{"speaker": "user", "text": "hi"}], "gold": [{"turn": 0, "response": "r", "knowledge": []}]})") ==
        ErrorKind::Load);
  CHECK(load_error(R"({"id": "a", "turns": [{"speaker": "user"}], "gold": []})") == ErrorKind::Load);
  CHECK(load_error("{not json") == ErrorKind::Load);

  std::istringstream bad(R"({"id": "a", "turns": [{"speaker": "user", "text": "hi"}], "gold": []})"
                         "\n"
                         R"({"id": "b", "turns": [], "gold": 3})");
  try {
    (void)load_dialog_dataset(bad, nullptr, "d.jsonl");
    FAIL("expected a load error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("d.jsonl:2") != std::string::npos);
  }
}

TEST_CASE("unknown knowledge doc falls back to the raw id") {
  const auto corpus = fixtures::load_corpus("service_corpus.jsonl");
  std::istringstream in(
      R"({"id": "a", "turns": [{"speaker": "user", "text": "hi"}, {"speaker": "assistant", "text": "yo"}], "gold": [{"turn": 1, "response": "yo", "knowledge": [{"doc": "missing-doc"}, {"doc": "acorn"}]}]})");
  const auto loaded = load_dialog_dataset(in, corpus.get());
  REQUIRE(loaded.warnings.size() == 1);
  CHECK(loaded.warnings[0].find("missing-doc") != std::string::npos);
  CHECK(loaded.items[0].gold[0].knowledge[0] == "missing-doc");
  CHECK(loaded.items[0].gold[0].knowledge[1] == corpus->find("acorn")->body);
}

TEST_CASE("qa loader") {
  std::istringstream in(R"({"id": "q", "question": "Who?", "answers": ["Ann", "Anne"]})");
  CHECK(load_qa_dataset(in).items[0].answers.size() == 2);
  std::istringstream empty(R"({"id": "q", "question": "Who?", "answers": []})");
  CHECK_THROWS_AS(load_qa_dataset(empty), Error);
  CHECK(load_qa_dataset(fixtures::dir() / "wiki_qa.jsonl").items.size() == 20);
}

TEST_CASE("golden knowledge with the echo mock grounds perfectly") {
  Fixture f;
  const auto report = evaluate(f.sessions, f.config, KnowledgeMode::Golden, shared_gateway(f.config.backend));
  CHECK(report.rows.size() == 6);
  CHECK(report.error_count == 0);
  CHECK(report.means.at("kf1") == 100.0);
  CHECK(mean_calls(report) == 1.0);
}

TEST_CASE("replaying gold responses scores 100 on reference metrics") {
  Fixture f;
  const auto report = evaluate(f.sessions, f.config, KnowledgeMode::Golden, per_item_scripts({}));
  CHECK(report.error_count == 6);

  std::vector<std::vector<std::string>> scripts;
  for (const auto& r : gold_replay()) scripts.push_back({r});
  f.config.feedback = FeedbackMode::None;
  const auto replay = evaluate(f.sessions, f.config, KnowledgeMode::Golden, per_item_scripts(scripts));
  CHECK(replay.error_count == 0);
  CHECK(replay.means.at("bleu4") == doctest::Approx(100.0));
  CHECK(replay.means.at("rouge1_f") == doctest::Approx(100.0));
  CHECK(replay.means.at("chrf") == doctest::Approx(100.0));
}

TEST_CASE("means recompute from rows") {
  Fixture f;
  f.config.feedback = FeedbackMode::None;
  auto report = evaluate(f.sessions, f.config, KnowledgeMode::Retrieved, shared_gateway(f.config.backend));
  REQUIRE(std::is_sorted(report.rows.begin(), report.rows.end(),
                         [](const auto& a, const auto& b) { return a.id < b.id; }));
  for (const auto& name : report.metric_names) {
    double sum = 0;
    for (const auto& row : report.rows) sum += row.metrics.at(name);
    CHECK(report.means.at(name) == sum / static_cast<double>(report.rows.size()));
  }
  const auto before = report.means;
  recompute_means(report);
  CHECK(report.means == before);
}

TEST_CASE("retrieval beats no knowledge under the echo mock") {
  Fixture f;
  const auto none = evaluate(f.sessions, f.config, KnowledgeMode::None, shared_gateway(f.config.backend));
  const auto retrieved = evaluate(f.sessions, f.config, KnowledgeMode::Retrieved, shared_gateway(f.config.backend));
  CHECK(retrieved.means.at("kf1") > none.means.at("kf1"));
}

TEST_CASE("per-item failures become error rows") {
  Fixture f;
  std::vector<std::vector<std::string>> scripts = {{"only one"}, {}, {"a"}, {"b"}, {"c"}, {"d"}};
  f.config.feedback = FeedbackMode::None;
  const auto report = evaluate(f.sessions, f.config, KnowledgeMode::Golden, per_item_scripts(scripts));
  CHECK(report.error_count == 1);
  CHECK(report.rows.size() == 6);
  std::size_t with_error = 0;
  for (const auto& row : report.rows) with_error += row.error.has_value();
  CHECK(with_error == 1);
}

TEST_CASE("qa evaluation") {
  AgentConfig config;
  config.task = Task::WikiQA;
  config.corpus = fixtures::load_corpus("wiki_corpus.jsonl");
  config.index = std::make_shared<InvertedIndex>(*config.corpus);
  config.backend = echo_evidence_mock();
  config.feedback = FeedbackMode::None;
  const auto qa = load_qa_dataset(fixtures::dir() / "wiki_qa.jsonl").items;

  std::vector<std::vector<std::string>> exact, unknown;
  for (const auto& q : qa) {
    exact.push_back({q.answers[0]});
    unknown.push_back({"Unknown"});
  }
  config.policy = RulePolicyKind::NoKnowledge;
  CHECK(evaluate_qa(qa, config, KnowledgeMode::None, per_item_scripts(exact)).means.at("token_f1") == 100.0);
  CHECK(evaluate_qa(qa, config, KnowledgeMode::None, per_item_scripts(unknown)).means.at("token_f1") == 0.0);

  const auto closed = evaluate_qa(qa, config, KnowledgeMode::None, shared_gateway(config.backend));
  config.policy = RulePolicyKind::AlwaysUse;
  const auto open = evaluate_qa(qa, config, KnowledgeMode::Retrieved, shared_gateway(config.backend));
  CHECK(open.means.at("token_f1") > closed.means.at("token_f1"));
  CHECK_THROWS_AS(evaluate_qa(qa, config, KnowledgeMode::Golden, shared_gateway(config.backend)), Error);
}

TEST_CASE("training with lr 0 keeps the initial weights") {
  Fixture f;
  TrainOptions options;
  options.episodes = 20;
  options.eval_every = 10;
  options.learning_rate = 0.0;
  options.initial.weights = PolicyWeights::Random();
  const auto result = train_policy(f.sessions, f.config, options, shared_gateway(f.config.backend));
  CHECK(result.policy.weights == options.initial.weights);
  CHECK(result.curve.size() == 3);
  CHECK(result.curve[2].episode == 20);
}

TEST_CASE("training is deterministic for a seed") {
  Fixture f;
  f.config.feedback = FeedbackMode::None;
  TrainOptions options;
  options.episodes = 60;
  options.eval_every = 20;
  options.seed = 9;
  const auto a = train_policy(f.sessions, f.config, options, shared_gateway(f.config.backend));
  const auto b = train_policy(f.sessions, f.config, options, shared_gateway(f.config.backend));
  CHECK(a.curve == b.curve);
  CHECK(a.policy.weights == b.policy.weights);
  std::ostringstream ca, cb;
  write_curve_csv(a.curve, ca);
  write_curve_csv(b.curve, cb);
  CHECK(ca.str() == cb.str());
  CHECK(ca.str().rfind("episode,mean,min,max\n", 0) == 0);

  options.episodes = 0;
  CHECK_THROWS_AS(train_policy(f.sessions, f.config, options, shared_gateway(f.config.backend)), Error);
}

TEST_CASE("training learns to acquire when evidence pays") {
  Fixture f;
  f.config.feedback = FeedbackMode::None;
  TrainOptions options;
  options.episodes = 400;
  options.eval_every = 100;
  options.seed = 1;
  const auto result = train_policy(f.sessions, f.config, options, shared_gateway(f.config.backend));
  const auto fresh = new_state("Is there free parking?", {});
  const auto probs = action_probs(result.policy, featurize(fresh, f.config.max_iterations),
                                  valid_actions(fresh, f.config.limits()));
  CHECK(probs(static_cast<int>(Action::AcquireEvidence)) > 0.9);
  const auto trained = policy_reward(f.sessions, f.config, TrainedPolicy{result.policy, false},
                                     KnowledgeMode::Retrieved, shared_gateway(f.config.backend));
  const auto random = policy_reward(f.sessions, f.config, TrainedPolicy{SoftmaxPolicy{}, true},
                                    KnowledgeMode::Retrieved, shared_gateway(f.config.backend), 3, 50);
  CHECK(trained.mean > random.mean);
}

TEST_CASE("ablation") {
  Fixture f;
  auto fresh = [&] { return shared_gateway(f.config.backend); };

  AblationGrid one{{RulePolicyKind::AlwaysUse}, {FeedbackMode::RuleBased}, {true}};
  const auto single = ablate(f.sessions, f.config, one, KnowledgeMode::Retrieved, fresh);
  REQUIRE(single.size() == 1);
  REQUIRE(single[0].report);
  const auto direct = evaluate(f.sessions, f.config, KnowledgeMode::Retrieved, fresh());
  CHECK(single[0].report->means == direct.means);
  CHECK(single[0].report->llm_calls_per_turn == direct.llm_calls_per_turn);

  AblationGrid policies{{RulePolicyKind::NoKnowledge, RulePolicyKind::AlwaysUse}, {FeedbackMode::None}, {true}};
  const auto p = ablate(f.sessions, f.config, policies, KnowledgeMode::Retrieved, fresh);
  CHECK(p[1].report->means.at("kf1") > p[0].report->means.at("kf1"));
  CHECK(p[1].report->llm_calls_per_turn == p[0].report->llm_calls_per_turn);

  AblationGrid feedback{{RulePolicyKind::AlwaysUse}, {FeedbackMode::None, FeedbackMode::RuleBased}, {true}};
  const auto scripts = fixtures::two_stage_scripts();
  const auto fb = ablate(f.sessions, f.config, feedback, KnowledgeMode::Golden,
                         [&] { return per_item_scripts(scripts); });
  CHECK(fb[1].report->means.at("kf1") > fb[0].report->means.at("kf1"));
  CHECK(fb[1].report->llm_calls_per_turn > fb[0].report->llm_calls_per_turn);

  std::ostringstream csv;
  write_ablation_csv(fb, csv);
  CHECK(csv.str().find("always-use,rule,on") != std::string::npos);
  CHECK_THROWS_AS(ablate(f.sessions, f.config, AblationGrid{}, KnowledgeMode::Retrieved, fresh), Error);
}

TEST_CASE("repl") {
  Fixture f;
  {
    Gateway g(f.config.backend);
    std::istringstream in("/quit\n");
    std::ostringstream out;
    CHECK(repl(f.config, g, in, out) == 0);
  }
  {
    Gateway g(scripted_mock({"only reply"}));
    std::istringstream in("\n   \n/quit\n");
    std::ostringstream out;
    CHECK(repl(f.config, g, in, out) == 0);
    CHECK(g.remaining_script() == 1);
  }
  {
    Gateway g(f.config.backend);
    std::istringstream in("Does the Acorn Guest House offer free parking?\n/quit\n");
    std::ostringstream out;
    CHECK(repl(f.config, g, in, out, ReplOptions{true}) == 0);
    CHECK(out.str().find("KF1 = 1.000") != std::string::npos);
    CHECK(out.str().find("Assistant: ") != std::string::npos);
  }
  {
    Gateway g(f.config.backend);
    auto config = f.config;
    config.policy = RulePolicyKind::NoKnowledge;
    std::istringstream in("/golden The lobby closes at 9 pm.\nWhen does the lobby close?\n");
    std::ostringstream out;
    CHECK(repl(config, g, in, out) == 0);
    CHECK(out.str().find("Assistant: The lobby closes at 9 pm.") != std::string::npos);
  }
  {
    Gateway g(scripted_mock({"x"}));
    auto config = f.config;
    config.feedback = FeedbackMode::None;
    std::istringstream in("first\nsecond\n/quit\n");
    std::ostringstream out;
    CHECK(repl(config, g, in, out) == 0);
    CHECK(out.str().find("error: ") != std::string::npos);
  }
}
