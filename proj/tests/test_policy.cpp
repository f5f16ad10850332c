#include <doctest.h>

#include <sstream>

#include "llmaug/error.hpp"
#include "llmaug/llm_gateway.hpp"
#include "llmaug/policy.hpp"
#include "llmaug/prompt_engine.hpp"
#include "llmaug/utility.hpp"
#include "oracles.hpp"

using namespace llmaug;

namespace {

UtilityReport report(double kf1, bool pass) {
  UtilityReport r;
  r.kf1 = kf1;
  r.pass = pass;
  if (!pass) r.feedback = kRuleFeedback;
  return r;
}

ActionMask mask_of(std::initializer_list<Action> actions) {
  ActionMask m{};
  for (auto a : actions) m[static_cast<std::size_t>(a)] = true;
  return m;
}

DialogState fresh() { return new_state("Is the beer cheap?", {}); }

}  // namespace

TEST_CASE("valid actions follow the turn") {
  const TurnLimits limits{2, true, true};
  auto s = fresh();
  CHECK(valid_actions(s, limits) == mask_of({Action::AcquireEvidence, Action::GenerateCandidate}));

  s = with_evidence(s, {EvidenceChain{{"d"}, 1.0, {"beer is cheap"}}});
  CHECK(valid_actions(s, limits) == mask_of({Action::GenerateCandidate}));

  s = record_candidate(s, "wine", report(0.0, false), 2);
  CHECK(valid_actions(s, limits) == mask_of({Action::ReviseWithFeedback, Action::SendResponse}));
  CHECK(valid_actions(s, TurnLimits{2, false, true}) == mask_of({Action::SendResponse}));

  s = record_candidate(s, "beer is cheap", report(1.0, true), 2);
  CHECK(valid_actions(s, limits) == mask_of({Action::SendResponse}));
}

TEST_CASE("revision stops at the iteration budget") {
  auto s = fresh();
  s = record_candidate(s, "x", report(0.0, false), 2);
  s = record_candidate(s, "y", report(0.0, false), 2);
  CHECK(valid_actions(s, TurnLimits{2, true, true}) == mask_of({Action::SendResponse}));
  CHECK(valid_actions(s, TurnLimits{3, true, true}) == mask_of({Action::ReviseWithFeedback, Action::SendResponse}));
}

TEST_CASE("without verification every candidate counts as failed") {
  auto s = record_candidate(fresh(), "x", report(1.0, true), 3);
  CHECK(allowed(valid_actions(s, TurnLimits{3, true, false}), Action::ReviseWithFeedback));
  CHECK_FALSE(allowed(valid_actions(s, TurnLimits{3, true, true}), Action::ReviseWithFeedback));
}

TEST_CASE("featurize") {
  auto s = new_state("one two three four", {});
  auto x = featurize(s, 2);
  CHECK(x(0) == 1.0);
  CHECK(x(1) == 0.0);
  CHECK(x(2) == 0.0);
  CHECK(x(3) == 0.0);
  CHECK(x(4) == 0.0);
  CHECK(x(5) == doctest::Approx(4.0 / 32.0));

  s = with_evidence(s, {EvidenceChain{{"d"}, 1.0, {"t"}}});
  s = record_candidate(s, "a", report(0.4, false), 2);
  x = featurize(s, 2);
  CHECK(x(1) == 1.0);
  CHECK(x(2) == doctest::Approx(0.5));
  CHECK(x(3) == doctest::Approx(0.4));
  CHECK(x(4) == doctest::Approx(0.5));
}

TEST_CASE("masked softmax") {
  SoftmaxPolicy p;
  p.weights.setRandom();
  FeatureVector x;
  x << 1, 0.5, 0.2, 0.1, 0.3, 0.9;
  const auto m = mask_of({Action::GenerateCandidate, Action::SendResponse});
  const auto probs = action_probs(p, x, m);
  CHECK(probs(0) == 0.0);
  CHECK(probs(2) == 0.0);
  CHECK(probs.sum() == doctest::Approx(1.0));
  const double l1 = p.weights.row(1).dot(x);
  const double l3 = p.weights.row(3).dot(x);
  CHECK(probs(1) == doctest::Approx(std::exp(l1) / (std::exp(l1) + std::exp(l3))));
  CHECK_THROWS_AS(action_probs(p, x, ActionMask{}), Error);

  SoftmaxPolicy zero;
  CHECK(greedy_action(zero, x, mask_of({Action::GenerateCandidate, Action::SendResponse})) ==
        Action::GenerateCandidate);

  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) CHECK(allowed(m, sample_action(p, x, m, rng)));
}

TEST_CASE("sampling matches the distribution") {
  SoftmaxPolicy p;
  p.weights(0, 0) = 1.0;
  FeatureVector x = FeatureVector::Zero();
  x(0) = 1.0;
  const auto m = mask_of({Action::AcquireEvidence, Action::GenerateCandidate});
  std::mt19937_64 rng(11);
  int acquire = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) acquire += sample_action(p, x, m, rng) == Action::AcquireEvidence;
  CHECK(static_cast<double>(acquire) / n == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1.0)).epsilon(0.02));
}

TEST_CASE("returns are discounted from the terminal reward") {
  Episode ep;
  ep.steps.resize(3);
  ep.reward = 2.0;
  const auto g = step_returns(ep, 0.5);
  CHECK(g == std::vector<double>{0.5, 1.0, 2.0});
}

TEST_CASE("analytic gradient matches finite differences") {
  std::mt19937_64 rng(42);
  for (int draw = 0; draw < 10; ++draw) {
    SoftmaxPolicy p;
    p.weights = PolicyWeights::Random();
    const auto episodes = oracle::random_episodes(rng, 5);
    const double baseline = 0.3;
    const auto analytic = policy_gradient(p, episodes, 0.9, baseline);
    const auto numeric = oracle::numeric_gradient(p, episodes, 0.9, baseline);
    CHECK((analytic - numeric).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, numeric.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("reinforce update") {
  std::mt19937_64 rng(7);
  const auto episodes = oracle::random_episodes(rng, 4);
  SoftmaxPolicy p;
  p.weights = PolicyWeights::Random();
  RewardBaseline b0{0.0, 0.9};
  const auto same = reinforce_update(p, episodes, 0.0, 1.0, b0);
  CHECK(same.weights == p.weights);

  RewardBaseline b1{0.2, 0.9};
  const auto moved = reinforce_update(p, episodes, 0.1, 1.0, b1);
  const PolicyWeights expected = p.weights + 0.1 * policy_gradient(p, episodes, 1.0, 0.2);
  CHECK((moved.weights - expected).cwiseAbs().maxCoeff() < 1e-12);
  double v = 0.2;
  for (const auto& e : episodes) v = 0.9 * v + 0.1 * e.reward;
  CHECK(b1.value == doctest::Approx(v));

  CHECK_THROWS_AS(reinforce_update(p, {}, 0.1, 1.0, b1), Error);
  CHECK_THROWS_AS(reinforce_update(p, episodes, -0.1, 1.0, b1), Error);
  CHECK_THROWS_AS(reinforce_update(p, episodes, 0.1, 0.0, b1), Error);
}

TEST_CASE("positive advantage raises the chosen action") {
  Episode ep;
  EpisodeStep st;
  st.features = FeatureVector::Zero();
  st.features(0) = 1.0;
  st.mask = mask_of({Action::AcquireEvidence, Action::GenerateCandidate});
  st.action = Action::AcquireEvidence;
  ep.steps = {st};
  ep.reward = 1.0;
  SoftmaxPolicy p;
  RewardBaseline b{0.0, 0.99};
  for (int i = 0; i < 50; ++i) p = reinforce_update(p, {ep}, 0.5, 1.0, b);
  CHECK(action_probs(p, st.features, st.mask)(0) > 0.9);
}

TEST_CASE("checkpoint round trip") {
  SoftmaxPolicy p;
  p.weights = PolicyWeights::Random() * 1e3;
  p.weights(1, 2) = 1.0 / 3.0;
  p.seed = 12345;
  std::stringstream buf;
  save_policy(p, buf);
  const auto q = load_policy(buf);
  CHECK(q.weights == p.weights);
  CHECK(q.seed == 12345);

  auto load = [](const std::string& text) {
    std::istringstream in(text);
    try {
      (void)load_policy(in);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidInput;
  };
  CHECK(load("garbage") == ErrorKind::Load);
  CHECK(load("llmaug-policy 2\n4 6\n") == ErrorKind::Load);
  CHECK(load("llmaug-policy 1\n3 6\nseed 0\n") == ErrorKind::Load);
  CHECK(load("llmaug-policy 1\n4 6\nseed 0\n1 2 3\n") == ErrorKind::Load);
  CHECK(load("llmaug-policy 1\n4 6\nseed 0\n" + std::string(24 * 2, ' ').replace(0, 3, "nan")) == ErrorKind::Load);
}

TEST_CASE("rule policies") {
  const TurnLimits limits{2, true, true};
  const auto s = fresh();
  CHECK(rule_policy_decide(RulePolicyKind::AlwaysUse, s, limits, nullptr).action == Action::AcquireEvidence);
  CHECK(rule_policy_decide(RulePolicyKind::NoKnowledge, s, limits, nullptr).action == Action::GenerateCandidate);
  CHECK_THROWS_AS(rule_policy_decide(RulePolicyKind::SelfAsk, s, limits, nullptr), Error);

  Gateway yes(scripted_mock({"Yes, I can."}));
  const auto d1 = rule_policy_decide(RulePolicyKind::SelfAsk, s, limits, &yes);
  CHECK(d1.action == Action::GenerateCandidate);
  CHECK(d1.self_ask_reply == "Yes, I can.");

  Gateway no(scripted_mock({"No."}));
  CHECK(rule_policy_decide(RulePolicyKind::SelfAsk, s, limits, &no).action == Action::AcquireEvidence);

  Gateway echo(echo_evidence_mock());
  CHECK(rule_policy_decide(RulePolicyKind::SelfAsk, s, limits, &echo).action == Action::AcquireEvidence);

  auto failed = record_candidate(s, "x", report(0.0, false), 2);
  CHECK(rule_policy_decide(RulePolicyKind::AlwaysUse, failed, limits, nullptr).action ==
        Action::ReviseWithFeedback);
  CHECK(rule_policy_decide(RulePolicyKind::NoKnowledge, failed, TurnLimits{2, false, true}, nullptr).action ==
        Action::SendResponse);
  auto passed = record_candidate(s, "x", report(1.0, true), 2);
  CHECK(rule_policy_decide(RulePolicyKind::AlwaysUse, passed, limits, nullptr).action == Action::SendResponse);

  CHECK(parse_rule_policy("self-ask") == RulePolicyKind::SelfAsk);
  CHECK_THROWS_AS(parse_rule_policy("sometimes"), Error);
}
