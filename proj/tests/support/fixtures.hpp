#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "llmaug/harness.hpp"

namespace fixtures {

inline std::filesystem::path dir() { return LLMAUG_FIXTURE_DIR; }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::shared_ptr<const llmaug::Corpus> load_corpus(const std::string& name) {
  return std::make_shared<llmaug::Corpus>(llmaug::ingest_jsonl(dir() / name).corpus);
}

// Agent over the customer-service fixture corpus with the echo mock.
inline llmaug::AgentConfig service_agent() {
  llmaug::AgentConfig config;
  config.task = llmaug::Task::CustomerService;
  config.corpus = load_corpus("service_corpus.jsonl");
  config.index = std::make_shared<llmaug::InvertedIndex>(*config.corpus);
  config.backend = llmaug::echo_evidence_mock();
  return config;
}

inline std::vector<llmaug::DialogSession> service_sessions(const llmaug::Corpus* corpus) {
  return llmaug::load_dialog_dataset(dir() / "service_dialogs.jsonl", corpus).items;
}

inline std::vector<std::vector<std::string>> two_stage_scripts() {
  return nlohmann::json::parse(read_file(dir() / "two_stage_scripts.json"))
      .get<std::vector<std::vector<std::string>>>();
}

// The restaurant exchange used for the prompt goldens.
inline llmaug::DialogState canned_state(bool with_evidence) {
  using llmaug::Speaker;
  std::vector<llmaug::DialogTurn> history = {
      {Speaker::User, "Hello, I am looking for a moderately priced restaurant on the north side of town."},
      {Speaker::Assistant, "I recommend golden wok. It is in the north part of town with a moderate price range."},
      {Speaker::User, "Yes, I am looking for a moderately priced restaurant in the north part of town."},
      {Speaker::Assistant, "I recommend golden wok. It is in the north part of town with a moderate price range."},
      {Speaker::User, "I don't want Golden Wok, is there anything else?,"},
      {Speaker::Assistant,
       "Yes, your other option is The Nirala. It serves Indian food and is also located in the north part of "
       "town."},
  };
  auto state = llmaug::new_state("Is their beer a good value for the money?", history);
  if (!with_evidence) return state;
  const std::vector<std::string> snippets = {
      "Review: They also have a modest drinks menu with some affordable prices, but I was more interested in the "
      "beautiful view from my window seat, which allowed me to watch the sun setting as I dined.",
      "Q: Is alcohol served at this restaurant?\nA: Yes, alcohol is served at this restaurant.",
      "Review: I found them to be overpriced and mediocre.",
      "Review: The drinks ae priced well.",
      "Review: Something that I disliked, however was the prices for their drinks.",
  };
  std::vector<llmaug::EvidenceChain> chains;
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    chains.push_back({{"review-" + std::to_string(i)}, 1.0 - 0.1 * static_cast<double>(i), {snippets[i]}});
  }
  return llmaug::with_evidence(std::move(state), std::move(chains));
}

}  // namespace fixtures
