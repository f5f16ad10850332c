#include "llmaug/working_memory.hpp"

#include <algorithm>
#include <cctype>
#include <utility>

#include "llmaug/error.hpp"

namespace llmaug {

namespace {

bool is_blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

}  // namespace

DialogTurn make_turn(Speaker speaker, std::string text) {
  if (is_blank(text)) throw Error(ErrorKind::InvalidInput, "dialog turn text is empty");
  return DialogTurn{speaker, std::move(text)};
}

const char* to_string(Speaker speaker) {
  return speaker == Speaker::User ? "User" : "Assistant";
}

DialogState new_state(std::string query, std::vector<DialogTurn> history) {
  if (is_blank(query)) throw Error(ErrorKind::InvalidInput, "query is empty");
  DialogState state;
  state.query = std::move(query);
  state.history = std::move(history);
  return state;
}

DialogState with_evidence(DialogState state, std::vector<EvidenceChain> chains) {
  state.evidence = std::move(chains);
  state.evidence_acquired = true;
  return state;
}

DialogState with_feedback(DialogState state, std::string feedback) {
  state.feedback = std::move(feedback);
  return state;
}

DialogState record_candidate(DialogState state, std::string text, UtilityReport report,
                             std::size_t max_iterations) {
  if (state.iteration >= max_iterations) {
    throw Error(ErrorKind::BudgetExceeded,
                "iteration budget of " + std::to_string(max_iterations) + " exhausted");
  }
  if (report.pass) {
    state.feedback.reset();
  } else {
    state.feedback = report.feedback;
  }
  state.candidates.push_back(CandidateResponse{std::move(text), std::move(report), state.iteration});
  ++state.iteration;
  return state;
}

const CandidateResponse& best_candidate(const DialogState& state) {
  if (state.candidates.empty()) throw Error(ErrorKind::NoCandidate, "no candidate responses");
  const CandidateResponse* best = &state.candidates.front();
  for (const auto& c : state.candidates) {
    if (c.utility.kf1 > best->utility.kf1) best = &c;
  }
  return *best;
}

std::string render_chain_text(const EvidenceChain& chain) {
  std::string out;
  for (std::size_t i = 0; i < chain.texts.size(); ++i) {
    if (i > 0) out += '\n';
    out += chain.texts[i];
  }
  return out;
}

std::string render_memory_text(const DialogState& state, std::size_t max_chains) {
  std::string out;
  const std::size_t n = std::min(max_chains, state.evidence.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += "\n\n";
    out += render_chain_text(state.evidence[i]);
  }
  return out;
}

std::vector<std::string> evidence_texts(const DialogState& state) {
  std::vector<std::string> out;
  for (const auto& chain : state.evidence) {
    out.insert(out.end(), chain.texts.begin(), chain.texts.end());
  }
  return out;
}

}  // namespace llmaug
