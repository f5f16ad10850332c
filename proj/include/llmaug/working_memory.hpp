#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "llmaug/types.hpp"

namespace llmaug {

inline constexpr std::size_t kDefaultMaxIterations = 2;

struct CandidateResponse {
  std::string text;
  UtilityReport utility;
  std::size_t produced_at_iteration = 0;

  bool operator==(const CandidateResponse&) const = default;
};

/// The tracked dialog state: query, evidence, candidates (each carrying its
/// utility), latest feedback and the history preceding the query.
///
/// Operations below are pure; they take a state by value and return the
/// successor state.
struct DialogState {
  std::string query;
  std::vector<EvidenceChain> evidence;
  std::vector<CandidateResponse> candidates;
  std::optional<std::string> feedback;
  std::vector<DialogTurn> history;
  std::size_t iteration = 0;
  // Set once the consolidator ran (or evidence was injected), even when it
  // found nothing; the policy uses it to avoid re-acquiring.
  bool evidence_acquired = false;

  bool operator==(const DialogState&) const = default;
};

DialogState new_state(std::string query, std::vector<DialogTurn> history);

/// Replaces the evidence and marks it acquired.
DialogState with_evidence(DialogState state, std::vector<EvidenceChain> chains);

/// Overrides the latest feedback, e.g. with self-criticism output.
DialogState with_feedback(DialogState state, std::string feedback);

/// Appends a candidate produced at the current iteration and advances the
/// iteration. Throws BudgetExceeded once `max_iterations` candidates exist.
DialogState record_candidate(DialogState state, std::string text, UtilityReport report,
                             std::size_t max_iterations = kDefaultMaxIterations);

/// Highest kf1; ties go to the earliest candidate.
const CandidateResponse& best_candidate(const DialogState& state);

/// Chains in rank order, hops joined by newline, a blank line between
/// chains. At most `max_chains` chains are emitted.
std::string render_memory_text(const DialogState& state, std::size_t max_chains);

/// Serializes one chain the way render_memory_text does.
std::string render_chain_text(const EvidenceChain& chain);

/// All hop texts of all chains, in order. This is what grounding is scored
/// against.
std::vector<std::string> evidence_texts(const DialogState& state);

}  // namespace llmaug
