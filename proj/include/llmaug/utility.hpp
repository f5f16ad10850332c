#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmaug/types.hpp"
#include "llmaug/working_memory.hpp"

namespace llmaug {

class Gateway;

inline constexpr double kDefaultKf1Threshold = 0.3;
inline constexpr const char* kRuleFeedback =
    "The response is inconsistent with the knowledge. Please generate again.";

/// tokenize() minus the articles a/an/the. Used by token_f1 and kf1.
std::vector<std::string> normalize(std::string_view text);

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Bag-of-tokens overlap over normalize(). Both empty scores (1,1,1); one
/// side empty scores (0,0,0).
PrecisionRecallF1 token_f1(std::string_view pred, std::string_view gold);

/// Knowledge F1: token_f1 against the evidence texts joined by spaces.
/// Empty evidence scores 0.
double kf1(std::string_view pred, const std::vector<std::string>& evidence_texts);

/// Sentence BLEU-4 over tokenize(), no smoothing. Orders beyond the
/// prediction length are skipped so short identical strings still score 1.
double bleu4(std::string_view pred, std::string_view ref);

/// Unigram F-measure over tokenize().
double rouge1_f(std::string_view pred, std::string_view ref);

/// Character n-gram F-beta (n = 1..6, beta = 2) with whitespace removed.
/// Precision and recall are averaged over the orders the reference
/// supports, then combined.
double chrf(std::string_view pred, std::string_view ref);

/// Scores `candidate` against the state's evidence and gates it on
/// `threshold`. Reference metrics are filled when `ref` is given.
UtilityReport assess(const DialogState& state, std::string_view candidate, double threshold,
                     const std::optional<std::string>& ref = std::nullopt);

/// Asks the LLM to critique `candidate` against the evidence. Falls back to
/// the rule-based sentence when the reply is blank. Throws InvalidInput when
/// the state has no evidence.
std::string self_criticism_feedback(Gateway& gateway, const DialogState& state, const std::string& candidate);

}  // namespace llmaug
