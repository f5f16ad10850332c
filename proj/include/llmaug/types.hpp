#pragma once

// Value types shared across modules.

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace llmaug {

enum class Speaker { User, Assistant };

struct DialogTurn {
  Speaker speaker = Speaker::User;
  std::string text;

  bool operator==(const DialogTurn&) const = default;
};

/// Throws InvalidInput when the text is blank.
DialogTurn make_turn(Speaker speaker, std::string text);

const char* to_string(Speaker speaker);

enum class DocKind { Passage, Table };

struct Document {
  std::string id;
  std::string title;
  std::string body;
  DocKind kind = DocKind::Passage;
  std::vector<std::string> links;

  bool operator==(const Document&) const = default;
};

/// Ordered path through the evidence graph. `texts[i]` is the body of
/// `hops[i]`.
struct EvidenceChain {
  std::vector<std::string> hops;
  double score = 0.0;
  std::vector<std::string> texts;

  bool operator==(const EvidenceChain&) const = default;
};

struct UtilityReport {
  double kf1 = 0.0;
  std::map<std::string, double> aux;
  bool pass = false;
  std::optional<std::string> feedback;

  bool operator==(const UtilityReport&) const = default;
};

}  // namespace llmaug
