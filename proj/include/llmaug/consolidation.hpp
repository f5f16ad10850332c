#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "llmaug/corpus.hpp"
#include "llmaug/retrieval.hpp"
#include "llmaug/types.hpp"

namespace llmaug {

struct EvidenceEdge {
  std::string from;
  std::string to;
  std::string mention;

  bool operator==(const EvidenceEdge&) const = default;
};

/// Seeds plus the documents they link to, with labelled directed edges.
struct EvidenceGraph {
  std::map<std::string, Document> nodes;
  std::vector<std::string> seeds;  // retrieval order
  std::vector<EvidenceEdge> edges;  // sorted by (from, to), unique pairs

  std::vector<std::string> successors(const std::string& id) const;
  bool has_edge(const std::string& from, const std::string& to) const;
};

/// Links each seed to (a) its explicit links and (b) every corpus document
/// whose title occurs in the seed body as a whole-token, case-insensitive
/// phrase. Linked documents are pulled into the graph; edges between
/// already-present nodes are added for non-seeds too, without pulling
/// further documents.
EvidenceGraph link_entities(const std::vector<Document>& seed_docs, const Corpus& corpus);

/// Fraction of distinct query tokens that occur in `text`. 0 for an empty
/// query.
double token_recall(const std::vector<std::string>& query_tokens, const std::string& text);

inline constexpr std::size_t kDefaultMaxChainLength = 2;
inline constexpr std::size_t kDefaultChainCount = 5;
inline constexpr std::size_t kDefaultRetrieveCount = 5;

/// Enumerates simple paths of at most `max_len` hops starting at seed
/// nodes, scores each as the mean hop token recall, and returns the best
/// `k`. Ties prefer shorter chains, then lexicographically smaller hops.
std::vector<EvidenceChain> build_chains(const EvidenceGraph& graph, const std::string& query,
                                        std::size_t max_len, std::size_t k);

struct ConsolidationParams {
  std::size_t k_retrieve = kDefaultRetrieveCount;
  std::size_t max_len = kDefaultMaxChainLength;
  std::size_t k_chains = kDefaultChainCount;
  std::size_t query_count = kDefaultQueryCount;
};

/// Retrieve, link and chain.
std::vector<EvidenceChain> consolidate(const std::string& q, const std::vector<DialogTurn>& history,
                                       const InvertedIndex& index, const Corpus& corpus,
                                       const ConsolidationParams& params = {});

}  // namespace llmaug
