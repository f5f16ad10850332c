#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "llmaug/corpus.hpp"
#include "llmaug/text.hpp"
#include "llmaug/types.hpp"

namespace llmaug {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Posting {
  std::string doc_id;
  std::size_t tf = 0;

  bool operator==(const Posting&) const = default;
};

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;

  bool operator==(const ScoredDoc&) const = default;
};

/// Okapi BM25 index with +1-smoothed idf, so scores are never negative.
/// Immutable after construction.
class InvertedIndex {
 public:
  /// Throws InvalidInput on an empty corpus.
  explicit InvertedIndex(const Corpus& corpus, Bm25Params params = {});

  std::size_t doc_count() const { return doc_lengths_.size(); }
  double avgdl() const { return avgdl_; }
  const Bm25Params& params() const { return params_; }

  /// Postings for `term`, ordered by doc id. Empty when the term is unseen.
  const std::vector<Posting>& postings(const std::string& term) const;
  std::size_t doc_length(std::string_view doc_id) const;
  bool contains(std::string_view doc_id) const;
  const std::map<std::string, std::vector<Posting>>& all_postings() const { return postings_; }
  const std::map<std::string, std::size_t>& doc_lengths() const { return doc_lengths_; }

  double idf(const std::string& term) const;

 private:
  std::map<std::string, std::vector<Posting>> postings_;
  std::map<std::string, std::size_t> doc_lengths_;
  // (doc, term) -> tf, for scoring a single document.
  std::map<std::string, std::map<std::string, std::size_t>> term_freqs_;
  double avgdl_ = 0.0;
  Bm25Params params_;

  friend double bm25_score(const InvertedIndex&, const std::vector<std::string>&, std::string_view);
};

InvertedIndex build_index(const Corpus& corpus, Bm25Params params = {});

/// Throws NotFound for an unknown doc id.
double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_tokens,
                  std::string_view doc_id);

/// Top-k documents with positive score, best first; equal scores go to the
/// smaller doc id.
std::vector<ScoredDoc> search(const InvertedIndex& index, std::string_view query, std::size_t k);

/// Runs each query and keeps, per document, its best score before taking
/// the top-k.
std::vector<ScoredDoc> search_merged(const InvertedIndex& index, const std::vector<std::string>& queries,
                                     std::size_t k);

inline constexpr std::size_t kDefaultQueryCount = 2;

/// First query is `q` itself; the second prefixes the last user turn of
/// the history. Duplicates are dropped and at most `n` are returned.
std::vector<std::string> formulate_queries(const std::string& q, const std::vector<DialogTurn>& history,
                                           std::size_t n = kDefaultQueryCount);

}  // namespace llmaug
