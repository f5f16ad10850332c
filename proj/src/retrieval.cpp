#include "llmaug/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "llmaug/error.hpp"

namespace llmaug {

InvertedIndex::InvertedIndex(const Corpus& corpus, Bm25Params params) : params_(params) {
  if (corpus.empty()) throw Error(ErrorKind::InvalidInput, "cannot index an empty corpus");
  std::size_t total = 0;
  for (const auto& doc : corpus.documents()) {
    const auto tokens = tokenize(doc.body);
    auto& tf = term_freqs_[doc.id];
    for (const auto& t : tokens) ++tf[t];
    doc_lengths_[doc.id] = tokens.size();
    total += tokens.size();
  }
  for (const auto& [doc_id, tf] : term_freqs_) {
    for (const auto& [term, count] : tf) postings_[term].push_back(Posting{doc_id, count});
  }
  avgdl_ = static_cast<double>(total) / static_cast<double>(doc_lengths_.size());
}

const std::vector<Posting>& InvertedIndex::postings(const std::string& term) const {
  static const std::vector<Posting> kEmpty;
  auto it = postings_.find(term);
  return it == postings_.end() ? kEmpty : it->second;
}

std::size_t InvertedIndex::doc_length(std::string_view doc_id) const {
  auto it = doc_lengths_.find(std::string(doc_id));
  if (it == doc_lengths_.end()) throw Error(ErrorKind::NotFound, "unknown document id '" + std::string(doc_id) + "'");
  return it->second;
}

bool InvertedIndex::contains(std::string_view doc_id) const {
  return doc_lengths_.count(std::string(doc_id)) != 0;
}

double InvertedIndex::idf(const std::string& term) const {
  const auto n = static_cast<double>(doc_count());
  const auto df = static_cast<double>(postings(term).size());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

InvertedIndex build_index(const Corpus& corpus, Bm25Params params) { return InvertedIndex(corpus, params); }

namespace {

double term_score(double idf, double tf, double len, double avgdl, const Bm25Params& p) {
  const double norm = avgdl > 0.0 ? len / avgdl : 0.0;
  return idf * tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

}  // namespace

double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_tokens,
                  std::string_view doc_id) {
  auto doc_it = index.term_freqs_.find(std::string(doc_id));
  if (doc_it == index.term_freqs_.end()) {
    throw Error(ErrorKind::NotFound, "unknown document id '" + std::string(doc_id) + "'");
  }
  const auto& tf = doc_it->second;
  const auto len = static_cast<double>(index.doc_length(doc_id));
  double score = 0.0;
  for (const auto& term : query_tokens) {
    auto it = tf.find(term);
    if (it == tf.end()) continue;
    score += term_score(index.idf(term), static_cast<double>(it->second), len, index.avgdl(), index.params());
  }
  return score;
}

namespace {

std::vector<ScoredDoc> top_k(std::unordered_map<std::string, double> scores, std::size_t k) {
  std::vector<ScoredDoc> out;
  out.reserve(scores.size());
  for (auto& [id, s] : scores) {
    if (s > 0.0) out.push_back(ScoredDoc{id, s});
  }
  auto better = [](const ScoredDoc& a, const ScoredDoc& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.doc_id < b.doc_id;
  };
  if (out.size() > k) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), better);
    out.resize(k);
  } else {
    std::sort(out.begin(), out.end(), better);
  }
  return out;
}

// Per-document scores from the postings, term by term in query order.
// Repeated query terms count once per occurrence.
std::unordered_map<std::string, double> accumulate(const InvertedIndex& index,
                                                   const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, double> scores;
  for (const auto& term : tokens) {
    const auto& plist = index.postings(term);
    if (plist.empty()) continue;
    const double idf = index.idf(term);
    for (const auto& p : plist) {
      scores[p.doc_id] += term_score(idf, static_cast<double>(p.tf), static_cast<double>(index.doc_length(p.doc_id)),
                                     index.avgdl(), index.params());
    }
  }
  return scores;
}

}  // namespace

std::vector<ScoredDoc> search(const InvertedIndex& index, std::string_view query, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::InvalidInput, "search k must be positive");
  return top_k(accumulate(index, tokenize(query)), k);
}

std::vector<ScoredDoc> search_merged(const InvertedIndex& index, const std::vector<std::string>& queries,
                                     std::size_t k) {
  if (k == 0) throw Error(ErrorKind::InvalidInput, "search k must be positive");
  std::unordered_map<std::string, double> best;
  for (const auto& q : queries) {
    for (const auto& [id, s] : accumulate(index, tokenize(q))) {
      auto [it, inserted] = best.emplace(id, s);
      if (!inserted) it->second = std::max(it->second, s);
    }
  }
  return top_k(std::move(best), k);
}

std::vector<std::string> formulate_queries(const std::string& q, const std::vector<DialogTurn>& history,
                                           std::size_t n) {
  if (trim(q).empty()) throw Error(ErrorKind::InvalidInput, "query is empty");
  std::vector<std::string> out;
  if (n == 0) return out;
  out.push_back(q);
  if (n >= 2) {
    auto last_user = std::find_if(history.rbegin(), history.rend(),
                                  [](const DialogTurn& t) { return t.speaker == Speaker::User; });
    if (last_user != history.rend()) {
      std::string combined = last_user->text + " " + q;
      if (std::find(out.begin(), out.end(), combined) == out.end()) out.push_back(std::move(combined));
    }
  }
  return out;
}

}  // namespace llmaug
