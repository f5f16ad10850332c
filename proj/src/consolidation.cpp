#include "llmaug/consolidation.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "llmaug/error.hpp"
#include "llmaug/text.hpp"

namespace llmaug {

std::vector<std::string> EvidenceGraph::successors(const std::string& id) const {
  std::vector<std::string> out;
  auto it = std::lower_bound(edges.begin(), edges.end(), id,
                             [](const EvidenceEdge& e, const std::string& key) { return e.from < key; });
  for (; it != edges.end() && it->from == id; ++it) out.push_back(it->to);
  return out;
}

bool EvidenceGraph::has_edge(const std::string& from, const std::string& to) const {
  return std::binary_search(edges.begin(), edges.end(), EvidenceEdge{from, to, {}},
                            [](const EvidenceEdge& a, const EvidenceEdge& b) {
                              return std::tie(a.from, a.to) < std::tie(b.from, b.to);
                            });
}

namespace {

struct TitleEntry {
  std::vector<std::string> tokens;
  const Document* doc;
};

// Title phrases bucketed by their first token.
std::unordered_map<std::string, std::vector<TitleEntry>> title_index(const Corpus& corpus) {
  std::unordered_map<std::string, std::vector<TitleEntry>> index;
  for (const auto& doc : corpus.documents()) {
    auto tokens = tokenize(doc.title);
    if (tokens.empty()) continue;
    auto& bucket = index[tokens.front()];
    bucket.push_back(TitleEntry{std::move(tokens), &doc});
  }
  return index;
}

// Edges out of `source`; `accept` decides whether a target may be used.
template <typename Accept>
void collect_edges(const Document& source, const Corpus& corpus,
                   const std::unordered_map<std::string, std::vector<TitleEntry>>& titles, Accept accept,
                   std::map<std::pair<std::string, std::string>, std::string>& edges) {
  for (const auto& link : source.links) {
    const Document* target = corpus.find(link);
    if (target == nullptr || target->id == source.id || !accept(*target)) continue;
    edges.emplace(std::make_pair(source.id, target->id), join(tokenize(target->title), " "));
  }
  const auto body = tokenize(source.body);
  for (std::size_t i = 0; i < body.size(); ++i) {
    auto bucket = titles.find(body[i]);
    if (bucket == titles.end()) continue;
    for (const auto& entry : bucket->second) {
      const auto& t = entry.tokens;
      if (entry.doc->id == source.id || i + t.size() > body.size()) continue;
      if (!std::equal(t.begin(), t.end(), body.begin() + static_cast<std::ptrdiff_t>(i))) continue;
      if (!accept(*entry.doc)) continue;
      edges.emplace(std::make_pair(source.id, entry.doc->id), join(t, " "));
    }
  }
}

}  // namespace

EvidenceGraph link_entities(const std::vector<Document>& seed_docs, const Corpus& corpus) {
  if (seed_docs.empty()) throw Error(ErrorKind::InvalidInput, "link_entities needs at least one seed");
  EvidenceGraph graph;
  const auto titles = title_index(corpus);
  std::map<std::pair<std::string, std::string>, std::string> edges;

  for (const auto& seed : seed_docs) {
    if (graph.nodes.emplace(seed.id, seed).second) graph.seeds.push_back(seed.id);
  }
  for (const auto& seed : seed_docs) {
    collect_edges(seed, corpus, titles, [](const Document&) { return true; }, edges);
  }
  for (const auto& [key, mention] : edges) {
    if (graph.nodes.count(key.second) == 0) graph.nodes.emplace(key.second, corpus.at(key.second));
  }
  std::set<std::string> seed_set(graph.seeds.begin(), graph.seeds.end());
  for (const auto& [id, doc] : graph.nodes) {
    if (seed_set.count(id) != 0) continue;
    collect_edges(doc, corpus, titles, [&](const Document& t) { return graph.nodes.count(t.id) != 0; }, edges);
  }
  for (auto& [key, mention] : edges) graph.edges.push_back(EvidenceEdge{key.first, key.second, mention});
  return graph;
}

double token_recall(const std::vector<std::string>& query_tokens, const std::string& text) {
  const std::set<std::string> wanted(query_tokens.begin(), query_tokens.end());
  if (wanted.empty()) return 0.0;
  const auto body = tokenize(text);
  const std::unordered_set<std::string> have(body.begin(), body.end());
  std::size_t hit = 0;
  for (const auto& t : wanted) hit += have.count(t);
  return static_cast<double>(hit) / static_cast<double>(wanted.size());
}

std::vector<EvidenceChain> build_chains(const EvidenceGraph& graph, const std::string& query, std::size_t max_len,
                                        std::size_t k) {
  if (graph.nodes.empty()) throw Error(ErrorKind::InvalidInput, "evidence graph is empty");
  if (max_len == 0 || k == 0) return {};

  const auto query_tokens = tokenize(query);
  std::unordered_map<std::string, double> relevance;
  for (const auto& [id, doc] : graph.nodes) relevance[id] = token_recall(query_tokens, doc.body);

  std::vector<EvidenceChain> chains;
  std::vector<std::string> path;
  double path_sum = 0.0;

  // Depth-first walk over simple paths; hop relevances are summed in hop order.
  auto walk = [&](auto&& self, const std::string& node) -> void {
    path.push_back(node);
    const double saved = path_sum;
    path_sum += relevance.at(node);
    EvidenceChain chain;
    chain.hops = path;
    chain.score = path_sum / static_cast<double>(path.size());
    chains.push_back(std::move(chain));
    if (path.size() < max_len) {
      for (const auto& next : graph.successors(node)) {
        if (std::find(path.begin(), path.end(), next) == path.end()) self(self, next);
      }
    }
    path_sum = saved;
    path.pop_back();
  };
  for (const auto& seed : graph.seeds) walk(walk, seed);

  auto better = [](const EvidenceChain& a, const EvidenceChain& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.hops.size() != b.hops.size()) return a.hops.size() < b.hops.size();
    return a.hops < b.hops;
  };
  std::sort(chains.begin(), chains.end(), better);
  if (chains.size() > k) chains.resize(k);
  for (auto& chain : chains) {
    for (const auto& hop : chain.hops) chain.texts.push_back(graph.nodes.at(hop).body);
  }
  return chains;
}

std::vector<EvidenceChain> consolidate(const std::string& q, const std::vector<DialogTurn>& history,
                                       const InvertedIndex& index, const Corpus& corpus,
                                       const ConsolidationParams& params) {
  const auto queries = formulate_queries(q, history, params.query_count);
  const auto hits = search_merged(index, queries, params.k_retrieve);
  if (hits.empty()) return {};
  std::vector<Document> seeds;
  seeds.reserve(hits.size());
  for (const auto& hit : hits) seeds.push_back(corpus.at(hit.doc_id));
  const auto graph = link_entities(seeds, corpus);
  return build_chains(graph, q, params.max_len, params.k_chains);
}

}  // namespace llmaug
