#include "oracles.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace oracle {

std::vector<std::string> words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<std::string> words_without_articles(const std::string& s) {
  std::vector<std::string> out;
  for (auto& w : words(s)) {
    if (w != "a" && w != "an" && w != "the") out.push_back(w);
  }
  return out;
}

namespace {

// Matches by deleting from a copy of the gold list.
std::size_t overlap(const std::vector<std::string>& pred, std::vector<std::string> gold) {
  std::size_t n = 0;
  for (const auto& w : pred) {
    for (std::size_t j = 0; j < gold.size(); ++j) {
      if (gold[j] == w) {
        gold.erase(gold.begin() + static_cast<long>(j));
        ++n;
        break;
      }
    }
  }
  return n;
}

std::vector<std::string> grams(const std::vector<std::string>& t, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    std::string g;
    for (std::size_t j = i; j < i + n; ++j) g += t[j] + '\x1f';
    out.push_back(g);
  }
  return out;
}

std::vector<std::string> char_grams(const std::string& s, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) out.push_back(s.substr(i, n));
  return out;
}

}  // namespace

Prf bag_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return {1, 1, 1};
  if (pred.empty() || gold.empty()) return {0, 0, 0};
  const double m = static_cast<double>(overlap(pred, gold));
  if (m == 0) return {0, 0, 0};
  const double p = m / static_cast<double>(pred.size());
  const double r = m / static_cast<double>(gold.size());
  return {p, r, 2 * p * r / (p + r)};
}

Prf token_f1(const std::string& pred, const std::string& gold) {
  return bag_f1(words_without_articles(pred), words_without_articles(gold));
}

double kf1(const std::string& pred, const std::vector<std::string>& evidence) {
  if (evidence.empty()) return 0;
  std::string all;
  for (const auto& e : evidence) all += e + " ";
  return token_f1(pred, all).f;
}

double bleu4(const std::string& pred, const std::string& ref) {
  const auto p = words(pred);
  const auto r = words(ref);
  if (p.empty() && r.empty()) return 1;
  if (p.empty() || r.empty()) return 0;
  const std::size_t orders = std::min<std::size_t>(4, p.size());
  double prod = 1;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto pg = grams(p, n);
    const double m = static_cast<double>(overlap(pg, grams(r, n)));
    prod *= m / static_cast<double>(pg.size());
  }
  if (prod == 0) return 0;
  const double c = static_cast<double>(p.size());
  const double rl = static_cast<double>(r.size());
  const double bp = c > rl ? 1.0 : std::exp(1 - rl / c);
  return bp * std::pow(prod, 1.0 / static_cast<double>(orders));
}

double rouge1(const std::string& pred, const std::string& ref) { return bag_f1(words(pred), words(ref)).f; }

double chrf(const std::string& pred, const std::string& ref) {
  std::string p, r;
  for (char c : pred) {
    if (!std::isspace(static_cast<unsigned char>(c))) p += c;
  }
  for (char c : ref) {
    if (!std::isspace(static_cast<unsigned char>(c))) r += c;
  }
  if (p.empty() && r.empty()) return 1;
  if (p.empty() || r.empty()) return 0;
  double ps = 0, rs = 0;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= 6 && n <= r.size(); ++n) {
    const auto pg = char_grams(p, n);
    const auto rg = char_grams(r, n);
    const double m = static_cast<double>(overlap(pg, rg));
    ps += pg.empty() ? 0 : m / static_cast<double>(pg.size());
    rs += m / static_cast<double>(rg.size());
    ++orders;
  }
  const double prec = ps / static_cast<double>(orders);
  const double rec = rs / static_cast<double>(orders);
  if (prec + rec == 0) return 0;
  return 5 * prec * rec / (4 * prec + rec);
}

std::vector<llmaug::ScoredDoc> bm25_search(const llmaug::Corpus& corpus, const std::string& query, std::size_t k) {
  const double k1 = 1.2, b = 0.75;
  const auto& docs = corpus.documents();
  std::vector<std::vector<std::string>> toks;
  double total = 0;
  for (const auto& d : docs) {
    toks.push_back(words(d.body));
    total += static_cast<double>(toks.back().size());
  }
  const double n = static_cast<double>(docs.size());
  const double avgdl = total / n;
  std::vector<llmaug::ScoredDoc> all;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    double score = 0;
    for (const auto& q : words(query)) {
      const double tf = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), q));
      if (tf == 0) continue;
      double df = 0;
      for (const auto& t : toks) df += std::find(t.begin(), t.end(), q) != t.end() ? 1 : 0;
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      const double len = static_cast<double>(toks[i].size());
      score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * (len / avgdl)));
    }
    if (score > 0) all.push_back({docs[i].id, score});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.doc_id < y.doc_id; });
  std::stable_sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.score > y.score; });
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<llmaug::EvidenceChain> chains(const llmaug::EvidenceGraph& graph, const std::string& query,
                                          std::size_t max_len, std::size_t k) {
  std::vector<std::string> ids;
  for (const auto& [id, doc] : graph.nodes) ids.push_back(id);
  auto q = words(query);
  std::sort(q.begin(), q.end());
  q.erase(std::unique(q.begin(), q.end()), q.end());
  auto recall = [&](const std::string& id) {
    if (q.empty()) return 0.0;
    const auto w = words(graph.nodes.at(id).body);
    double hit = 0;
    for (const auto& t : q) hit += std::find(w.begin(), w.end(), t) != w.end() ? 1 : 0;
    return hit / static_cast<double>(q.size());
  };
  auto has_edge = [&](const std::string& a, const std::string& c) {
    for (const auto& e : graph.edges) {
      if (e.from == a && e.to == c) return true;
    }
    return false;
  };

  // Every sequence of node indices of length 1..max_len, odometer style.
  std::vector<llmaug::EvidenceChain> out;
  for (std::size_t len = 1; len <= max_len && len <= ids.size(); ++len) {
    std::vector<std::size_t> digit(len, 0);
    while (true) {
      std::vector<std::string> hops;
      for (auto d : digit) hops.push_back(ids[d]);
      bool ok = std::find(graph.seeds.begin(), graph.seeds.end(), hops[0]) != graph.seeds.end();
      for (std::size_t i = 0; ok && i < len; ++i) {
        for (std::size_t j = i + 1; j < len; ++j) ok = ok && hops[i] != hops[j];
        if (i + 1 < len) ok = ok && has_edge(hops[i], hops[i + 1]);
      }
      if (ok) {
        double sum = 0;
        for (const auto& h : hops) sum += recall(h);
        out.push_back({hops, sum / static_cast<double>(len), {}});
      }
      std::size_t pos = 0;
      while (pos < len && ++digit[pos] == ids.size()) digit[pos++] = 0;
      if (pos == len) break;
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& c) {
    if (a.score != c.score) return a.score > c.score;
    if (a.hops.size() != c.hops.size()) return a.hops.size() < c.hops.size();
    return a.hops < c.hops;
  });
  if (out.size() > k) out.resize(k);
  for (auto& c : out) {
    for (const auto& h : c.hops) c.texts.push_back(graph.nodes.at(h).body);
  }
  return out;
}

double reinforce_objective(const llmaug::SoftmaxPolicy& policy, const std::vector<llmaug::Episode>& episodes,
                           double gamma, double baseline) {
  double total = 0;
  for (const auto& ep : episodes) {
    const std::size_t n = ep.steps.size();
    for (std::size_t t = 0; t < n; ++t) {
      const auto& st = ep.steps[t];
      const double g = std::pow(gamma, static_cast<double>(n - 1 - t)) * ep.reward;
      std::vector<double> logits;
      double chosen = 0;
      for (int a = 0; a < llmaug::kNumActions; ++a) {
        if (!st.mask[static_cast<std::size_t>(a)]) continue;
        double z = 0;
        for (int f = 0; f < llmaug::kNumFeatures; ++f) z += policy.weights(a, f) * st.features(f);
        logits.push_back(z);
        if (a == static_cast<int>(st.action)) chosen = z;
      }
      const double m = *std::max_element(logits.begin(), logits.end());
      double sum = 0;
      for (double z : logits) sum += std::exp(z - m);
      total += (g - baseline) * (chosen - m - std::log(sum));
    }
  }
  return total / static_cast<double>(episodes.size());
}

llmaug::PolicyWeights numeric_gradient(const llmaug::SoftmaxPolicy& policy,
                                       const std::vector<llmaug::Episode>& episodes, double gamma, double baseline,
                                       double h) {
  llmaug::PolicyWeights out;
  for (int a = 0; a < llmaug::kNumActions; ++a) {
    for (int f = 0; f < llmaug::kNumFeatures; ++f) {
      auto up = policy;
      auto down = policy;
      up.weights(a, f) += h;
      down.weights(a, f) -= h;
      out(a, f) = (reinforce_objective(up, episodes, gamma, baseline) -
                   reinforce_objective(down, episodes, gamma, baseline)) /
                  (2 * h);
    }
  }
  return out;
}

std::vector<llmaug::Episode> random_episodes(std::mt19937_64& rng, std::size_t count) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> len(1, 4);
  std::vector<llmaug::Episode> out;
  for (std::size_t e = 0; e < count; ++e) {
    llmaug::Episode ep;
    ep.reward = unit(rng);
    const std::size_t n = len(rng);
    for (std::size_t t = 0; t < n; ++t) {
      llmaug::EpisodeStep st;
      st.features(0) = 1.0;
      for (int f = 1; f < llmaug::kNumFeatures; ++f) st.features(f) = unit(rng);
      std::vector<int> valid;
      while (valid.empty()) {
        for (int a = 0; a < llmaug::kNumActions; ++a) {
          st.mask[static_cast<std::size_t>(a)] = unit(rng) < 0.6;
          if (st.mask[static_cast<std::size_t>(a)]) valid.push_back(a);
        }
      }
      st.action = static_cast<llmaug::Action>(valid[std::uniform_int_distribution<std::size_t>(0, valid.size() - 1)(rng)]);
      ep.steps.push_back(st);
    }
    out.push_back(ep);
  }
  return out;
}

std::string random_text(std::mt19937_64& rng, std::size_t min_words, std::size_t max_words) {
  static const std::vector<std::string> vocab = {"the", "a",     "an",    "beer",  "Wine", "cheap", "price",
                                                 "is",  "north", "town",  "food",  "good", "A",     "train",
                                                 "Hotel", "free", "park", "7",     "x1",   "menu",  "drinks"};
  static const std::vector<std::string> seps = {" ", " ", " ", ", ", ". ", "  ", "-", "? "};
  std::uniform_int_distribution<std::size_t> len(min_words, max_words);
  std::uniform_int_distribution<std::size_t> w(0, vocab.size() - 1);
  std::uniform_int_distribution<std::size_t> s(0, seps.size() - 1);
  const std::size_t n = len(rng);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += seps[s(rng)];
    out += vocab[w(rng)];
  }
  return out;
}

}  // namespace oracle
