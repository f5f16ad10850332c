#pragma once

// Brute-force reference implementations. ASCII input only.

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "llmaug/consolidation.hpp"
#include "llmaug/corpus.hpp"
#include "llmaug/policy.hpp"
#include "llmaug/retrieval.hpp"

namespace oracle {

std::vector<std::string> words(const std::string& s);
std::vector<std::string> words_without_articles(const std::string& s);

struct Prf {
  double p, r, f;
};

Prf bag_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold);
Prf token_f1(const std::string& pred, const std::string& gold);
double kf1(const std::string& pred, const std::vector<std::string>& evidence);
double bleu4(const std::string& pred, const std::string& ref);
double rouge1(const std::string& pred, const std::string& ref);
double chrf(const std::string& pred, const std::string& ref);

std::vector<llmaug::ScoredDoc> bm25_search(const llmaug::Corpus& corpus, const std::string& query, std::size_t k);

std::vector<llmaug::EvidenceChain> chains(const llmaug::EvidenceGraph& graph, const std::string& query,
                                          std::size_t max_len, std::size_t k);

// Mean over episodes of sum_t (G_t - baseline) * log pi(a_t | s_t), with
// the masked log-softmax written out by hand.
double reinforce_objective(const llmaug::SoftmaxPolicy& policy, const std::vector<llmaug::Episode>& episodes,
                           double gamma, double baseline);

// Central differences of reinforce_objective, one weight at a time.
llmaug::PolicyWeights numeric_gradient(const llmaug::SoftmaxPolicy& policy,
                                       const std::vector<llmaug::Episode>& episodes, double gamma, double baseline,
                                       double h = 1e-5);

// Episodes with random features, non-empty masks and valid actions.
std::vector<llmaug::Episode> random_episodes(std::mt19937_64& rng, std::size_t count);

// Random ASCII text over a small vocabulary, with capitals, punctuation
// and articles mixed in.
std::string random_text(std::mt19937_64& rng, std::size_t min_words, std::size_t max_words);

}  // namespace oracle
