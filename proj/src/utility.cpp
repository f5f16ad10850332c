#include "llmaug/utility.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "llmaug/error.hpp"
#include "llmaug/llm_gateway.hpp"
#include "llmaug/prompt_engine.hpp"
#include "llmaug/text.hpp"

namespace llmaug {

namespace {

template <typename T>
std::map<T, std::size_t> counts(const std::vector<T>& items) {
  std::map<T, std::size_t> out;
  for (const auto& x : items) ++out[x];
  return out;
}

template <typename T>
std::size_t clipped_overlap(const std::map<T, std::size_t>& a, const std::map<T, std::size_t>& b) {
  std::size_t n = 0;
  for (const auto& [key, ca] : a) {
    auto it = b.find(key);
    if (it != b.end()) n += std::min(ca, it->second);
  }
  return n;
}

PrecisionRecallF1 bag_prf(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return {1.0, 1.0, 1.0};
  if (pred.empty() || gold.empty()) return {};
  const auto common = static_cast<double>(clipped_overlap(counts(pred), counts(gold)));
  if (common == 0.0) return {};
  const double p = common / static_cast<double>(pred.size());
  const double r = common / static_cast<double>(gold.size());
  return {p, r, 2.0 * p * r / (p + r)};
}

std::vector<std::vector<std::string>> ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                     tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
  }
  return out;
}

}  // namespace

std::vector<std::string> normalize(std::string_view text) {
  auto tokens = tokenize(text);
  std::erase_if(tokens, [](const std::string& t) { return t == "a" || t == "an" || t == "the"; });
  return tokens;
}

PrecisionRecallF1 token_f1(std::string_view pred, std::string_view gold) {
  return bag_prf(normalize(pred), normalize(gold));
}

double kf1(std::string_view pred, const std::vector<std::string>& evidence_texts) {
  if (evidence_texts.empty()) return 0.0;
  return token_f1(pred, join(evidence_texts, " ")).f1;
}

double bleu4(std::string_view pred, std::string_view ref) {
  const auto p = tokenize(pred);
  const auto r = tokenize(ref);
  if (p.empty() && r.empty()) return 1.0;
  if (p.empty() || r.empty()) return 0.0;
  const std::size_t max_order = std::min<std::size_t>(4, p.size());
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_order; ++n) {
    const auto pn = ngrams(p, n);
    const auto matched = clipped_overlap(counts(pn), counts(ngrams(r, n)));
    if (matched == 0) return 0.0;
    log_sum += std::log(static_cast<double>(matched) / static_cast<double>(pn.size()));
  }
  const double bp = std::exp(std::min(0.0, 1.0 - static_cast<double>(r.size()) / static_cast<double>(p.size())));
  return bp * std::exp(log_sum / static_cast<double>(max_order));
}

double rouge1_f(std::string_view pred, std::string_view ref) {
  return bag_prf(tokenize(pred), tokenize(ref)).f1;
}

double chrf(std::string_view pred, std::string_view ref) {
  constexpr std::size_t kMaxOrder = 6;
  constexpr double kBeta2 = 4.0;
  auto strip = [](std::string_view s) {
    std::u32string out;
    for (char32_t c : utf8_decode(s)) {
      if (!(c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f')) out.push_back(c);
    }
    return out;
  };
  const auto p = strip(pred);
  const auto r = strip(ref);
  if (p.empty() && r.empty()) return 1.0;
  if (p.empty() || r.empty()) return 0.0;

  auto char_ngrams = [](const std::u32string& s, std::size_t n) {
    std::map<std::u32string, std::size_t> out;
    for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[s.substr(i, n)];
    return out;
  };

  double precision_sum = 0.0;
  double recall_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= kMaxOrder && n <= r.size(); ++n) {
    const auto rn = char_ngrams(r, n);
    const auto pn = char_ngrams(p, n);
    const auto matched = static_cast<double>(clipped_overlap(pn, rn));
    const double ref_total = static_cast<double>(r.size() - n + 1);
    const double pred_total = p.size() >= n ? static_cast<double>(p.size() - n + 1) : 0.0;
    precision_sum += pred_total > 0.0 ? matched / pred_total : 0.0;
    recall_sum += matched / ref_total;
    ++orders;
  }
  const double precision = precision_sum / static_cast<double>(orders);
  const double recall = recall_sum / static_cast<double>(orders);
  if (precision == 0.0 && recall == 0.0) return 0.0;
  return (1.0 + kBeta2) * precision * recall / (kBeta2 * precision + recall);
}

UtilityReport assess(const DialogState& state, std::string_view candidate, double threshold,
                     const std::optional<std::string>& ref) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidInput, "threshold must lie in [0, 1]");
  }
  UtilityReport report;
  report.kf1 = kf1(candidate, evidence_texts(state));
  report.pass = report.kf1 >= threshold;
  if (!report.pass) report.feedback = kRuleFeedback;
  if (ref) {
    const auto prf = token_f1(candidate, *ref);
    report.aux["bleu4"] = bleu4(candidate, *ref);
    report.aux["rouge1_f"] = rouge1_f(candidate, *ref);
    report.aux["chrf"] = chrf(candidate, *ref);
    report.aux["token_p"] = prf.precision;
    report.aux["token_r"] = prf.recall;
    report.aux["token_f1"] = prf.f1;
  }
  return report;
}

std::string self_criticism_feedback(Gateway& gateway, const DialogState& state, const std::string& candidate) {
  const auto prompt = render_self_criticism_prompt(state, candidate);
  auto reply = trim(gateway.complete(LlmRequest{.prompt = prompt.rendered}));
  if (reply.empty()) return kRuleFeedback;
  return reply;
}

}  // namespace llmaug
