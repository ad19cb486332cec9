#include "umt/bleu.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "umt/text.hpp"

namespace umt {

namespace {

constexpr double kEpsilon = 0.01;  // substituted match count when smoothing

std::map<std::string, long long> ngram_counts(const Sentence& s, int n) {
  std::map<std::string, long long> counts;
  if (static_cast<int>(s.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    std::string key = s[i];
    for (int k = 1; k < n; ++k) {
      key += '\x1f';
      key += s[i + k];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace

BleuReport corpus_bleu(const std::vector<Sentence>& hypotheses,
                       const std::vector<Sentence>& references, int max_n,
                       bool smoothing) {
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("corpus_bleu: hypothesis/reference count mismatch");
  if (hypotheses.empty()) throw std::invalid_argument("corpus_bleu: empty corpus");
  if (max_n < 1) throw std::invalid_argument("corpus_bleu: max_n < 1");

  std::vector<long long> matches(max_n, 0), totals(max_n, 0);
  std::size_t hyp_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const Sentence& hyp = hypotheses[i];
    const Sentence& ref = references[i];
    hyp_len += hyp.size();
    ref_len += ref.size();
    for (int n = 1; n <= max_n; ++n) {
      auto hyp_counts = ngram_counts(hyp, n);
      if (hyp_counts.empty()) continue;
      auto ref_counts = ngram_counts(ref, n);
      for (const auto& [gram, count] : hyp_counts) {
        totals[n - 1] += count;
        auto it = ref_counts.find(gram);
        if (it != ref_counts.end())
          matches[n - 1] += count < it->second ? count : it->second;
      }
    }
  }

  BleuReport report;
  report.max_n = max_n;
  report.smoothed = smoothing;
  report.hypothesis_length = hyp_len;
  report.reference_length = ref_len;
  report.precisions.resize(max_n, 0.0);

  double log_sum = 0.0;
  bool zero = false;
  for (int n = 0; n < max_n; ++n) {
    double p = 0.0;
    if (totals[n] > 0) {
      if (matches[n] > 0)
        p = static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
      else if (smoothing)
        p = kEpsilon / static_cast<double>(totals[n]);
    }
    report.precisions[n] = p;
    if (p > 0.0)
      log_sum += std::log(p);
    else
      zero = true;
  }

  if (hyp_len >= ref_len)
    report.brevity_penalty = 1.0;
  else if (hyp_len == 0)
    report.brevity_penalty = 0.0;
  else
    report.brevity_penalty =
        std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));

  report.bleu = zero ? 0.0
                     : 100.0 * report.brevity_penalty * std::exp(log_sum / max_n);
  return report;
}

std::string BleuReport::tsv() const {
  std::ostringstream ss;
  ss << format_g9(bleu);
  for (double p : precisions) ss << '\t' << format_g9(p);
  ss << '\t' << format_g9(brevity_penalty) << '\t' << hypothesis_length << '\t'
     << reference_length;
  return ss.str();
}

}  // namespace umt
