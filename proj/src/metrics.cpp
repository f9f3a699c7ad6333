#include "ggp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "ggp/error.hpp"

namespace ggp {
namespace {

using NgramCounts = std::map<std::vector<std::string>, std::uint64_t>;

NgramCounts count_ngrams(const Tokens& tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

double percent(double fraction) { return 100.0 * fraction; }

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t k = 0; k < 4; ++k) {
    matches[k] += other.matches[k];
    totals[k] += other.totals[k];
  }
  hyp_length += other.hyp_length;
  ref_length += other.ref_length;
  return *this;
}

BleuStats bleu_stats(const Tokens& hyp, const std::vector<Tokens>& refs) {
  if (refs.empty()) throw Error(ErrorKind::kShapeMismatch, "BLEU needs at least one reference");
  BleuStats stats;
  stats.hyp_length = hyp.size();
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto diff = [&](std::size_t len) {
      return len > hyp.size() ? len - hyp.size() : hyp.size() - len;
    };
    if (diff(r.size()) < diff(best) || (diff(r.size()) == diff(best) && r.size() < best)) best = r.size();
  }
  stats.ref_length = best;

  for (std::size_t n = 1; n <= 4; ++n) {
    const NgramCounts hyp_counts = count_ngrams(hyp, n);
    NgramCounts max_ref;
    for (const auto& r : refs) {
      for (const auto& [gram, c] : count_ngrams(r, n)) max_ref[gram] = std::max(max_ref[gram], c);
    }
    for (const auto& [gram, c] : hyp_counts) {
      stats.totals[n - 1] += c;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) stats.matches[n - 1] += std::min(c, it->second);
    }
  }
  return stats;
}

double bleu_from_stats(const BleuStats& stats) {
  if (stats.hyp_length == 0 || stats.matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    double m = static_cast<double>(stats.matches[k]);
    double t = static_cast<double>(stats.totals[k]);
    if (k > 0 && stats.matches[k] == 0) {
      m += 1.0;
      t += 1.0;
    }
    log_sum += std::log(m / t);
  }
  const double c = static_cast<double>(stats.hyp_length);
  const double r = static_cast<double>(stats.ref_length);
  const double log_bp = c > r ? 0.0 : 1.0 - r / c;
  return percent(std::exp(log_sum / 4.0 + log_bp));
}

double bleu4(const Tokens& hyp, const std::vector<Tokens>& refs) { return bleu_from_stats(bleu_stats(hyp, refs)); }

double corpus_bleu4(const std::vector<Tokens>& hyps, const std::vector<std::vector<Tokens>>& refs) {
  if (hyps.size() != refs.size()) throw Error(ErrorKind::kShapeMismatch, "hypothesis and reference counts differ");
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += bleu_stats(hyps[i], refs[i]);
  return bleu_from_stats(total);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Tokens& hyp, const Tokens& ref, double beta) {
  const std::size_t lcs = lcs_length(hyp, ref);
  if (lcs == 0) return 0.0;
  const double recall = static_cast<double>(lcs) / static_cast<double>(ref.size());
  const double precision = static_cast<double>(lcs) / static_cast<double>(hyp.size());
  const double b2 = beta * beta;
  return percent((1.0 + b2) * recall * precision / (recall + b2 * precision));
}

double plan_bleu4(const Plan& hyp, const Plan& ref, const PhraseCollection& collection) {
  return bleu4(linearize_plan(hyp, collection), {linearize_plan(ref, collection)});
}

double plan_rouge_l(const Plan& hyp, const Plan& ref, const PhraseCollection& collection) {
  return rouge_l(linearize_plan(hyp, collection), linearize_plan(ref, collection));
}

MetricReport evaluate_plans(const std::vector<Plan>& hyps, const std::vector<Plan>& refs,
                            const std::vector<PhraseCollection>& collections) {
  if (hyps.size() != refs.size() || hyps.size() != collections.size()) {
    throw Error(ErrorKind::kShapeMismatch, "plan and collection counts differ");
  }
  MetricReport report;
  BleuStats pooled;
  double rouge_sum = 0.0;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const Tokens h = linearize_plan(hyps[i], collections[i]);
    const Tokens r = linearize_plan(refs[i], collections[i]);
    const BleuStats s = bleu_stats(h, {r});
    pooled += s;
    SampleMetrics m{bleu_from_stats(s), rouge_l(h, r)};
    rouge_sum += m.plan_rouge_l;
    report.per_sample.push_back(m);
  }
  report.plan_bleu4 = hyps.empty() ? 0.0 : bleu_from_stats(pooled);
  report.plan_rouge_l = hyps.empty() ? 0.0 : rouge_sum / static_cast<double>(hyps.size());
  return report;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["bleu4"] = bleu4 ? nlohmann::json(*bleu4) : nlohmann::json(nullptr);
  j["plan_bleu4"] = plan_bleu4;
  j["plan_rouge_l"] = plan_rouge_l;
  j["samples"] = per_sample.size();
  auto& rows = j["per_sample"] = nlohmann::json::array();
  for (const auto& m : per_sample) rows.push_back({{"plan_bleu4", m.plan_bleu4}, {"plan_rouge_l", m.plan_rouge_l}});
  return j;
}

std::string MetricReport::table() const {
  std::ostringstream out;
  char line[96];
  std::snprintf(line, sizeof(line), "%-14s %10s\n", "metric", "score");
  out << line;
  std::snprintf(line, sizeof(line), "%-14s %10s\n", "BLEU-4", bleu4 ? std::to_string(*bleu4).c_str() : "n/a");
  if (bleu4) std::snprintf(line, sizeof(line), "%-14s %10.2f\n", "BLEU-4", *bleu4);
  out << line;
  std::snprintf(line, sizeof(line), "%-14s %10.2f\n", "PLAN BLEU-4", plan_bleu4);
  out << line;
  std::snprintf(line, sizeof(line), "%-14s %10.2f\n", "PLAN ROUGE-L", plan_rouge_l);
  out << line;
  std::snprintf(line, sizeof(line), "%-14s %10zu\n", "samples", per_sample.size());
  out << line;
  return out.str();
}

Tokens tokenize_text(const std::string& text) {
  std::istringstream in(text);
  Tokens out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

}  // namespace ggp
