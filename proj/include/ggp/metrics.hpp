#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ggp/plan.hpp"

namespace ggp {

using Tokens = std::vector<std::string>;

inline constexpr double kRougeBeta = 1.2;

/// Clipped n-gram matches and hypothesis n-gram totals for n = 1..4, plus the
/// lengths that feed the brevity penalty. Corpus BLEU pools these over samples.
struct BleuStats {
  std::array<std::uint64_t, 4> matches{};
  std::array<std::uint64_t, 4> totals{};
  std::uint64_t hyp_length = 0;
  std::uint64_t ref_length = 0;

  BleuStats& operator+=(const BleuStats& other);
};

/// Reference length is the closest reference length (shorter wins ties).
BleuStats bleu_stats(const Tokens& hyp, const std::vector<Tokens>& refs);

/// BLEU-4 as a percentage. For n >= 2 a zero match count is smoothed to
/// (0 + 1) / (total + 1); unigram precision is never smoothed, so an empty or
/// fully disjoint hypothesis scores exactly 0.
double bleu_from_stats(const BleuStats& stats);

double bleu4(const Tokens& hyp, const std::vector<Tokens>& refs);
double corpus_bleu4(const std::vector<Tokens>& hyps, const std::vector<std::vector<Tokens>>& refs);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

/// LCS F-measure (percentage) with recall weighted by beta.
double rouge_l(const Tokens& hyp, const Tokens& ref, double beta = kRougeBeta);

double plan_bleu4(const Plan& hyp, const Plan& ref, const PhraseCollection& collection);
double plan_rouge_l(const Plan& hyp, const Plan& ref, const PhraseCollection& collection);

struct SampleMetrics {
  double plan_bleu4 = 0.0;
  double plan_rouge_l = 0.0;
};

struct MetricReport {
  /// Text-level BLEU-4; only present when generated texts were scored.
  std::optional<double> bleu4;
  /// Corpus-level BLEU-4 over linearized plans.
  double plan_bleu4 = 0.0;
  /// Mean of per-sample ROUGE-L over linearized plans.
  double plan_rouge_l = 0.0;
  std::vector<SampleMetrics> per_sample;

  nlohmann::json to_json() const;
  std::string table() const;
};

/// Scores hypothesis plans against references over the matching collections.
MetricReport evaluate_plans(const std::vector<Plan>& hyps, const std::vector<Plan>& refs,
                            const std::vector<PhraseCollection>& collections);

/// Whitespace tokenization for text-level BLEU.
Tokens tokenize_text(const std::string& text);

}  // namespace ggp
