#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ggp {

inline constexpr std::size_t kDefaultMaxPhrases = 64;
inline constexpr std::string_view kBoundaryToken = "<SEP>";

/// An atomic input unit: one or more whitespace-free tokens. The surface form
/// (tokens joined by a single space) is the phrase's key in the corpus graph.
class KeyPhrase {
 public:
  explicit KeyPhrase(std::vector<std::string> tokens);

  /// Splits on runs of whitespace.
  static KeyPhrase from_text(std::string_view text);

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& surface() const { return surface_; }

  friend bool operator==(const KeyPhrase& a, const KeyPhrase& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::string surface_;
};

/// The input collection. A phrase's position is its identity everywhere downstream.
class PhraseCollection {
 public:
  explicit PhraseCollection(std::vector<KeyPhrase> phrases,
                            std::size_t max_phrases = kDefaultMaxPhrases);

  static PhraseCollection from_surfaces(const std::vector<std::string>& surfaces,
                                        std::size_t max_phrases = kDefaultMaxPhrases);

  std::size_t size() const { return phrases_.size(); }
  const KeyPhrase& operator[](std::size_t i) const { return phrases_[i]; }
  const std::vector<KeyPhrase>& phrases() const { return phrases_; }
  std::vector<std::string> surfaces() const;

 private:
  std::vector<KeyPhrase> phrases_;
};

using Group = std::vector<int>;

/// Ordered groups of phrase indices; each group plans one sentence. Indices may repeat.
struct Plan {
  std::vector<Group> groups;

  std::size_t slot_count() const;
  /// Phrase indices in plan order with group structure dropped.
  std::vector<int> flatten() const;

  friend bool operator==(const Plan&, const Plan&) = default;
};

/// Throws kInvalidPlan / kEmptyGroup when `plan` does not fit `collection`.
void validate_plan(const Plan& plan, const PhraseCollection& collection);
bool is_valid_plan(const Plan& plan, const PhraseCollection& collection);

/// Parses "a, b; c" into groups. Duplicate surfaces resolve left to right onto
/// their earliest unused occurrence, then onto the earliest occurrence.
Plan parse_plan(std::string_view serialized, const PhraseCollection& collection);

std::string serialize_plan(const Plan& plan, const PhraseCollection& collection);

/// One token per phrase slot, with kBoundaryToken between groups.
std::vector<std::string> linearize_plan(const Plan& plan, const PhraseCollection& collection);

struct Sample {
  PhraseCollection collection;
  std::optional<Plan> plan;
  std::optional<std::string> text;
};

}  // namespace ggp
