#include "ggp/plan.hpp"

#include <cctype>
#include <string>
#include <unordered_map>

#include "ggp/error.hpp"

namespace ggp {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_on(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == sep) {
      out.push_back(text.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::string normalize_surface(std::string_view text) {
  std::string out;
  for (const auto& tok : split_whitespace(text)) {
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

void check_index(int index, std::size_t n) {
  if (index < 0 || static_cast<std::size_t>(index) >= n) {
    throw Error(ErrorKind::kInvalidPlan, "phrase index " + std::to_string(index) +
                                             " out of range for collection of size " +
                                             std::to_string(n));
  }
}

}  // namespace

KeyPhrase::KeyPhrase(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw Error(ErrorKind::kInvalidCollection, "key phrase has no tokens");
  for (const auto& t : tokens_) {
    if (t.empty()) throw Error(ErrorKind::kInvalidCollection, "key phrase has an empty token");
    if (!surface_.empty()) surface_ += ' ';
    surface_ += t;
  }
}

KeyPhrase KeyPhrase::from_text(std::string_view text) { return KeyPhrase(split_whitespace(text)); }

PhraseCollection::PhraseCollection(std::vector<KeyPhrase> phrases, std::size_t max_phrases)
    : phrases_(std::move(phrases)) {
  if (phrases_.empty()) throw Error(ErrorKind::kInvalidCollection, "phrase collection is empty");
  if (phrases_.size() > max_phrases) {
    throw Error(ErrorKind::kInvalidCollection,
                "phrase collection has " + std::to_string(phrases_.size()) +
                    " phrases; maximum is " + std::to_string(max_phrases));
  }
}

PhraseCollection PhraseCollection::from_surfaces(const std::vector<std::string>& surfaces,
                                                 std::size_t max_phrases) {
  std::vector<KeyPhrase> phrases;
  phrases.reserve(surfaces.size());
  for (const auto& s : surfaces) phrases.push_back(KeyPhrase::from_text(s));
  return PhraseCollection(std::move(phrases), max_phrases);
}

std::vector<std::string> PhraseCollection::surfaces() const {
  std::vector<std::string> out;
  out.reserve(phrases_.size());
  for (const auto& p : phrases_) out.push_back(p.surface());
  return out;
}

std::size_t Plan::slot_count() const {
  std::size_t total = 0;
  for (const auto& g : groups) total += g.size();
  return total;
}

std::vector<int> Plan::flatten() const {
  std::vector<int> out;
  out.reserve(slot_count());
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

void validate_plan(const Plan& plan, const PhraseCollection& collection) {
  if (plan.groups.empty()) throw Error(ErrorKind::kInvalidPlan, "plan has no groups");
  for (const auto& g : plan.groups) {
    if (g.empty()) throw Error(ErrorKind::kEmptyGroup, "plan contains an empty group");
    for (int idx : g) check_index(idx, collection.size());
  }
}

bool is_valid_plan(const Plan& plan, const PhraseCollection& collection) {
  try {
    validate_plan(plan, collection);
    return true;
  } catch (const Error&) {
    return false;
  }
}

Plan parse_plan(std::string_view serialized, const PhraseCollection& collection) {
  std::unordered_map<std::string, std::vector<int>> occurrences;
  for (std::size_t i = 0; i < collection.size(); ++i) {
    occurrences[collection[i].surface()].push_back(static_cast<int>(i));
  }
  std::unordered_map<std::string, std::size_t> consumed;

  Plan plan;
  for (auto group_text : split_on(serialized, ';')) {
    if (split_whitespace(group_text).empty()) {
      throw Error(ErrorKind::kEmptyGroup, "serialized plan has an empty group");
    }
    Group group;
    for (auto phrase_text : split_on(group_text, ',')) {
      std::string surface = normalize_surface(phrase_text);
      auto it = occurrences.find(surface);
      if (it == occurrences.end()) {
        throw Error(ErrorKind::kUnknownPhrase, "phrase not in collection: '" + surface + "'");
      }
      std::size_t& used = consumed[surface];
      const auto& slots = it->second;
      group.push_back(used < slots.size() ? slots[used] : slots.front());
      ++used;
    }
    plan.groups.push_back(std::move(group));
  }
  return plan;
}

std::string serialize_plan(const Plan& plan, const PhraseCollection& collection) {
  validate_plan(plan, collection);
  std::string out;
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    if (g > 0) out += "; ";
    for (std::size_t j = 0; j < plan.groups[g].size(); ++j) {
      if (j > 0) out += ", ";
      out += collection[plan.groups[g][j]].surface();
    }
  }
  return out;
}

std::vector<std::string> linearize_plan(const Plan& plan, const PhraseCollection& collection) {
  validate_plan(plan, collection);
  std::vector<std::string> out;
  out.reserve(plan.slot_count() + plan.groups.size());
  for (std::size_t g = 0; g < plan.groups.size(); ++g) {
    if (g > 0) out.emplace_back(kBoundaryToken);
    for (int idx : plan.groups[g]) out.push_back(collection[idx].surface());
  }
  return out;
}

}  // namespace ggp
