#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ggp/plan.hpp"

namespace ggp {

// JSON Lines corpus: one sample per line,
//   {"phrases": ["...", ...], "plan": [[int, ...], ...], "text": "..."}
// with "plan" and "text" optional.

Sample sample_from_json_line(const std::string& line, std::size_t max_phrases = kDefaultMaxPhrases);
std::string sample_to_json_line(const Sample& sample);

/// Blank lines are skipped; malformed lines raise kFormat naming the 1-based line number.
std::vector<Sample> read_corpus(std::istream& in, std::size_t max_phrases = kDefaultMaxPhrases);
std::vector<Sample> read_corpus(const std::filesystem::path& path,
                                std::size_t max_phrases = kDefaultMaxPhrases);

void write_corpus(std::ostream& out, const std::vector<Sample>& samples);
void write_corpus(const std::filesystem::path& path, const std::vector<Sample>& samples);

/// Plan files hold one serialized plan per line, aligned with a corpus.
std::vector<Plan> read_plan_file(const std::filesystem::path& path,
                                 const std::vector<Sample>& corpus);
void write_plan_file(const std::filesystem::path& path, const std::vector<Plan>& plans,
                     const std::vector<Sample>& corpus);

}  // namespace ggp
