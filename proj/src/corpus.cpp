#include "ggp/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "ggp/error.hpp"

namespace ggp {
namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kFileNotFound, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFileNotFound, "cannot write " + path.string());
  return out;
}

bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

Sample sample_from_json_line(const std::string& line, std::size_t max_phrases) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kFormat, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("phrases") || !j["phrases"].is_array()) {
    throw Error(ErrorKind::kFormat, "sample must be an object with a \"phrases\" array");
  }
  std::vector<std::string> surfaces;
  for (const auto& p : j["phrases"]) {
    if (!p.is_string()) throw Error(ErrorKind::kFormat, "phrases must be strings");
    surfaces.push_back(p.get<std::string>());
  }
  Sample sample{PhraseCollection::from_surfaces(surfaces, max_phrases), std::nullopt, std::nullopt};

  if (j.contains("plan") && !j["plan"].is_null()) {
    if (!j["plan"].is_array()) throw Error(ErrorKind::kFormat, "\"plan\" must be an array of arrays");
    Plan plan;
    for (const auto& g : j["plan"]) {
      if (!g.is_array()) throw Error(ErrorKind::kFormat, "\"plan\" groups must be arrays");
      Group group;
      for (const auto& idx : g) {
        if (!idx.is_number_integer()) throw Error(ErrorKind::kFormat, "plan indices must be integers");
        group.push_back(idx.get<int>());
      }
      plan.groups.push_back(std::move(group));
    }
    validate_plan(plan, sample.collection);
    sample.plan = std::move(plan);
  }
  if (j.contains("text") && !j["text"].is_null()) {
    if (!j["text"].is_string()) throw Error(ErrorKind::kFormat, "\"text\" must be a string");
    sample.text = j["text"].get<std::string>();
  }
  return sample;
}

std::string sample_to_json_line(const Sample& sample) {
  json j;
  j["phrases"] = sample.collection.surfaces();
  if (sample.plan) j["plan"] = sample.plan->groups;
  if (sample.text) j["text"] = *sample.text;
  return j.dump();
}

std::vector<Sample> read_corpus(std::istream& in, std::size_t max_phrases) {
  std::vector<Sample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      samples.push_back(sample_from_json_line(line, max_phrases));
    } catch (const Error& e) {
      throw Error(e.kind() == ErrorKind::kFileNotFound ? ErrorKind::kFormat : e.kind(),
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return samples;
}

std::vector<Sample> read_corpus(const std::filesystem::path& path, std::size_t max_phrases) {
  auto in = open_input(path);
  try {
    return read_corpus(in, max_phrases);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void write_corpus(std::ostream& out, const std::vector<Sample>& samples) {
  for (const auto& s : samples) out << sample_to_json_line(s) << '\n';
}

void write_corpus(const std::filesystem::path& path, const std::vector<Sample>& samples) {
  auto out = open_output(path);
  write_corpus(out, samples);
}

std::vector<Plan> read_plan_file(const std::filesystem::path& path,
                                 const std::vector<Sample>& corpus) {
  auto in = open_input(path);
  std::vector<Plan> plans;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (plans.size() >= corpus.size()) {
      if (is_blank(line)) continue;
      throw Error(ErrorKind::kFormat, path.string() + ": more plans than corpus samples");
    }
    try {
      plans.push_back(parse_plan(line, corpus[plans.size()].collection));
    } catch (const Error& e) {
      throw Error(e.kind(), path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (plans.size() != corpus.size()) {
    throw Error(ErrorKind::kFormat, path.string() + ": expected " + std::to_string(corpus.size()) +
                                        " plans, found " + std::to_string(plans.size()));
  }
  return plans;
}

void write_plan_file(const std::filesystem::path& path, const std::vector<Plan>& plans,
                     const std::vector<Sample>& corpus) {
  if (plans.size() != corpus.size()) {
    throw Error(ErrorKind::kShapeMismatch, "plan count does not match corpus size");
  }
  auto out = open_output(path);
  for (std::size_t i = 0; i < plans.size(); ++i) {
    out << serialize_plan(plans[i], corpus[i].collection) << '\n';
  }
}

}  // namespace ggp
