#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ggp/corpus.hpp"
#include "ggp/error.hpp"

using namespace ggp;

namespace {

std::string error_message(auto&& fn, ErrorKind* kind = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (kind) *kind = e.kind();
    return e.what();
  }
  FAIL("no error raised");
  return {};
}

}  // namespace

TEST_CASE("json line round trip") {
  const std::string line = R"({"phrases":["pure cotton","skirt"],"plan":[[1,0]],"text":"A skirt."})";
  const Sample s = sample_from_json_line(line);
  CHECK(s.collection.size() == 2);
  REQUIRE(s.plan);
  CHECK(*s.plan == Plan{{{1, 0}}});
  CHECK(*s.text == "A skirt.");
  CHECK(sample_to_json_line(s) == line);
}

TEST_CASE("plan and text are optional") {
  const Sample s = sample_from_json_line(R"({"phrases":["a"]})");
  CHECK_FALSE(s.plan);
  CHECK_FALSE(s.text);
  CHECK(sample_to_json_line(s) == R"({"phrases":["a"]})");
}

TEST_CASE("malformed lines report their line number") {
  std::istringstream in("{\"phrases\":[\"a\"]}\n\n{\"phrases\":[\"a\"],\"plan\":[[1]]}\n");
  ErrorKind kind{};
  const std::string msg = error_message([&] { read_corpus(in); }, &kind);
  CHECK(kind == ErrorKind::kInvalidPlan);
  CHECK(msg.find("line 3") != std::string::npos);

  std::istringstream bad("{\"phrases\":[\"a\"]}\nnot json\n");
  CHECK(error_message([&] { read_corpus(bad); }, &kind).find("line 2") != std::string::npos);
  CHECK(kind == ErrorKind::kFormat);
}

TEST_CASE("schema violations") {
  ErrorKind kind{};
  error_message([] { sample_from_json_line(R"({"plan":[[0]]})"); }, &kind);
  CHECK(kind == ErrorKind::kFormat);
  error_message([] { sample_from_json_line(R"({"phrases":["a"],"plan":[[]]})"); }, &kind);
  CHECK(kind == ErrorKind::kEmptyGroup);
  error_message([] { sample_from_json_line(R"({"phrases":[]})"); }, &kind);
  CHECK(kind == ErrorKind::kInvalidCollection);
}

TEST_CASE("files") {
  const auto dir = std::filesystem::temp_directory_path() / "ggp_test_corpus";
  std::filesystem::create_directories(dir);
  std::vector<Sample> corpus;
  corpus.push_back(sample_from_json_line(R"({"phrases":["a","b"],"plan":[[0],[1]]})"));
  corpus.push_back(sample_from_json_line(R"({"phrases":["c"],"plan":[[0,0]]})"));
  write_corpus(dir / "c.jsonl", corpus);
  const auto back = read_corpus(dir / "c.jsonl");
  REQUIRE(back.size() == 2);
  CHECK(*back[1].plan == Plan{{{0, 0}}});

  write_plan_file(dir / "p.txt", {Plan{{{1, 0}}}, Plan{{{0}}}}, corpus);
  std::ifstream in(dir / "p.txt");
  std::string l1, l2;
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK(l1 == "b, a");
  CHECK(l2 == "c");
  CHECK(read_plan_file(dir / "p.txt", corpus) == std::vector<Plan>{Plan{{{1, 0}}}, Plan{{{0}}}});

  ErrorKind kind{};
  error_message([&] { read_corpus(dir / "missing.jsonl"); }, &kind);
  CHECK(kind == ErrorKind::kFileNotFound);
  std::ofstream(dir / "short.txt") << "b, a\n";
  error_message([&] { read_plan_file(dir / "short.txt", corpus); }, &kind);
  CHECK(kind == ErrorKind::kFormat);
}
