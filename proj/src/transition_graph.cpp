#include "ggp/transition_graph.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "ggp/error.hpp"

namespace ggp {
namespace {

constexpr char kGraphMagic[8] = {'G', 'G', 'P', 'G', 'R', 'A', 'P', 'H'};

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorKind::kFormat, "truncated graph file");
  return value;
}

}  // namespace

TransitionGraph::TransitionGraph(std::vector<std::string> vocab,
                                 std::vector<TransitionTriple> triples)
    : vocab_(std::move(vocab)), rows_(vocab_.size()), out_counts_(vocab_.size(), 0) {
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (i > 0 && !(vocab_[i - 1] < vocab_[i])) {
      throw Error(ErrorKind::kFormat, "graph vocabulary must be sorted and unique");
    }
    ids_.emplace(vocab_[i], static_cast<int>(i));
  }
  std::sort(triples.begin(), triples.end(), [](const auto& a, const auto& b) {
    return std::pair(a.from, a.to) < std::pair(b.from, b.to);
  });
  for (std::size_t k = 0; k < triples.size(); ++k) {
    const auto& t = triples[k];
    if (t.from >= vocab_.size() || t.to >= vocab_.size()) {
      throw Error(ErrorKind::kFormat, "graph triple references an unknown node");
    }
    if (k > 0 && triples[k - 1].from == t.from && triples[k - 1].to == t.to) {
      throw Error(ErrorKind::kFormat, "duplicate graph triple");
    }
    if (t.count == 0) continue;
    rows_[t.from].push_back({static_cast<int>(t.to), t.count, 0.0});
    out_counts_[t.from] += t.count;
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const double total = static_cast<double>(out_counts_[i]);
    for (auto& e : rows_[i]) e.weight = static_cast<double>(e.count) / total;
  }
}

std::optional<int> TransitionGraph::id(std::string_view surface) const {
  auto it = ids_.find(std::string(surface));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

double TransitionGraph::weight(int from, int to) const {
  const auto& r = row(from);
  auto it = std::lower_bound(r.begin(), r.end(), to,
                             [](const TransitionEdge& e, int target) { return e.to < target; });
  return (it != r.end() && it->to == to) ? it->weight : 0.0;
}

std::uint64_t TransitionGraph::count(int from, int to) const {
  const auto& r = row(from);
  auto it = std::lower_bound(r.begin(), r.end(), to,
                             [](const TransitionEdge& e, int target) { return e.to < target; });
  return (it != r.end() && it->to == to) ? it->count : 0;
}

std::vector<TransitionTriple> TransitionGraph::triples() const {
  std::vector<TransitionTriple> out;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (const auto& e : rows_[i]) {
      out.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(e.to), e.count});
    }
  }
  return out;
}

void TransitionGraph::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kFileNotFound, "cannot write " + path.string());
  out.write(kGraphMagic, sizeof(kGraphMagic));
  write_pod<std::uint32_t>(out, kGraphFormatVersion);
  write_pod<std::uint64_t>(out, vocab_.size());
  for (const auto& s : vocab_) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  const auto coo = triples();
  write_pod<std::uint64_t>(out, coo.size());
  for (const auto& t : coo) {
    write_pod(out, t.from);
    write_pod(out, t.to);
    write_pod(out, t.count);
  }
}

TransitionGraph TransitionGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kFileNotFound, "cannot open " + path.string());
  char magic[sizeof(kGraphMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kGraphMagic, sizeof(magic)) != 0) {
    throw Error(ErrorKind::kFormat, path.string() + " is not a transition graph file");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kGraphFormatVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                "graph format version " + std::to_string(version) + " is not supported");
  }
  const auto vocab_size = read_pod<std::uint64_t>(in);
  std::vector<std::string> vocab;
  vocab.reserve(vocab_size);
  for (std::uint64_t i = 0; i < vocab_size; ++i) {
    const auto len = read_pod<std::uint32_t>(in);
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) throw Error(ErrorKind::kFormat, "truncated graph file");
    vocab.push_back(std::move(s));
  }
  const auto nnz = read_pod<std::uint64_t>(in);
  std::vector<TransitionTriple> coo;
  coo.reserve(nnz);
  for (std::uint64_t k = 0; k < nnz; ++k) {
    TransitionTriple t{};
    t.from = read_pod<std::uint32_t>(in);
    t.to = read_pod<std::uint32_t>(in);
    t.count = read_pod<std::uint64_t>(in);
    coo.push_back(t);
  }
  return TransitionGraph(std::move(vocab), std::move(coo));
}

void TransitionCounter::add(const Sample& sample) {
  if (!sample.plan) throw Error(ErrorKind::kMissingPlan, "corpus sample has no golden plan");
  validate_plan(*sample.plan, sample.collection);
  for (const auto& p : sample.collection.phrases()) surfaces_.insert(p.surface());
  // Boundaries are skipped: the last phrase of a group links to the first of the next.
  const auto order = sample.plan->flatten();
  for (std::size_t k = 1; k < order.size(); ++k) {
    ++counts_[{sample.collection[order[k - 1]].surface(), sample.collection[order[k]].surface()}];
  }
  ++samples_;
}

void TransitionCounter::merge(const TransitionCounter& other) {
  surfaces_.insert(other.surfaces_.begin(), other.surfaces_.end());
  for (const auto& [key, c] : other.counts_) counts_[key] += c;
  samples_ += other.samples_;
}

TransitionGraph TransitionCounter::finish() const {
  if (samples_ == 0) throw Error(ErrorKind::kEmptyCorpus, "cannot build a graph from an empty corpus");
  std::vector<std::string> vocab(surfaces_.begin(), surfaces_.end());
  std::unordered_map<std::string, std::uint32_t> ids;
  for (std::size_t i = 0; i < vocab.size(); ++i) ids.emplace(vocab[i], static_cast<std::uint32_t>(i));
  std::vector<TransitionTriple> coo;
  coo.reserve(counts_.size());
  for (const auto& [key, c] : counts_) coo.push_back({ids.at(key.first), ids.at(key.second), c});
  return TransitionGraph(std::move(vocab), std::move(coo));
}

TransitionGraph build_transition_graph(const std::vector<Sample>& corpus) {
  TransitionCounter counter;
  for (const auto& s : corpus) counter.add(s);
  return counter.finish();
}

RelationMatrix extract_subgraph(const TransitionGraph& graph, const PhraseCollection& collection) {
  const auto n = static_cast<Eigen::Index>(collection.size());
  std::vector<std::optional<int>> ids;
  ids.reserve(collection.size());
  for (const auto& p : collection.phrases()) ids.push_back(graph.id(p.surface()));

  RelationMatrix rel{Matrix::Zero(n, n), BoolMatrix::Constant(n, n, false)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (ids[i] && ids[j]) rel.weights(i, j) = graph.weight(*ids[i], *ids[j]);
      rel.mask(i, j) = rel.weights(i, j) > 0.0 || i == j;
    }
  }
  return rel;
}

RelationMatrix identity_relation(std::size_t n) {
  const auto size = static_cast<Eigen::Index>(n);
  RelationMatrix rel{Matrix::Zero(size, size), BoolMatrix::Constant(size, size, false)};
  for (Eigen::Index i = 0; i < size; ++i) rel.mask(i, i) = true;
  return rel;
}

}  // namespace ggp
