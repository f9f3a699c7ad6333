#include <doctest.h>

#include <random>

#include "ggp/error.hpp"
#include "ggp/seq_encoder.hpp"
#include "test_util.hpp"

using namespace ggp;

namespace {

struct Fixture {
  ModelConfig config = testing::tiny_config();
  ad::ParameterStore store;
  std::mt19937_64 rng{3};
  SequentialEncoder enc;

  explicit Fixture(bool positions = true) {
    config.collection_positions = positions;
    enc = SequentialEncoder(store, config, 12, rng);
  }

  Matrix phrase(std::vector<int> ids) {
    ad::Tape t(false);
    return enc.encode_phrase(t, store, ids).value();
  }

  Matrix collection(const Matrix& p) {
    ad::Tape t(false);
    return enc.encode_collection(t, store, t.constant(p)).value();
  }
};

}  // namespace

TEST_CASE("vocabulary") {
  const std::vector<Sample> corpus{
      Sample{PhraseCollection::from_surfaces({"pure cotton", "skirt"}), std::nullopt, std::nullopt}};
  const auto v = TokenVocab::from_corpus(corpus);
  CHECK(v.tokens() == std::vector<std::string>{"cotton", "pure", "skirt"});
  CHECK(v.id("cotton") == 2);
  CHECK(v.id("denim") == TokenVocab::kUnk);
  CHECK(v.encode(corpus[0].collection, 4) == std::vector<std::vector<int>>{{3, 2}, {4}});
  CHECK_THROWS_AS(v.encode(corpus[0].collection, 1), Error);
}

TEST_CASE("phrase vector shape") {
  Fixture f;
  const Matrix p = f.phrase({2, 5, 7});
  CHECK(p.rows() == 1);
  CHECK(p.cols() == f.config.d);
  CHECK(p.allFinite());
}

TEST_CASE("batched phrases equal separate passes") {
  Fixture f;
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<int>> ids(1 + rng() % 5);
    for (auto& p : ids) {
      p.resize(1 + rng() % 4);
      for (int& t : p) t = 1 + static_cast<int>(rng() % 11);
    }
    ad::Tape t(false);
    const Matrix all = f.enc.encode_phrases(t, f.store, ids).value();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      CHECK((all.row(static_cast<Eigen::Index>(i)) - f.phrase(ids[i])).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("token order matters") {
  Fixture f;
  CHECK((f.phrase({2, 5, 7}) - f.phrase({7, 5, 2})).norm() > 1e-6);
}

TEST_CASE("single phrase collection depends only on itself") {
  Fixture f;
  const Matrix p = f.phrase({3});
  CHECK(f.collection(p).isApprox(f.collection(p)));
  CHECK((f.collection(p) - f.collection(2.0 * p)).norm() > 1e-9);
}

TEST_CASE("every phrase sees every other") {
  Fixture f;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Matrix p(4, f.config.d);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = g(rng);
  const Matrix base = f.collection(p);
  for (Eigen::Index j = 0; j < p.rows(); ++j) {
    Matrix q = p;
    q(j, 0) += 0.5;
    const Matrix moved = f.collection(q);
    for (Eigen::Index t = 0; t < p.rows(); ++t) CHECK((moved.row(t) - base.row(t)).norm() > 1e-9);
  }
}

TEST_CASE("identical inputs without positions give identical rows") {
  Fixture f(false);
  const Matrix p = f.phrase({2, 4}).replicate(3, 1);
  const Matrix c = f.collection(p);
  for (Eigen::Index t = 1; t < 3; ++t) CHECK((c.row(t) - c.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}
