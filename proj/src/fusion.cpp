#include "ggp/fusion.hpp"

#include "ggp/error.hpp"

namespace ggp {

Fusion::Fusion(ad::ParameterStore& store, const ModelConfig& config, std::mt19937_64& rng)
    : use_graph_(config.use_graph), d_(config.d) {
  const int in = use_graph_ ? 2 * config.d : config.d;
  hidden_ = nn::Linear::create(store, "fusion.hidden", in, config.d, rng);
  out_ = nn::Linear::create(store, "fusion.out", config.d, config.d, rng);
}

ad::Var Fusion::fuse(ad::Tape& tape, const ad::ParameterStore& store, std::optional<ad::Var> graph_repr,
                     ad::Var seq_repr) const {
  if (seq_repr.cols() != d_) throw Error(ErrorKind::kShapeMismatch, "sequential representation must be n x d");
  ad::Var input = seq_repr;
  if (use_graph_) {
    if (!graph_repr) throw Error(ErrorKind::kShapeMismatch, "fusion needs the graph representation");
    if (graph_repr->rows() != seq_repr.rows() || graph_repr->cols() != d_) {
      throw Error(ErrorKind::kShapeMismatch, "graph and sequential representations differ in shape");
    }
    input = ad::concat_cols({*graph_repr, seq_repr});
  }
  return out_(tape, store, ad::gelu(hidden_(tape, store, input)));
}

}  // namespace ggp
