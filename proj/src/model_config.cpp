#include "ggp/model_config.hpp"

#include <string>

#include "ggp/error.hpp"

namespace ggp {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::kConfigInvalid, msg); };
  if (d <= 0 || layers <= 0 || heads <= 0 || ffn_mult <= 0) fail("model dimensions must be positive");
  if (gat_layers <= 0 || gat_heads <= 0) fail("GAT dimensions must be positive");
  if (d % heads != 0) fail("heads must divide d");
  if (d % gat_heads != 0) fail("gat_heads must divide d");
  if (max_phrase_len <= 0 || max_phrases <= 0 || max_decode_steps <= 1) fail("length limits must be positive");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"d", c.d},
                     {"layers", c.layers},
                     {"heads", c.heads},
                     {"ffn_mult", c.ffn_mult},
                     {"gat_layers", c.gat_layers},
                     {"gat_heads", c.gat_heads},
                     {"max_phrase_len", c.max_phrase_len},
                     {"max_phrases", c.max_phrases},
                     {"max_decode_steps", c.max_decode_steps},
                     {"use_graph", c.use_graph},
                     {"use_copy_decoder", c.use_copy_decoder},
                     {"edge_bias", c.edge_bias},
                     {"collection_positions", c.collection_positions}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("d", c.d);
  get("layers", c.layers);
  get("heads", c.heads);
  get("ffn_mult", c.ffn_mult);
  get("gat_layers", c.gat_layers);
  get("gat_heads", c.gat_heads);
  get("max_phrase_len", c.max_phrase_len);
  get("max_phrases", c.max_phrases);
  get("max_decode_steps", c.max_decode_steps);
  get("use_graph", c.use_graph);
  get("use_copy_decoder", c.use_copy_decoder);
  get("edge_bias", c.edge_bias);
  get("collection_positions", c.collection_positions);
}

}  // namespace ggp
