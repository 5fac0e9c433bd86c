#include "jointgt/model.hpp"

#include <cmath>
#include <random>

#include "jointgt/errors.hpp"

namespace jointgt {

std::string_view variant_name(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::kJoint: return "joint";
    case EncoderVariant::kSeq: return "seq";
    case EncoderVariant::kRel: return "rel";
  }
  return "joint";
}

EncoderVariant parse_variant(std::string_view name) {
  if (name == "joint") return EncoderVariant::kJoint;
  if (name == "seq") return EncoderVariant::kSeq;
  if (name == "rel") return EncoderVariant::kRel;
  throw ConfigError("unknown encoder variant '" + std::string(name) + "' (joint|seq|rel)");
}

void ModelConfig::validate() const {
  if (vocab_size == 0) throw ConfigError("vocab_size must be positive");
  if (encoder.d_model != decoder.d_model) throw ConfigError("encoder and decoder d_model differ");
  if (encoder.d_model == 0 || encoder.num_heads == 0 || encoder.d_model % encoder.num_heads != 0) {
    throw ConfigError("encoder d_model must be a positive multiple of num_heads");
  }
  if (decoder.num_heads == 0 || decoder.d_model % decoder.num_heads != 0) {
    throw ConfigError("decoder d_model must be a positive multiple of num_heads");
  }
  if (encoder.num_layers == 0 || decoder.num_layers == 0) throw ConfigError("need at least one layer");
  if (encoder.max_input_len == 0 || decoder.max_output_len < 2) {
    throw ConfigError("max_input_len must be >= 1 and max_output_len >= 2");
  }
  if (encoder.d_ff == 0 || decoder.d_ff == 0) throw ConfigError("d_ff must be positive");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {
      {"vocab_size", c.vocab_size},
      {"d_model", c.encoder.d_model},
      {"encoder_layers", c.encoder.num_layers},
      {"encoder_heads", c.encoder.num_heads},
      {"encoder_d_ff", c.encoder.d_ff},
      {"max_input_len", c.encoder.max_input_len},
      {"variant", std::string(variant_name(c.encoder.variant))},
      {"decoder_layers", c.decoder.num_layers},
      {"decoder_heads", c.decoder.num_heads},
      {"decoder_d_ff", c.decoder.d_ff},
      {"max_output_len", c.decoder.max_output_len},
  };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  try {
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.encoder.d_model = c.decoder.d_model = j.at("d_model").get<std::size_t>();
    c.encoder.num_layers = j.at("encoder_layers").get<std::size_t>();
    c.encoder.num_heads = j.at("encoder_heads").get<std::size_t>();
    c.encoder.d_ff = j.at("encoder_d_ff").get<std::size_t>();
    c.encoder.max_input_len = j.at("max_input_len").get<std::size_t>();
    c.encoder.variant = parse_variant(j.at("variant").get<std::string>());
    c.decoder.num_layers = j.at("decoder_layers").get<std::size_t>();
    c.decoder.num_heads = j.at("decoder_heads").get<std::size_t>();
    c.decoder.d_ff = j.at("decoder_d_ff").get<std::size_t>();
    c.decoder.max_output_len = j.at("max_output_len").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace names {

std::string encoder_layer(std::size_t layer) { return "enc.L" + std::to_string(layer) + "."; }
std::string decoder_layer(std::size_t layer) { return "dec.L" + std::to_string(layer) + "."; }

bool is_structure_param(std::string_view name) {
  return name.find(".struct.") != std::string_view::npos || name.rfind("rel.", 0) == 0;
}

}  // namespace names

namespace {

class Initializer {
 public:
  Initializer(ParamStore& store, std::uint64_t seed) : store_(store), rng_(seed) {}

  void normal(const std::string& name, Shape shape, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = dist(rng_);
    store_.add(name, std::move(shape), std::move(values));
  }

  void constant(const std::string& name, Shape shape, double value) {
    std::vector<double> values(shape_numel(shape), value);
    store_.add(name, std::move(shape), std::move(values));
  }

  void layer_norm(const std::string& prefix, std::size_t d) {
    constant(prefix + ".g", {d}, 1.0);
    constant(prefix + ".b", {d}, 0.0);
  }

  void attention(const std::string& prefix, std::size_t d) {
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (const char* w : {".wq", ".wk", ".wv", ".wo"}) normal(prefix + w, {d, d}, s);
  }

  void feed_forward(const std::string& prefix, std::size_t d, std::size_t d_ff) {
    normal(prefix + ".w1", {d, d_ff}, 1.0 / std::sqrt(static_cast<double>(d)));
    constant(prefix + ".b1", {d_ff}, 0.0);
    normal(prefix + ".w2", {d_ff, d}, 1.0 / std::sqrt(static_cast<double>(d_ff)));
    constant(prefix + ".b2", {d}, 0.0);
  }

 private:
  ParamStore& store_;
  std::mt19937_64 rng_;
};

}  // namespace

Model init_model(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Model model{config, {}};
  Initializer init(model.params, seed);
  const std::size_t d = config.d_model();
  const double embed_std = 1.0 / std::sqrt(static_cast<double>(d));

  init.normal(std::string(names::kTokenEmbedding), {config.vocab_size, d}, embed_std);
  init.normal(std::string(names::kEncoderPositions), {config.encoder.max_input_len, d}, embed_std);
  init.normal(std::string(names::kDecoderPositions), {config.decoder.max_output_len, d}, embed_std);

  const bool structured = config.encoder.variant != EncoderVariant::kSeq;
  if (config.encoder.variant == EncoderVariant::kRel) {
    init.normal(std::string(names::kRelEntityEmbedding), {config.vocab_size, d}, embed_std);
    init.normal(std::string(names::kRelRelationEmbedding), {config.vocab_size, d}, embed_std);
  }
  for (std::size_t l = 0; l < config.encoder.num_layers; ++l) {
    const std::string p = names::encoder_layer(l);
    init.layer_norm(p + "ln1", d);
    init.attention(p + "attn", d);
    if (structured) {
      for (const char* w : {"wqs", "wks", "wvs", "wkr", "wvr"}) {
        init.normal(p + "struct." + w, {d, d}, 1.0 / std::sqrt(static_cast<double>(d)));
      }
    }
    init.layer_norm(p + "ln2", d);
    init.feed_forward(p + "ff", d, config.encoder.d_ff);
  }
  init.layer_norm("enc.ln_f", d);

  for (std::size_t l = 0; l < config.decoder.num_layers; ++l) {
    const std::string p = names::decoder_layer(l);
    init.layer_norm(p + "ln1", d);
    init.attention(p + "self", d);
    init.layer_norm(p + "ln2", d);
    init.attention(p + "cross", d);
    init.layer_norm(p + "ln3", d);
    init.feed_forward(p + "ff", d, config.decoder.d_ff);
  }
  init.layer_norm("dec.ln_f", d);
  return model;
}

}  // namespace jointgt
