#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "jointgt/tensor.hpp"

namespace jointgt {

enum class EncoderVariant {
  kJoint,  // contextual pooling + structure-aware attention in every layer
  kSeq,    // plain Transformer over the linearized graph
  kRel,    // structure-aware attention over learned entity/relation embeddings
};

std::string_view variant_name(EncoderVariant v);
EncoderVariant parse_variant(std::string_view name);

struct EncoderConfig {
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 128;
  std::size_t max_input_len = 600;
  EncoderVariant variant = EncoderVariant::kJoint;

  std::size_t d_k() const { return d_model / num_heads; }
};

struct DecoderConfig {
  std::size_t num_layers = 2;
  std::size_t num_heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 128;
  std::size_t max_output_len = 64;

  std::size_t d_k() const { return d_model / num_heads; }
};

struct ModelConfig {
  std::size_t vocab_size = 0;
  EncoderConfig encoder;
  DecoderConfig decoder;

  std::size_t d_model() const { return encoder.d_model; }
  // Throws ConfigError.
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Model {
  ModelConfig config;
  ParamStore params;
};

// Random initialization, deterministic in seed.
Model init_model(const ModelConfig& config, std::uint64_t seed);

// Parameter naming.
namespace names {
inline constexpr std::string_view kTokenEmbedding = "embed.tokens";
inline constexpr std::string_view kEncoderPositions = "enc.pos";
inline constexpr std::string_view kDecoderPositions = "dec.pos";
inline constexpr std::string_view kRelEntityEmbedding = "rel.entity_embed";
inline constexpr std::string_view kRelRelationEmbedding = "rel.relation_embed";
std::string encoder_layer(std::size_t layer);  // "enc.L<layer>."
std::string decoder_layer(std::size_t layer);  // "dec.L<layer>."
// True for weights that exist only in structure-aware variants.
bool is_structure_param(std::string_view name);
}  // namespace names

}  // namespace jointgt
