#pragma once

// Building blocks shared by the encoder and decoder.

#include <cstddef>
#include <string>
#include <vector>

#include "jointgt/tensor.hpp"

namespace jointgt {

struct AttentionMask {
  // true = key is padding; empty means no padding.
  const std::vector<bool>* key_padding = nullptr;
  // Query i may only see keys j <= i.
  bool causal = false;
};

// Scaled dot-product attention with num_heads heads, using
// <prefix>.wq/.wk/.wv/.wo from params. If weights is non-null, the per-head
// attention matrices (queries x keys) are appended to it.
Tensor multi_head_attention(const Tensor& queries, const Tensor& keys_values, const ParamStore& params,
                            const std::string& prefix, std::size_t num_heads, const AttentionMask& mask,
                            std::vector<Tensor>* weights = nullptr);

// GELU MLP using <prefix>.w1/.b1/.w2/.b2.
Tensor feed_forward(const Tensor& x, const ParamStore& params, const std::string& prefix);

// <prefix>.g / <prefix>.b
Tensor layer_norm(const Tensor& x, const ParamStore& params, const std::string& prefix);

}  // namespace jointgt
