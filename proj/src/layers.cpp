#include "jointgt/layers.hpp"

#include <cmath>
#include <limits>

#include "jointgt/errors.hpp"

namespace jointgt {

Tensor multi_head_attention(const Tensor& queries, const Tensor& keys_values, const ParamStore& params,
                            const std::string& prefix, std::size_t num_heads, const AttentionMask& mask,
                            std::vector<Tensor>* weights) {
  const std::size_t len_q = queries.dim(0);
  const std::size_t len_k = keys_values.dim(0);
  const std::size_t d = queries.dim(1);
  const std::size_t d_k = d / num_heads;
  if (mask.key_padding != nullptr && !mask.key_padding->empty() && mask.key_padding->size() != len_k) {
    throw ShapeError("attention: padding mask of " + std::to_string(mask.key_padding->size()) +
                     " for " + std::to_string(len_k) + " keys");
  }

  std::vector<bool> blocked(len_q * len_k, false);
  bool any_blocked = false;
  for (std::size_t i = 0; i < len_q; ++i) {
    std::size_t open = 0;
    for (std::size_t j = 0; j < len_k; ++j) {
      const bool padded = mask.key_padding != nullptr && !mask.key_padding->empty() && (*mask.key_padding)[j];
      const bool future = mask.causal && j > i;
      blocked[i * len_k + j] = padded || future;
      any_blocked = any_blocked || padded || future;
      if (!(padded || future)) ++open;
    }
    if (open == 0) throw UsageError("attention: query " + std::to_string(i) + " has no visible key");
  }

  const Tensor q = matmul(queries, params.get(prefix + ".wq"));
  const Tensor k = matmul(keys_values, params.get(prefix + ".wk"));
  const Tensor v = matmul(keys_values, params.get(prefix + ".wv"));
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(d_k));

  std::vector<Tensor> heads;
  heads.reserve(num_heads);
  for (std::size_t h = 0; h < num_heads; ++h) {
    const std::size_t lo = h * d_k, hi = lo + d_k;
    Tensor scores = scale(matmul_nt(slice_cols(q, lo, hi), slice_cols(k, lo, hi)), inv_sqrt_dk);
    if (any_blocked) scores = masked_fill(scores, blocked, -std::numeric_limits<double>::infinity());
    Tensor alpha = softmax(scores, 1);
    if (weights != nullptr) weights->push_back(alpha);
    heads.push_back(matmul(alpha, slice_cols(v, lo, hi)));
  }
  const Tensor joined = num_heads == 1 ? heads[0] : concat(heads, 1);
  return matmul(joined, params.get(prefix + ".wo"));
}

Tensor feed_forward(const Tensor& x, const ParamStore& params, const std::string& prefix) {
  Tensor hidden = gelu(add_row(matmul(x, params.get(prefix + ".w1")), params.get(prefix + ".b1")));
  return add_row(matmul(hidden, params.get(prefix + ".w2")), params.get(prefix + ".b2"));
}

Tensor layer_norm(const Tensor& x, const ParamStore& params, const std::string& prefix) {
  return layer_norm(x, params.get(prefix + ".g"), params.get(prefix + ".b"));
}

}  // namespace jointgt
