#pragma once

#include <vector>

#include "bevllm/autograd.hpp"
#include "bevllm/rng.hpp"

namespace bevllm {

/// Projection weights for one multi-head attention block. Weights are
/// stored input-major (in x out) so activations compose as y = x*W + b.
struct AttentionParams {
  ag::Var wq, bq, wk, bk, wv, bv, wo, bo;

  static AttentionParams init(int query_in, int kv_in, int d_model, Rng& rng, double init_scale);
};

/// Captures attention probability matrices (post-softmax) for inspection.
struct AttentionProbe {
  std::vector<ag::Mat> probabilities;
};

ag::Var linear(const ag::Var& x, const ag::Var& w, const ag::Var& b);

/// Lower-triangular additive mask: 0 where position i may attend j (j <= i),
/// a large negative number elsewhere.
ag::Mat causal_mask(Eigen::Index n);

inline constexpr double kMaskNegative = -1e30;

/// Scaled dot-product attention over pre-projected q/k/v, split into
/// `num_heads` column blocks. `mask` (rows(q) x rows(k)) is additive and
/// may be empty.
ag::Var multi_head_attention_qkv(const ag::Var& q, const ag::Var& k, const ag::Var& v,
                                 const ag::Var& wo, const ag::Var& bo, int num_heads,
                                 const ag::Mat& mask = ag::Mat(),
                                 AttentionProbe* probe = nullptr);

/// Full block: projects x_q/x_kv through the params, attends, projects out.
ag::Var multi_head_attention(const ag::Var& x_q, const ag::Var& x_kv,
                             const AttentionParams& params, int num_heads,
                             const ag::Mat& mask = ag::Mat(), AttentionProbe* probe = nullptr);

}  // namespace bevllm
