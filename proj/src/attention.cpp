#include "bevllm/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace bevllm {

using ag::Var;

AttentionParams AttentionParams::init(int query_in, int kv_in, int d_model, Rng& rng,
                                      double init_scale) {
  AttentionParams p;
  p.wq = ag::param(rng.normal_matrix(query_in, d_model, init_scale));
  p.bq = ag::param(ag::Mat::Zero(1, d_model));
  p.wk = ag::param(rng.normal_matrix(kv_in, d_model, init_scale));
  p.bk = ag::param(ag::Mat::Zero(1, d_model));
  p.wv = ag::param(rng.normal_matrix(kv_in, d_model, init_scale));
  p.bv = ag::param(ag::Mat::Zero(1, d_model));
  p.wo = ag::param(rng.normal_matrix(d_model, d_model, init_scale));
  p.bo = ag::param(ag::Mat::Zero(1, d_model));
  return p;
}

Var linear(const ag::Var& x, const ag::Var& w, const ag::Var& b) {
  return ag::add_rowvec(ag::matmul(x, w), b);
}

ag::Mat causal_mask(Eigen::Index n) {
  ag::Mat m = ag::Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) m(i, j) = kMaskNegative;
  }
  return m;
}

Var multi_head_attention_qkv(const Var& q, const Var& k, const Var& v, const Var& wo,
                             const Var& bo, int num_heads, const ag::Mat& mask,
                             AttentionProbe* probe) {
  const Eigen::Index d_model = q->cols();
  if (k->cols() != d_model || v->cols() != d_model) {
    throw std::invalid_argument("attention: q/k/v width mismatch");
  }
  if (num_heads <= 0 || d_model % num_heads != 0) {
    throw std::invalid_argument("attention: width " + std::to_string(d_model) +
                                " not divisible by " + std::to_string(num_heads) + " heads");
  }
  const Eigen::Index d_head = d_model / num_heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(d_head));

  std::vector<Var> head_outputs;
  head_outputs.reserve(static_cast<size_t>(num_heads));
  for (int h = 0; h < num_heads; ++h) {
    const Var qh = ag::slice_cols(q, h * d_head, d_head);
    const Var kh = ag::slice_cols(k, h * d_head, d_head);
    const Var vh = ag::slice_cols(v, h * d_head, d_head);
    const Var scores = ag::scale(ag::matmul(qh, ag::transpose(kh)), inv_scale);
    const Var probs = ag::softmax_rows(scores, mask);
    if (probe) probe->probabilities.push_back(probs->value);
    head_outputs.push_back(ag::matmul(probs, vh));
  }
  const Var merged = num_heads == 1 ? head_outputs.front() : ag::concat_cols(head_outputs);
  return linear(merged, wo, bo);
}

Var multi_head_attention(const Var& x_q, const Var& x_kv, const AttentionParams& params,
                         int num_heads, const ag::Mat& mask, AttentionProbe* probe) {
  const Var q = linear(x_q, params.wq, params.bq);
  const Var k = linear(x_kv, params.wk, params.bk);
  const Var v = linear(x_kv, params.wv, params.bv);
  return multi_head_attention_qkv(q, k, v, params.wo, params.bo, num_heads, mask, probe);
}

}  // namespace bevllm
