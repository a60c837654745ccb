#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bevllm/attention.hpp"
#include "bevllm/autograd.hpp"
#include "bevllm/config.hpp"
#include "bevllm/pos_encoding.hpp"
#include "bevllm/tensor_io.hpp"

namespace bevllm {

struct QFormerConfig {
  int num_queries = 8;
  int d_q = 32;
  int num_layers = 2;
  int num_heads = 2;
  int cross_attention_every = 1;  // layer stride for cross-attention blocks
  int input_channels = 32;        // C of the (positionally encoded) BEV features
  int vocab_size = 256;
  int max_text_len = 48;
  std::uint64_t seed = 0;
  double init_scale = 0.02;
  std::string pretrained;  // reserved for loading external weights; empty = seeded init

  void validate() const;
  static QFormerConfig from_pipeline(const PipelineConfig& p);
};

struct QFormerLayer {
  ag::Var ln_self_g, ln_self_b;
  AttentionParams self_attn;
  bool has_cross = false;
  ag::Var ln_cross_g, ln_cross_b;
  AttentionParams cross_attn;
  ag::Var ln_ffn_g, ln_ffn_b;
  ag::Var ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

/// Learnable query bank plus the transformer blocks bridging BEV features
/// and text. Pre-LN blocks; the text branch shares the layers, skips
/// cross-attention, and runs causally. Forward passes are pure; training
/// mutates parameters through the optimizer only.
class QFormerState {
 public:
  QFormerConfig config;
  ag::Var query_bank;                 // num_queries x d_q
  ag::Var input_proj_w, input_proj_b; // C -> d_q bridge for BEV keys/values
  ag::Var tok_emb;                    // vocab_size x d_q (tied vocab head for BTG)
  ag::Var match_w, match_b;           // matching head over [query pool ; text pool]
  ag::Var final_ln_g, final_ln_b;
  std::vector<QFormerLayer> layers;
  ag::Mat text_pos;                   // fixed sinusoidal table, max_text_len x d_q

  static QFormerState init(const QFormerConfig& config);

  std::vector<std::pair<std::string, ag::Var>> parameters();
  std::int64_t parameter_count() const;

  /// Compresses a positionally encoded feature map into the refined query
  /// embeddings (num_queries x d_q).
  ag::Var encode_bev(const BevFeatureMap& features, AttentionProbe* probe = nullptr) const;

  struct TextEncoding {
    ag::Var tokens;  // L x d_q contextual states
    ag::Var pooled;  // 1 x d_q (first-token pooling)
  };

  /// Causal text branch. `valid_len` marks trailing padding: padded key
  /// positions receive zero attention weight and do not affect the states
  /// of valid positions.
  TextEncoding encode_text(const std::vector<int>& token_ids, int valid_len = -1,
                           AttentionProbe* probe = nullptr) const;

  /// Grounded-generation logits: text attends to the (already refined)
  /// query states and causally to itself; queries see only each other.
  /// Returns L x vocab logits tied to the token embedding table.
  ag::Var btg_logits(const ag::Var& query_states, const std::vector<int>& token_ids) const;

  /// Binary matching logit for one (query states, pooled text) pair.
  ag::Var match_logit(const ag::Var& query_states, const ag::Var& pooled_text) const;

  void save(TensorContainer& container, const std::string& prefix = "qformer.") const;
  void load(const TensorContainer& container, const std::string& prefix = "qformer.");

 private:
  ag::Var run_layers(ag::Var x, const ag::Var* memory, const ag::Mat& self_mask,
                     AttentionProbe* probe) const;
};

}  // namespace bevllm
