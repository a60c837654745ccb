#pragma once

#include <vector>

#include "bevllm/autograd.hpp"
#include "bevllm/config.hpp"

namespace bevllm {

struct LossWeights {
  double btc = 1.0;
  double btg = 1.0;
  double btm = 1.0;
};

/// One training batch for the threefold alignment objective. Text masks
/// are prefix-monotone (padding only at the end).
struct AlignmentBatch {
  std::vector<ag::Var> query_embeddings;       // B entries, each num_queries x d_q
  ag::Var pooled_text;                         // B x d_q
  std::vector<std::vector<int>> text_token_ids;
  std::vector<std::vector<int>> text_mask;     // 1 = real token, 0 = pad
  std::vector<int> match_labels;
  double temperature = 0.07;
  LossWeights weights;
  SimilarityPool sim_pool = SimilarityPool::Max;

  int batch_size() const { return static_cast<int>(query_embeddings.size()); }
  void validate() const;
};

/// Symmetric InfoNCE over the BxB similarity matrix
/// s[i][j] = pool_q cos(query_embeddings[i][q], pooled_text[j]) / temperature.
ag::Var btc_loss(const AlignmentBatch& batch);

/// Pairwise similarity matrix used by BTC (before temperature scaling);
/// exposed for calibration tests.
ag::Var btc_similarity(const AlignmentBatch& batch);

/// Mean token cross-entropy over unmasked positions. `logits` holds one
/// L x V matrix per batch row (produced under the multimodal causal mask).
ag::Var btg_loss(const std::vector<ag::Var>& logits, const std::vector<std::vector<int>>& targets,
                 const std::vector<std::vector<int>>& mask);

/// Mean binary cross-entropy with logits.
ag::Var btm_loss(const ag::Var& match_logits, const std::vector<int>& labels);

struct CombinedLoss {
  ag::Var total;
  double btc = 0.0;
  double btg = 0.0;
  double btm = 0.0;
};

CombinedLoss combined_loss(const AlignmentBatch& batch, const std::vector<ag::Var>& btg_logits,
                           const ag::Var& match_logits);

}  // namespace bevllm
