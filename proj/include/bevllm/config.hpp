#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "bevllm/grid.hpp"

namespace bevllm {

/// Whether BTC pools per-query similarities with max (default) or mean.
enum class SimilarityPool { Max, Mean };

/// Which path supervises caption generation during training.
enum class CaptionSupervision { Lm, QformerText };

/// Flat key=value pipeline configuration. Two built-in profiles: "toy"
/// (CPU-second scale, the training default) and "paper-shape" (the
/// published dimensions, used for shape-contract checks only). Unknown
/// keys are rejected.
struct PipelineConfig {
  std::string profile = "toy";

  GridSpec grid;
  int bev_channels = 32;

  int num_queries = 8;
  int d_q = 32;
  int qformer_layers = 2;
  int qformer_heads = 2;
  int cross_attention_every = 1;
  int vocab_capacity = 256;
  int max_text_len = 48;

  int mlp_hidden = 0;  // 0 means 4 * d_q
  int d_llm = 64;
  int lm_layers = 2;
  int lm_heads = 2;

  int lora_rank = 4;
  double lora_alpha = 8.0;

  double temperature = 0.07;
  double w_btc = 1.0;
  double w_btg = 1.0;
  double w_btm = 1.0;
  SimilarityPool sim_pool = SimilarityPool::Max;
  CaptionSupervision caption_supervision = CaptionSupervision::Lm;

  int train_steps = 200;
  int batch_size = 3;
  double learning_rate = 1e-3;
  int dataset_size = 4;

  std::uint64_t seed = 7;

  static PipelineConfig toy();
  static PipelineConfig paper_shape();
  static PipelineConfig profile_by_name(const std::string& name);

  /// Parses a config file on top of its declared profile's defaults.
  static PipelineConfig from_file(const std::string& path);
  static PipelineConfig from_map(const std::map<std::string, std::string>& kv);

  void save(const std::string& path) const;
  std::map<std::string, std::string> to_map() const;

  int resolved_mlp_hidden() const { return mlp_hidden > 0 ? mlp_hidden : 4 * d_q; }
  void validate() const;
};

}  // namespace bevllm
