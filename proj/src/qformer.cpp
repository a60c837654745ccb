#include "bevllm/qformer.hpp"

#include <stdexcept>

namespace bevllm {

using ag::Var;

void QFormerConfig::validate() const {
  if (num_queries <= 0) throw std::invalid_argument("qformer: num_queries must be positive");
  if (num_layers <= 0) throw std::invalid_argument("qformer: num_layers must be positive");
  if (d_q <= 0 || num_heads <= 0 || d_q % num_heads != 0) {
    throw std::invalid_argument("qformer: d_q must be divisible by num_heads");
  }
  if (cross_attention_every <= 0) {
    throw std::invalid_argument("qformer: cross_attention_every must be positive");
  }
  if (input_channels <= 0) throw std::invalid_argument("qformer: input_channels must be positive");
  if (vocab_size <= 0) throw std::invalid_argument("qformer: vocab_size must be positive");
  if (max_text_len <= 0) throw std::invalid_argument("qformer: max_text_len must be positive");
}

QFormerConfig QFormerConfig::from_pipeline(const PipelineConfig& p) {
  QFormerConfig c;
  c.num_queries = p.num_queries;
  c.d_q = p.d_q;
  c.num_layers = p.qformer_layers;
  c.num_heads = p.qformer_heads;
  c.cross_attention_every = p.cross_attention_every;
  c.input_channels = p.bev_channels;
  c.vocab_size = p.vocab_capacity;
  c.max_text_len = p.max_text_len;
  c.seed = p.seed;
  return c;
}

QFormerState QFormerState::init(const QFormerConfig& config) {
  config.validate();
  if (!config.pretrained.empty()) {
    throw std::invalid_argument("qformer: external pretrained weights are not bundled; "
                                "leave 'pretrained' empty for seeded initialization");
  }
  Rng rng(config.seed);
  const int d = config.d_q;
  const double s = config.init_scale;

  QFormerState state;
  state.config = config;
  state.query_bank = ag::param(rng.normal_matrix(config.num_queries, d, s));
  state.input_proj_w = ag::param(rng.normal_matrix(config.input_channels, d, s));
  state.input_proj_b = ag::param(ag::Mat::Zero(1, d));
  state.tok_emb = ag::param(rng.normal_matrix(config.vocab_size, d, s));

  state.layers.reserve(static_cast<size_t>(config.num_layers));
  for (int l = 0; l < config.num_layers; ++l) {
    QFormerLayer layer;
    layer.ln_self_g = ag::param(ag::Mat::Ones(1, d));
    layer.ln_self_b = ag::param(ag::Mat::Zero(1, d));
    layer.self_attn = AttentionParams::init(d, d, d, rng, s);
    layer.has_cross = (l % config.cross_attention_every) == 0;
    if (layer.has_cross) {
      layer.ln_cross_g = ag::param(ag::Mat::Ones(1, d));
      layer.ln_cross_b = ag::param(ag::Mat::Zero(1, d));
      layer.cross_attn = AttentionParams::init(d, d, d, rng, s);
    }
    layer.ln_ffn_g = ag::param(ag::Mat::Ones(1, d));
    layer.ln_ffn_b = ag::param(ag::Mat::Zero(1, d));
    layer.ffn_w1 = ag::param(rng.normal_matrix(d, 4 * d, s));
    layer.ffn_b1 = ag::param(ag::Mat::Zero(1, 4 * d));
    layer.ffn_w2 = ag::param(rng.normal_matrix(4 * d, d, s));
    layer.ffn_b2 = ag::param(ag::Mat::Zero(1, d));
    state.layers.push_back(std::move(layer));
  }
  state.final_ln_g = ag::param(ag::Mat::Ones(1, d));
  state.final_ln_b = ag::param(ag::Mat::Zero(1, d));
  state.match_w = ag::param(rng.normal_matrix(2 * d, 1, s));
  state.match_b = ag::param(ag::Mat::Zero(1, 1));

  state.text_pos.resize(config.max_text_len, d);
  for (int p = 0; p < config.max_text_len; ++p) {
    state.text_pos.row(p) = sinusoidal_position_vector(p, d).transpose();
  }
  return state;
}

std::vector<std::pair<std::string, Var>> QFormerState::parameters() {
  std::vector<std::pair<std::string, Var>> out;
  auto put = [&out](const std::string& name, const Var& v) { out.emplace_back(name, v); };
  put("query_bank", query_bank);
  put("input_proj.w", input_proj_w);
  put("input_proj.b", input_proj_b);
  put("tok_emb", tok_emb);
  for (size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layers." + std::to_string(l) + ".";
    auto& layer = layers[l];
    put(p + "ln_self.g", layer.ln_self_g);
    put(p + "ln_self.b", layer.ln_self_b);
    auto put_attn = [&put](const std::string& prefix, AttentionParams& a) {
      put(prefix + "wq", a.wq); put(prefix + "bq", a.bq);
      put(prefix + "wk", a.wk); put(prefix + "bk", a.bk);
      put(prefix + "wv", a.wv); put(prefix + "bv", a.bv);
      put(prefix + "wo", a.wo); put(prefix + "bo", a.bo);
    };
    put_attn(p + "self.", layer.self_attn);
    if (layer.has_cross) {
      put(p + "ln_cross.g", layer.ln_cross_g);
      put(p + "ln_cross.b", layer.ln_cross_b);
      put_attn(p + "cross.", layer.cross_attn);
    }
    put(p + "ln_ffn.g", layer.ln_ffn_g);
    put(p + "ln_ffn.b", layer.ln_ffn_b);
    put(p + "ffn.w1", layer.ffn_w1);
    put(p + "ffn.b1", layer.ffn_b1);
    put(p + "ffn.w2", layer.ffn_w2);
    put(p + "ffn.b2", layer.ffn_b2);
  }
  put("final_ln.g", final_ln_g);
  put("final_ln.b", final_ln_b);
  put("match.w", match_w);
  put("match.b", match_b);
  return out;
}

std::int64_t QFormerState::parameter_count() const {
  std::int64_t n = 0;
  for (auto& [name, v] : const_cast<QFormerState*>(this)->parameters()) {
    n += static_cast<std::int64_t>(v->value.size());
  }
  return n;
}

Var QFormerState::run_layers(Var x, const Var* memory, const ag::Mat& self_mask,
                             AttentionProbe* probe) const {
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    {
      const Var normed = ag::layer_norm_rows(x, layer.ln_self_g, layer.ln_self_b);
      x = ag::add(x, multi_head_attention(normed, normed, layer.self_attn, config.num_heads,
                                          self_mask, probe));
    }
    if (layer.has_cross && memory != nullptr) {
      const Var normed = ag::layer_norm_rows(x, layer.ln_cross_g, layer.ln_cross_b);
      x = ag::add(x, multi_head_attention(normed, *memory, layer.cross_attn, config.num_heads,
                                          ag::Mat(), probe));
    }
    {
      const Var normed = ag::layer_norm_rows(x, layer.ln_ffn_g, layer.ln_ffn_b);
      const Var hidden = ag::gelu(linear(normed, layer.ffn_w1, layer.ffn_b1));
      x = ag::add(x, linear(hidden, layer.ffn_w2, layer.ffn_b2));
    }
    if (!x->value.allFinite()) {
      throw std::runtime_error("qformer: non-finite activations after layer " + std::to_string(l));
    }
  }
  return ag::layer_norm_rows(x, final_ln_g, final_ln_b);
}

Var QFormerState::encode_bev(const BevFeatureMap& features, AttentionProbe* probe) const {
  features.validate();
  if (features.channels != config.input_channels) {
    throw std::invalid_argument("encode_bev: feature channels " +
                                std::to_string(features.channels) +
                                " do not match the input projection (" +
                                std::to_string(config.input_channels) + ")");
  }
  // Cells become attention keys/values: (H*W) x C, bridged to d_q once.
  const Var cells = ag::constant(features.values.transpose());
  const Var memory = linear(cells, input_proj_w, input_proj_b);
  const Var out = run_layers(query_bank, &memory, ag::Mat(), probe);
  if (!out->value.allFinite()) {
    throw std::runtime_error("encode_bev: non-finite activations in output");
  }
  return out;
}

QFormerState::TextEncoding QFormerState::encode_text(const std::vector<int>& token_ids,
                                                     int valid_len,
                                                     AttentionProbe* probe) const {
  if (token_ids.empty()) throw std::invalid_argument("encode_text: empty token sequence");
  const int len = static_cast<int>(token_ids.size());
  if (len > config.max_text_len) {
    throw std::invalid_argument("encode_text: sequence length " + std::to_string(len) +
                                " exceeds max_text_len " + std::to_string(config.max_text_len));
  }
  if (valid_len < 0) valid_len = len;
  if (valid_len == 0 || valid_len > len) {
    throw std::invalid_argument("encode_text: invalid valid_len");
  }
  for (const int id : token_ids) {
    if (id < 0 || id >= config.vocab_size) {
      throw std::invalid_argument("encode_text: token id " + std::to_string(id) +
                                  " outside vocabulary of " + std::to_string(config.vocab_size));
    }
  }

  Var x = ag::add(ag::gather_rows(tok_emb, token_ids),
                  ag::constant(text_pos.topRows(len)));
  ag::Mat mask = causal_mask(len);
  for (Eigen::Index i = 0; i < len; ++i) {
    for (Eigen::Index j = valid_len; j < len; ++j) mask(i, j) = kMaskNegative;
  }
  // Padded rows may attend nothing; let them see themselves to keep the
  // softmax well defined. Their states are ignored by contract.
  for (Eigen::Index i = valid_len; i < len; ++i) mask(i, i) = 0.0;

  const Var tokens = run_layers(x, nullptr, mask, probe);
  TextEncoding enc;
  enc.tokens = tokens;
  enc.pooled = ag::slice_rows(tokens, 0, 1);
  return enc;
}

Var QFormerState::btg_logits(const ag::Var& query_states,
                             const std::vector<int>& token_ids) const {
  if (token_ids.empty()) throw std::invalid_argument("btg_logits: empty token sequence");
  const int nq = static_cast<int>(query_states->rows());
  const int len = static_cast<int>(token_ids.size());
  if (len > config.max_text_len) {
    throw std::invalid_argument("btg_logits: sequence exceeds max_text_len");
  }

  const Var text = ag::add(ag::gather_rows(tok_emb, token_ids),
                           ag::constant(text_pos.topRows(len)));
  const Var x = ag::concat_rows({query_states, text});

  // Multimodal causal mask: queries see only queries; text sees every
  // query plus its own causal prefix.
  const int total = nq + len;
  ag::Mat mask = ag::Mat::Zero(total, total);
  for (int i = 0; i < nq; ++i) {
    for (int j = nq; j < total; ++j) mask(i, j) = kMaskNegative;
  }
  for (int i = 0; i < len; ++i) {
    for (int j = i + 1; j < len; ++j) mask(nq + i, nq + j) = kMaskNegative;
  }

  const Var states = run_layers(x, nullptr, mask, nullptr);
  const Var text_states = ag::slice_rows(states, nq, len);
  return ag::matmul(text_states, ag::transpose(tok_emb));
}

Var QFormerState::match_logit(const ag::Var& query_states, const ag::Var& pooled_text) const {
  const Var pooled_queries = ag::colwise_mean(query_states);  // 1 x d_q
  const Var joint = ag::concat_cols({pooled_queries, pooled_text});
  return linear(joint, match_w, match_b);  // 1 x 1
}

void QFormerState::save(TensorContainer& container, const std::string& prefix) const {
  for (auto& [name, v] : const_cast<QFormerState*>(this)->parameters()) {
    container.tensors[prefix + name] = NamedTensor::from_matrix(v->value);
  }
}

void QFormerState::load(const TensorContainer& container, const std::string& prefix) {
  for (auto& [name, v] : parameters()) {
    const ag::Mat m = container.at(prefix + name).as_matrix();
    if (m.rows() != v->value.rows() || m.cols() != v->value.cols()) {
      throw std::invalid_argument("qformer load: '" + name + "' has shape " +
                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                  ", expected " + std::to_string(v->value.rows()) + "x" +
                                  std::to_string(v->value.cols()));
    }
    v->value = m;
  }
}

}  // namespace bevllm
