#include "bevllm/config.hpp"

#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace bevllm {

namespace {

std::string axis_name(ForwardAxis a) {
  switch (a) {
    case ForwardAxis::NegRow: return "neg_row";
    case ForwardAxis::PosRow: return "pos_row";
    case ForwardAxis::NegCol: return "neg_col";
    case ForwardAxis::PosCol: return "pos_col";
  }
  throw std::logic_error("unreachable axis");
}

ForwardAxis axis_from_name(const std::string& s) {
  if (s == "neg_row") return ForwardAxis::NegRow;
  if (s == "pos_row") return ForwardAxis::PosRow;
  if (s == "neg_col") return ForwardAxis::NegCol;
  if (s == "pos_col") return ForwardAxis::PosCol;
  throw std::invalid_argument("config: unknown forward axis '" + s + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' expects a number, got '" + v + "'");
  }
}

}  // namespace

PipelineConfig PipelineConfig::toy() {
  PipelineConfig c;
  c.profile = "toy";
  c.grid = GridSpec{4, 4, -1.0, -1.0, ForwardAxis::NegRow, -30.0}.resolved();
  return c;
}

PipelineConfig PipelineConfig::paper_shape() {
  PipelineConfig c;
  c.profile = "paper-shape";
  c.grid = GridSpec{}.resolved();  // 180x180
  c.bev_channels = 512;
  c.num_queries = 512;
  c.d_q = 768;
  c.qformer_layers = 2;
  c.qformer_heads = 12;
  c.d_llm = 2048;
  c.vocab_capacity = 2048;
  return c;
}

PipelineConfig PipelineConfig::profile_by_name(const std::string& name) {
  if (name == "toy") return toy();
  if (name == "paper-shape") return paper_shape();
  throw std::invalid_argument("config: unknown profile '" + name + "' (expected toy|paper-shape)");
}

PipelineConfig PipelineConfig::from_map(const std::map<std::string, std::string>& kv) {
  std::string profile = "toy";
  if (auto it = kv.find("profile"); it != kv.end()) profile = it->second;
  PipelineConfig c = profile_by_name(profile);

  const std::map<std::string, std::function<void(const std::string&, const std::string&)>>
      setters = {
          {"profile", [](const std::string&, const std::string&) {}},
          {"grid.height", [&](const std::string& k, const std::string& v) { c.grid.height = to_int(k, v); }},
          {"grid.width", [&](const std::string& k, const std::string& v) { c.grid.width = to_int(k, v); }},
          {"grid.ego_row", [&](const std::string& k, const std::string& v) { c.grid.ego_row = to_double(k, v); }},
          {"grid.ego_col", [&](const std::string& k, const std::string& v) { c.grid.ego_col = to_double(k, v); }},
          {"grid.forward_axis", [&](const std::string&, const std::string& v) { c.grid.forward_axis = axis_from_name(v); }},
          {"grid.sector_offset_deg", [&](const std::string& k, const std::string& v) { c.grid.sector_offset_deg = to_double(k, v); }},
          {"bev.channels", [&](const std::string& k, const std::string& v) { c.bev_channels = to_int(k, v); }},
          {"qformer.num_queries", [&](const std::string& k, const std::string& v) { c.num_queries = to_int(k, v); }},
          {"qformer.d_q", [&](const std::string& k, const std::string& v) { c.d_q = to_int(k, v); }},
          {"qformer.num_layers", [&](const std::string& k, const std::string& v) { c.qformer_layers = to_int(k, v); }},
          {"qformer.num_heads", [&](const std::string& k, const std::string& v) { c.qformer_heads = to_int(k, v); }},
          {"qformer.cross_attention_every", [&](const std::string& k, const std::string& v) { c.cross_attention_every = to_int(k, v); }},
          {"qformer.vocab_size", [&](const std::string& k, const std::string& v) { c.vocab_capacity = to_int(k, v); }},
          {"qformer.max_text_len", [&](const std::string& k, const std::string& v) { c.max_text_len = to_int(k, v); }},
          {"mlp.hidden", [&](const std::string& k, const std::string& v) { c.mlp_hidden = to_int(k, v); }},
          {"lm.d_llm", [&](const std::string& k, const std::string& v) { c.d_llm = to_int(k, v); }},
          {"lm.num_layers", [&](const std::string& k, const std::string& v) { c.lm_layers = to_int(k, v); }},
          {"lm.num_heads", [&](const std::string& k, const std::string& v) { c.lm_heads = to_int(k, v); }},
          {"lora.rank", [&](const std::string& k, const std::string& v) { c.lora_rank = to_int(k, v); }},
          {"lora.alpha", [&](const std::string& k, const std::string& v) { c.lora_alpha = to_double(k, v); }},
          {"loss.temperature", [&](const std::string& k, const std::string& v) { c.temperature = to_double(k, v); }},
          {"loss.w_btc", [&](const std::string& k, const std::string& v) { c.w_btc = to_double(k, v); }},
          {"loss.w_btg", [&](const std::string& k, const std::string& v) { c.w_btg = to_double(k, v); }},
          {"loss.w_btm", [&](const std::string& k, const std::string& v) { c.w_btm = to_double(k, v); }},
          {"loss.sim_pool",
           [&](const std::string&, const std::string& v) {
             if (v == "max") c.sim_pool = SimilarityPool::Max;
             else if (v == "mean") c.sim_pool = SimilarityPool::Mean;
             else throw std::invalid_argument("config: loss.sim_pool expects max|mean, got '" + v + "'");
           }},
          {"train.caption_supervision",
           [&](const std::string&, const std::string& v) {
             if (v == "lm") c.caption_supervision = CaptionSupervision::Lm;
             else if (v == "qformer_text") c.caption_supervision = CaptionSupervision::QformerText;
             else throw std::invalid_argument(
                 "config: train.caption_supervision expects lm|qformer_text, got '" + v + "'");
           }},
          {"train.steps", [&](const std::string& k, const std::string& v) { c.train_steps = to_int(k, v); }},
          {"train.batch_size", [&](const std::string& k, const std::string& v) { c.batch_size = to_int(k, v); }},
          {"train.learning_rate", [&](const std::string& k, const std::string& v) { c.learning_rate = to_double(k, v); }},
          {"train.dataset_size", [&](const std::string& k, const std::string& v) { c.dataset_size = to_int(k, v); }},
          {"seed", [&](const std::string& k, const std::string& v) { c.seed = static_cast<std::uint64_t>(to_int(k, v)); }},
      };

  for (const auto& [key, value] : kv) {
    auto it = setters.find(key);
    if (it == setters.end()) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    it->second(key, value);
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  " is not key=value: '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!kv.emplace(key, value).second) {
      throw std::invalid_argument("config: duplicate key '" + key + "' at line " +
                                  std::to_string(lineno));
    }
  }
  return from_map(kv);
}

std::map<std::string, std::string> PipelineConfig::to_map() const {
  std::map<std::string, std::string> kv;
  auto put_num = [&kv](const std::string& k, double v) {
    std::ostringstream os;
    os << v;
    kv[k] = os.str();
  };
  kv["profile"] = profile;
  kv["grid.height"] = std::to_string(grid.height);
  kv["grid.width"] = std::to_string(grid.width);
  put_num("grid.ego_row", grid.ego_row);
  put_num("grid.ego_col", grid.ego_col);
  kv["grid.forward_axis"] = axis_name(grid.forward_axis);
  put_num("grid.sector_offset_deg", grid.sector_offset_deg);
  kv["bev.channels"] = std::to_string(bev_channels);
  kv["qformer.num_queries"] = std::to_string(num_queries);
  kv["qformer.d_q"] = std::to_string(d_q);
  kv["qformer.num_layers"] = std::to_string(qformer_layers);
  kv["qformer.num_heads"] = std::to_string(qformer_heads);
  kv["qformer.cross_attention_every"] = std::to_string(cross_attention_every);
  kv["qformer.vocab_size"] = std::to_string(vocab_capacity);
  kv["qformer.max_text_len"] = std::to_string(max_text_len);
  kv["mlp.hidden"] = std::to_string(mlp_hidden);
  kv["lm.d_llm"] = std::to_string(d_llm);
  kv["lm.num_layers"] = std::to_string(lm_layers);
  kv["lm.num_heads"] = std::to_string(lm_heads);
  kv["lora.rank"] = std::to_string(lora_rank);
  put_num("lora.alpha", lora_alpha);
  put_num("loss.temperature", temperature);
  put_num("loss.w_btc", w_btc);
  put_num("loss.w_btg", w_btg);
  put_num("loss.w_btm", w_btm);
  kv["loss.sim_pool"] = sim_pool == SimilarityPool::Max ? "max" : "mean";
  kv["train.caption_supervision"] =
      caption_supervision == CaptionSupervision::Lm ? "lm" : "qformer_text";
  kv["train.steps"] = std::to_string(train_steps);
  kv["train.batch_size"] = std::to_string(batch_size);
  put_num("train.learning_rate", learning_rate);
  kv["train.dataset_size"] = std::to_string(dataset_size);
  kv["seed"] = std::to_string(seed);
  return kv;
}

void PipelineConfig::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("config: cannot write '" + path + "'");
  for (const auto& [k, v] : to_map()) {
    out << k << " = " << v << "\n";
  }
}

void PipelineConfig::validate() const {
  grid.validate();
  if (bev_channels <= 0 || bev_channels % 2 != 0) {
    throw std::invalid_argument("config: bev.channels must be positive and even");
  }
  if (num_queries <= 0) throw std::invalid_argument("config: qformer.num_queries must be positive");
  if (qformer_layers <= 0) throw std::invalid_argument("config: qformer.num_layers must be positive");
  if (d_q <= 0 || qformer_heads <= 0 || d_q % qformer_heads != 0) {
    throw std::invalid_argument("config: qformer.d_q must be divisible by qformer.num_heads");
  }
  if (cross_attention_every <= 0) {
    throw std::invalid_argument("config: qformer.cross_attention_every must be positive");
  }
  if (vocab_capacity <= 8) throw std::invalid_argument("config: qformer.vocab_size too small");
  if (max_text_len <= 0) throw std::invalid_argument("config: qformer.max_text_len must be positive");
  if (d_llm <= 0 || lm_heads <= 0 || d_llm % lm_heads != 0) {
    throw std::invalid_argument("config: lm.d_llm must be divisible by lm.num_heads");
  }
  if (lm_layers <= 0) throw std::invalid_argument("config: lm.num_layers must be positive");
  if (lora_rank <= 0) throw std::invalid_argument("config: lora.rank must be positive");
  if (temperature <= 0.0) throw std::invalid_argument("config: loss.temperature must be positive");
  if (batch_size <= 0) throw std::invalid_argument("config: train.batch_size must be positive");
}

}  // namespace bevllm
