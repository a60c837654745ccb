#include "bevllm/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "tensor container assumes a little-endian host");

namespace bevllm {

namespace {
constexpr char kMagic[4] = {'T', 'N', 'S', '1'};
}

std::string dtype_name(Dtype d) {
  switch (d) {
    case Dtype::f32: return "f32";
    case Dtype::f64: return "f64";
    case Dtype::i32: return "i32";
  }
  throw std::logic_error("unreachable dtype");
}

Dtype dtype_from_name(const std::string& name) {
  if (name == "f32") return Dtype::f32;
  if (name == "f64") return Dtype::f64;
  if (name == "i32") return Dtype::i32;
  throw std::invalid_argument("unknown dtype '" + name + "'");
}

size_t dtype_size(Dtype d) { return d == Dtype::f64 ? 8 : 4; }

std::int64_t NamedTensor::element_count() const {
  std::int64_t n = 1;
  for (auto s : shape) {
    if (s < 0) throw std::invalid_argument("tensor shape has negative extent");
    n *= s;
  }
  return n;
}

NamedTensor NamedTensor::from_matrix(const Eigen::MatrixXd& m, Dtype dtype) {
  NamedTensor t;
  t.dtype = dtype;
  t.shape = {m.rows(), m.cols()};
  const auto n = static_cast<size_t>(m.size());
  t.bytes.resize(n * dtype_size(dtype));
  if (dtype == Dtype::f64) {
    auto* out = reinterpret_cast<double*>(t.bytes.data());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) *out++ = m(r, c);
  } else if (dtype == Dtype::f32) {
    auto* out = reinterpret_cast<float*>(t.bytes.data());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) *out++ = static_cast<float>(m(r, c));
  } else {
    throw std::invalid_argument("from_matrix: use from_i32 for integer tensors");
  }
  return t;
}

NamedTensor NamedTensor::from_i32(const std::vector<std::int32_t>& data,
                                  std::vector<std::int64_t> shape) {
  NamedTensor t;
  t.dtype = Dtype::i32;
  t.shape = std::move(shape);
  if (t.element_count() != static_cast<std::int64_t>(data.size())) {
    throw std::invalid_argument("from_i32: shape does not match data size");
  }
  t.bytes.resize(data.size() * 4);
  std::memcpy(t.bytes.data(), data.data(), t.bytes.size());
  return t;
}

Eigen::MatrixXd NamedTensor::as_matrix() const {
  std::int64_t rows = 1, cols = 1;
  if (shape.size() == 1) {
    rows = shape[0];
  } else if (shape.size() == 2) {
    rows = shape[0];
    cols = shape[1];
  } else if (!shape.empty()) {
    throw std::invalid_argument("as_matrix: rank > 2");
  }
  Eigen::MatrixXd m(rows, cols);
  if (dtype == Dtype::f64) {
    const auto* in = reinterpret_cast<const double*>(bytes.data());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = *in++;
  } else if (dtype == Dtype::f32) {
    const auto* in = reinterpret_cast<const float*>(bytes.data());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = static_cast<double>(*in++);
  } else {
    throw std::invalid_argument("as_matrix: integer tensor");
  }
  return m;
}

std::vector<std::int32_t> NamedTensor::as_i32() const {
  if (dtype != Dtype::i32) throw std::invalid_argument("as_i32: tensor is not i32");
  std::vector<std::int32_t> out(bytes.size() / 4);
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

const NamedTensor& TensorContainer::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) {
    throw std::invalid_argument("tensor container: no tensor named '" + name + "'");
  }
  return it->second;
}

void TensorContainer::save(const std::string& path) const {
  nlohmann::json header;
  nlohmann::json entries = nlohmann::json::object();
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : tensors) {
    const auto expected = static_cast<size_t>(tensor.element_count()) * dtype_size(tensor.dtype);
    if (expected != tensor.byte_size()) {
      throw std::invalid_argument("tensor '" + name + "': payload size does not match shape");
    }
    entries[name] = {{"dtype", dtype_name(tensor.dtype)},
                     {"shape", tensor.shape},
                     {"offset", offset}};
    offset += tensor.byte_size();
  }
  header["tensors"] = entries;
  if (!meta.empty()) header["meta"] = meta;
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  const std::uint64_t header_len = header_str.size();
  out.write(reinterpret_cast<const char*>(&header_len), 8);
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, tensor] : tensors) {
    out.write(reinterpret_cast<const char*>(tensor.bytes.data()),
              static_cast<std::streamsize>(tensor.byte_size()));
  }
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

TensorContainer TensorContainer::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("'" + path + "' is not a tensor container (bad magic)");
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), 8);
  if (!in) throw std::runtime_error("'" + path + "': truncated header length");
  std::string header_str(header_len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("'" + path + "': truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("'" + path + "': header is not valid JSON: " + e.what());
  }

  std::vector<char> payload(std::istreambuf_iterator<char>(in), {});

  TensorContainer container;
  if (header.contains("meta")) {
    container.meta = header["meta"].get<std::map<std::string, std::string>>();
  }
  std::uint64_t total = 0;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> ranges;
  for (const auto& [name, entry] : header.at("tensors").items()) {
    NamedTensor t;
    t.dtype = dtype_from_name(entry.at("dtype").get<std::string>());
    t.shape = entry.at("shape").get<std::vector<std::int64_t>>();
    const auto offset = entry.at("offset").get<std::uint64_t>();
    const auto size = static_cast<std::uint64_t>(t.element_count()) * dtype_size(t.dtype);
    if (offset + size > payload.size()) {
      throw std::runtime_error("'" + path + "': tensor '" + name + "' exceeds payload (offset " +
                               std::to_string(offset) + ", size " + std::to_string(size) +
                               ", payload " + std::to_string(payload.size()) + ")");
    }
    ranges.emplace_back(offset, offset + size);
    t.bytes.assign(payload.begin() + static_cast<std::ptrdiff_t>(offset),
                   payload.begin() + static_cast<std::ptrdiff_t>(offset + size));
    total += size;
    container.tensors.emplace(name, std::move(t));
  }
  if (total != payload.size()) {
    throw std::runtime_error("'" + path + "': payload size " + std::to_string(payload.size()) +
                             " does not equal sum of tensor sizes " + std::to_string(total));
  }
  std::sort(ranges.begin(), ranges.end());
  for (size_t i = 1; i < ranges.size(); ++i) {
    if (ranges[i].first < ranges[i - 1].second) {
      throw std::runtime_error("'" + path + "': overlapping tensor offsets");
    }
  }
  return container;
}

}  // namespace bevllm
