#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bevllm {

enum class Dtype { f32, f64, i32 };

std::string dtype_name(Dtype d);
Dtype dtype_from_name(const std::string& name);
size_t dtype_size(Dtype d);

/// One named tensor inside a container: raw little-endian row-major bytes
/// plus dtype and shape. Typed accessors copy in/out of Eigen.
struct NamedTensor {
  Dtype dtype = Dtype::f64;
  std::vector<std::int64_t> shape;
  std::vector<std::uint8_t> bytes;

  std::int64_t element_count() const;
  size_t byte_size() const { return bytes.size(); }

  static NamedTensor from_matrix(const Eigen::MatrixXd& m, Dtype dtype = Dtype::f64);
  static NamedTensor from_i32(const std::vector<std::int32_t>& data,
                              std::vector<std::int64_t> shape);

  Eigen::MatrixXd as_matrix() const;  // requires rank <= 2, f32 or f64
  std::vector<std::int32_t> as_i32() const;
};

/// Minimal self-describing tensor file (.tns): a JSON header naming each
/// tensor's dtype/shape/offset followed by one contiguous payload. Offsets
/// are relative to the payload start and must tile it exactly.
/// Round-trips are bit-exact, which the golden and checkpoint tests rely on.
class TensorContainer {
 public:
  std::map<std::string, NamedTensor> tensors;
  std::map<std::string, std::string> meta;  // free-form header entries (config echo, vocab, ...)

  void save(const std::string& path) const;
  static TensorContainer load(const std::string& path);

  bool has(const std::string& name) const { return tensors.count(name) > 0; }
  const NamedTensor& at(const std::string& name) const;
};

}  // namespace bevllm
