#pragma once

#include <Eigen/Core>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace bevllm::ag {

using Mat = Eigen::MatrixXd;

/// Node in a dynamically built reverse-mode graph. Operations allocate a
/// fresh node per call; parameters are long-lived leaf nodes whose `grad`
/// accumulates across backward passes until cleared by the optimizer.
class Node {
 public:
  Mat value;
  Mat grad;
  bool requires_grad = false;

  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;

  explicit Node(Mat v, bool rg = false) : value(std::move(v)), requires_grad(rg) {}

  void ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad = Mat::Zero(value.rows(), value.cols());
    }
  }
  void zero_grad() { grad.setZero(); }

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
};

using Var = std::shared_ptr<Node>;

Var constant(Mat v);
Var param(Mat v);

/// Gradient recording is on by default; disable it for pure inference so
/// intermediate activations are released as soon as they go out of scope.
bool grad_enabled();

struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Elementwise and linear-algebra ops.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add_rowvec(const Var& a, const Var& v);  // broadcast a 1xM row over NxM

// Activations.
Var relu(const Var& a);
Var gelu(const Var& a);
Var tanh_act(const Var& a);
Var sigmoid_act(const Var& a);

/// Row-wise softmax. `mask` (may be empty) is added to the logits before
/// normalization; use large negative entries to exclude positions.
Var softmax_rows(const Var& a, const Mat& mask = Mat());

Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps = 1e-6);

// Structural ops.
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var gather_rows(const Var& table, const std::vector<int>& ids);

/// Unit-normalizes each row. Throws if any row norm falls below `min_norm`
/// (cosine similarity is undefined there).
Var l2_normalize_rows(const Var& a, double min_norm = 1e-12);

Var colwise_max(const Var& a);   // 1 x cols, gradient routed to the argmax
Var colwise_mean(const Var& a);  // 1 x cols
Var rowwise_mean(const Var& a);  // rows x 1

Var sum_all(const Var& a);
Var mean_all(const Var& a);

/// Weighted token cross-entropy: sum_i w[i] * (logsumexp(row_i) - row_i[t_i]).
/// Rows with zero weight contribute nothing, exactly.
Var cross_entropy_rows(const Var& logits, const std::vector<int>& targets,
                       const std::vector<double>& weights);

/// Mean over rows of the numerically stable binary cross-entropy with logits.
Var bce_with_logits(const Var& logits, const std::vector<double>& labels);

/// Runs reverse-mode accumulation from a scalar (1x1) root.
void backward(const Var& root);

}  // namespace bevllm::ag
