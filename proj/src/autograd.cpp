#include "bevllm/autograd.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace bevllm::ag {

namespace {

thread_local bool g_grad_enabled = true;

bool track(const std::initializer_list<Var>& parents) {
  if (!g_grad_enabled) return false;
  for (const auto& p : parents) {
    if (p && p->requires_grad) return true;
  }
  return false;
}

Var make(Mat value, std::initializer_list<Var> parents, std::function<void(Node&)> fn) {
  auto out = std::make_shared<Node>(std::move(value));
  if (track(parents)) {
    out->requires_grad = true;
    out->parents.assign(parents.begin(), parents.end());
    out->backprop = std::move(fn);
  }
  return out;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a->rows() != b->rows() || a->cols() != b->cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a->rows()) + "x" + std::to_string(a->cols()) +
                                " vs " + std::to_string(b->rows()) + "x" +
                                std::to_string(b->cols()));
  }
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Var constant(Mat v) { return std::make_shared<Node>(std::move(v), false); }
Var param(Mat v) { return std::make_shared<Node>(std::move(v), true); }

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make(a->value + b->value, {a, b}, [a, b](Node& out) {
    if (a->requires_grad) { a->ensure_grad(); a->grad += out.grad; }
    if (b->requires_grad) { b->ensure_grad(); b->grad += out.grad; }
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make(a->value - b->value, {a, b}, [a, b](Node& out) {
    if (a->requires_grad) { a->ensure_grad(); a->grad += out.grad; }
    if (b->requires_grad) { b->ensure_grad(); b->grad -= out.grad; }
  });
}

Var hadamard(const Var& a, const Var& b) {
  check_same_shape(a, b, "hadamard");
  return make(a->value.cwiseProduct(b->value), {a, b}, [a, b](Node& out) {
    if (a->requires_grad) { a->ensure_grad(); a->grad += out.grad.cwiseProduct(b->value); }
    if (b->requires_grad) { b->ensure_grad(); b->grad += out.grad.cwiseProduct(a->value); }
  });
}

Var scale(const Var& a, double s) {
  return make(a->value * s, {a}, [a, s](Node& out) {
    if (a->requires_grad) { a->ensure_grad(); a->grad += out.grad * s; }
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a->cols() != b->rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a->cols()) +
                                " vs " + std::to_string(b->rows()) + ")");
  }
  return make(a->value * b->value, {a, b}, [a, b](Node& out) {
    if (a->requires_grad) { a->ensure_grad(); a->grad.noalias() += out.grad * b->value.transpose(); }
    if (b->requires_grad) { b->ensure_grad(); b->grad.noalias() += a->value.transpose() * out.grad; }
  });
}

Var transpose(const Var& a) {
  return make(a->value.transpose(), {a}, [a](Node& out) {
    if (a->requires_grad) { a->ensure_grad(); a->grad += out.grad.transpose(); }
  });
}

Var add_rowvec(const Var& a, const Var& v) {
  if (v->rows() != 1 || v->cols() != a->cols()) {
    throw std::invalid_argument("add_rowvec: expected 1x" + std::to_string(a->cols()) +
                                " row vector");
  }
  Mat out = a->value;
  out.rowwise() += v->value.row(0);
  return make(std::move(out), {a, v}, [a, v](Node& out_node) {
    if (a->requires_grad) { a->ensure_grad(); a->grad += out_node.grad; }
    if (v->requires_grad) { v->ensure_grad(); v->grad.row(0) += out_node.grad.colwise().sum(); }
  });
}

Var relu(const Var& a) {
  return make(a->value.cwiseMax(0.0), {a}, [a](Node& out) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad += out.grad.cwiseProduct((a->value.array() > 0.0).cast<double>().matrix());
  });
}

Var gelu(const Var& a) {
  constexpr double inv_sqrt2 = 0.7071067811865475244;
  constexpr double inv_sqrt2pi = 0.3989422804014326779;
  Mat out = a->value.unaryExpr([](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); });
  return make(std::move(out), {a}, [a](Node& out_node) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    Mat d = a->value.unaryExpr([](double x) {
      const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
      const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
      return cdf + x * pdf;
    });
    a->grad += out_node.grad.cwiseProduct(d);
  });
}

Var tanh_act(const Var& a) {
  Mat out = a->value.array().tanh().matrix();
  auto out_node = make(std::move(out), {a}, nullptr);
  if (out_node->requires_grad) {
    Mat y = out_node->value;
    out_node->backprop = [a, y](Node& o) {
      a->ensure_grad();
      a->grad += o.grad.cwiseProduct((1.0 - y.array().square()).matrix());
    };
  }
  return out_node;
}

Var sigmoid_act(const Var& a) {
  Mat out = a->value.unaryExpr([](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  });
  auto out_node = make(std::move(out), {a}, nullptr);
  if (out_node->requires_grad) {
    Mat y = out_node->value;
    out_node->backprop = [a, y](Node& o) {
      a->ensure_grad();
      a->grad += o.grad.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
    };
  }
  return out_node;
}

Var softmax_rows(const Var& a, const Mat& mask) {
  Mat logits = a->value;
  if (mask.size() != 0) {
    if (mask.rows() != logits.rows() || mask.cols() != logits.cols()) {
      throw std::invalid_argument("softmax_rows: mask shape mismatch");
    }
    logits += mask;
  }
  Mat out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    Eigen::ArrayXd e = (logits.row(r).array() - m).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  auto out_node = make(std::move(out), {a}, nullptr);
  if (out_node->requires_grad) {
    Mat y = out_node->value;
    out_node->backprop = [a, y](Node& o) {
      a->ensure_grad();
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const double dot = o.grad.row(r).dot(y.row(r));
        a->grad.row(r) += (y.row(r).array() * (o.grad.row(r).array() - dot)).matrix();
      }
    };
  }
  return out_node;
}

Var layer_norm_rows(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Eigen::Index n = x->rows();
  const Eigen::Index m = x->cols();
  if (gain->rows() != 1 || gain->cols() != m || bias->rows() != 1 || bias->cols() != m) {
    throw std::invalid_argument("layer_norm_rows: gain/bias must be 1x" + std::to_string(m));
  }
  Mat xhat(n, m);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const double mu = x->value.row(r).mean();
    const double var = (x->value.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = ((x->value.row(r).array() - mu) * inv_std(r)).matrix();
  }
  Mat out(n, m);
  for (Eigen::Index r = 0; r < n; ++r) {
    out.row(r) = xhat.row(r).cwiseProduct(gain->value.row(0)) + bias->value.row(0);
  }
  return make(std::move(out), {x, gain, bias}, [x, gain, bias, xhat, inv_std, m](Node& o) {
    if (gain->requires_grad) {
      gain->ensure_grad();
      gain->grad.row(0) += (o.grad.cwiseProduct(xhat)).colwise().sum();
    }
    if (bias->requires_grad) {
      bias->ensure_grad();
      bias->grad.row(0) += o.grad.colwise().sum();
    }
    if (x->requires_grad) {
      x->ensure_grad();
      const double inv_m = 1.0 / static_cast<double>(m);
      for (Eigen::Index r = 0; r < o.grad.rows(); ++r) {
        Eigen::RowVectorXd dxhat = o.grad.row(r).cwiseProduct(gain->value.row(0));
        const double sum_d = dxhat.sum();
        const double sum_dx = dxhat.dot(xhat.row(r));
        x->grad.row(r) += (inv_std(r) * (dxhat.array() - inv_m * sum_d -
                                         xhat.row(r).array() * inv_m * sum_dx)).matrix();
      }
    }
  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a->rows()) {
    throw std::invalid_argument("slice_rows: range out of bounds");
  }
  return make(a->value.middleRows(start, count), {a}, [a, start, count](Node& o) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.middleRows(start, count) += o.grad;
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a->cols()) {
    throw std::invalid_argument("slice_cols: range out of bounds");
  }
  return make(a->value.middleCols(start, count), {a}, [a, start, count](Node& o) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.middleCols(start, count) += o.grad;
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front()->cols();
  for (const auto& p : parts) {
    if (p->cols() != cols) throw std::invalid_argument("concat_rows: column count mismatch");
    rows += p->rows();
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p->rows()) = p->value;
    at += p->rows();
  }
  auto out_node = std::make_shared<Node>(std::move(out));
  bool rg = false;
  if (g_grad_enabled) {
    for (const auto& p : parts) rg = rg || p->requires_grad;
  }
  if (rg) {
    out_node->requires_grad = true;
    out_node->parents = parts;
    auto copies = parts;
    out_node->backprop = [copies](Node& o) {
      Eigen::Index at2 = 0;
      for (const auto& p : copies) {
        if (p->requires_grad) {
          p->ensure_grad();
          p->grad += o.grad.middleRows(at2, p->rows());
        }
        at2 += p->rows();
      }
    };
  }
  return out_node;
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Eigen::Index cols = 0;
  const Eigen::Index rows = parts.front()->rows();
  for (const auto& p : parts) {
    if (p->rows() != rows) throw std::invalid_argument("concat_cols: row count mismatch");
    cols += p->cols();
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p->cols()) = p->value;
    at += p->cols();
  }
  auto out_node = std::make_shared<Node>(std::move(out));
  bool rg = false;
  if (g_grad_enabled) {
    for (const auto& p : parts) rg = rg || p->requires_grad;
  }
  if (rg) {
    out_node->requires_grad = true;
    out_node->parents = parts;
    auto copies = parts;
    out_node->backprop = [copies](Node& o) {
      Eigen::Index at2 = 0;
      for (const auto& p : copies) {
        if (p->requires_grad) {
          p->ensure_grad();
          p->grad += o.grad.middleCols(at2, p->cols());
        }
        at2 += p->cols();
      }
    };
  }
  return out_node;
}

Var gather_rows(const Var& table, const std::vector<int>& ids) {
  Mat out(static_cast<Eigen::Index>(ids.size()), table->cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table->rows()) {
      throw std::invalid_argument("gather_rows: id " + std::to_string(ids[i]) +
                                  " outside table of " + std::to_string(table->rows()) + " rows");
    }
    out.row(static_cast<Eigen::Index>(i)) = table->value.row(ids[i]);
  }
  return make(std::move(out), {table}, [table, ids](Node& o) {
    if (!table->requires_grad) return;
    table->ensure_grad();
    for (size_t i = 0; i < ids.size(); ++i) {
      table->grad.row(ids[i]) += o.grad.row(static_cast<Eigen::Index>(i));
    }
  });
}

Var l2_normalize_rows(const Var& a, double min_norm) {
  const Eigen::Index n = a->rows();
  Eigen::VectorXd norms(n);
  Mat out(n, a->cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    const double nn = a->value.row(r).norm();
    if (!(nn > min_norm)) {
      throw std::runtime_error("l2_normalize_rows: zero-norm row " + std::to_string(r));
    }
    norms(r) = nn;
    out.row(r) = a->value.row(r) / nn;
  }
  auto out_node = make(std::move(out), {a}, nullptr);
  if (out_node->requires_grad) {
    Mat y = out_node->value;
    out_node->backprop = [a, y, norms](Node& o) {
      a->ensure_grad();
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        const double dot = o.grad.row(r).dot(y.row(r));
        a->grad.row(r) += (o.grad.row(r) - dot * y.row(r)) / norms(r);
      }
    };
  }
  return out_node;
}

Var colwise_max(const Var& a) {
  if (a->rows() == 0) throw std::invalid_argument("colwise_max: empty input");
  Mat out(1, a->cols());
  std::vector<Eigen::Index> arg(static_cast<size_t>(a->cols()));
  for (Eigen::Index c = 0; c < a->cols(); ++c) {
    Eigen::Index r;
    out(0, c) = a->value.col(c).maxCoeff(&r);
    arg[static_cast<size_t>(c)] = r;
  }
  return make(std::move(out), {a}, [a, arg](Node& o) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    for (Eigen::Index c = 0; c < a->cols(); ++c) {
      a->grad(arg[static_cast<size_t>(c)], c) += o.grad(0, c);
    }
  });
}

Var colwise_mean(const Var& a) {
  if (a->rows() == 0) throw std::invalid_argument("colwise_mean: empty input");
  const double inv_n = 1.0 / static_cast<double>(a->rows());
  Mat out = a->value.colwise().mean();
  return make(std::move(out), {a}, [a, inv_n](Node& o) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad += (Eigen::VectorXd::Ones(a->rows()) * o.grad.row(0)) * inv_n;
  });
}

Var rowwise_mean(const Var& a) {
  if (a->cols() == 0) throw std::invalid_argument("rowwise_mean: empty input");
  const double inv_m = 1.0 / static_cast<double>(a->cols());
  Mat out = a->value.rowwise().mean();
  return make(std::move(out), {a}, [a, inv_m](Node& o) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad += (o.grad.col(0) * Eigen::RowVectorXd::Ones(a->cols())) * inv_m;
  });
}

Var sum_all(const Var& a) {
  Mat out(1, 1);
  out(0, 0) = a->value.sum();
  return make(std::move(out), {a}, [a](Node& o) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.array() += o.grad(0, 0);
  });
}

Var mean_all(const Var& a) {
  const double inv = 1.0 / static_cast<double>(a->value.size());
  Mat out(1, 1);
  out(0, 0) = a->value.mean();
  return make(std::move(out), {a}, [a, inv](Node& o) {
    if (!a->requires_grad) return;
    a->ensure_grad();
    a->grad.array() += o.grad(0, 0) * inv;
  });
}

Var cross_entropy_rows(const Var& logits, const std::vector<int>& targets,
                       const std::vector<double>& weights) {
  const auto n = static_cast<size_t>(logits->rows());
  if (targets.size() != n || weights.size() != n) {
    throw std::invalid_argument("cross_entropy_rows: targets/weights size mismatch");
  }
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (weights[i] == 0.0) continue;
    const int t = targets[i];
    if (t < 0 || t >= logits->cols()) {
      throw std::invalid_argument("cross_entropy_rows: target id out of range");
    }
    const auto row = logits->value.row(static_cast<Eigen::Index>(i));
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    total += weights[i] * (lse - row(t));
  }
  Mat out(1, 1);
  out(0, 0) = total;
  return make(std::move(out), {logits}, [logits, targets, weights](Node& o) {
    if (!logits->requires_grad) return;
    logits->ensure_grad();
    const double g = o.grad(0, 0);
    for (size_t i = 0; i < targets.size(); ++i) {
      if (weights[i] == 0.0) continue;
      const auto r = static_cast<Eigen::Index>(i);
      const auto row = logits->value.row(r);
      const double m = row.maxCoeff();
      Eigen::ArrayXd e = (row.array() - m).exp();
      Eigen::RowVectorXd p = (e / e.sum()).matrix();
      p(targets[i]) -= 1.0;
      logits->grad.row(r) += g * weights[i] * p;
    }
  });
}

Var bce_with_logits(const Var& logits, const std::vector<double>& labels) {
  if (logits->cols() != 1 || static_cast<size_t>(logits->rows()) != labels.size()) {
    throw std::invalid_argument("bce_with_logits: expected Nx1 logits matching labels");
  }
  const auto n = static_cast<Eigen::Index>(labels.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = logits->value(i, 0);
    const double z = labels[static_cast<size_t>(i)];
    total += std::max(x, 0.0) - x * z + std::log1p(std::exp(-std::abs(x)));
  }
  Mat out(1, 1);
  out(0, 0) = total / static_cast<double>(n);
  return make(std::move(out), {logits}, [logits, labels](Node& o) {
    if (!logits->requires_grad) return;
    logits->ensure_grad();
    const double g = o.grad(0, 0) / static_cast<double>(labels.size());
    for (size_t i = 0; i < labels.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double x = logits->value(r, 0);
      const double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      logits->grad(r, 0) += g * (sig - labels[i]);
    }
  });
}

void backward(const Var& root) {
  if (!root) throw std::invalid_argument("backward: null root");
  if (root->value.size() != 1) throw std::invalid_argument("backward: root must be scalar");
  if (!root->requires_grad) return;

  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && seen.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad(0, 0) = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backprop) {
      node->ensure_grad();
      node->backprop(*node);
    }
  }
}

}  // namespace bevllm::ag
