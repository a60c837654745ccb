#include "bevllm/pos_encoding.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bevllm {

void BevFeatureMap::validate() const {
  if (channels <= 0) throw std::invalid_argument("BevFeatureMap: channels must be positive");
  grid.validate();
  if (values.rows() != channels || values.cols() != grid.cell_count()) {
    throw std::invalid_argument("BevFeatureMap: values must be " + std::to_string(channels) +
                                "x" + std::to_string(grid.cell_count()));
  }
  if (!values.allFinite()) throw std::invalid_argument("BevFeatureMap: non-finite values");
}

Eigen::VectorXd sinusoidal_position_vector(double position, int dim) {
  if (dim <= 0 || dim % 2 != 0) {
    throw std::invalid_argument("sinusoidal encoding requires a positive even dimension, got " +
                                std::to_string(dim));
  }
  Eigen::VectorXd e(dim);
  for (int i = 0; 2 * i < dim; ++i) {
    const double omega = std::pow(10000.0, -2.0 * i / dim);
    e(2 * i) = std::sin(position * omega);
    e(2 * i + 1) = std::cos(position * omega);
  }
  return e;
}

Eigen::VectorXd sinusoidal_encode(int view, int d_pos) {
  if (view < 0 || view >= kNumViews) {
    throw std::invalid_argument("sinusoidal_encode: view index " + std::to_string(view) +
                                " outside {0..5}");
  }
  return sinusoidal_position_vector(static_cast<double>(view), d_pos);
}

PositionalEncodingMap build_positional_map(const ViewClassificationMap& view_map, int d_pos) {
  PositionalEncodingMap out;
  out.d_pos = d_pos;
  out.grid = view_map.grid;
  out.values.resize(d_pos, static_cast<Eigen::Index>(view_map.cells.size()));

  // Six distinct columns at most; encode each view once and scatter.
  Eigen::MatrixXd per_view(d_pos, kNumViews);
  for (int v = 0; v < kNumViews; ++v) {
    per_view.col(v) = sinusoidal_encode(v, d_pos);
  }
  for (size_t i = 0; i < view_map.cells.size(); ++i) {
    out.values.col(static_cast<Eigen::Index>(i)) = per_view.col(view_map.cells[i]);
  }
  return out;
}

BevFeatureMap apply_positional_encoding(const BevFeatureMap& features,
                                        const PositionalEncodingMap& pos) {
  if (features.channels != pos.d_pos) {
    throw std::invalid_argument("apply_positional_encoding: channel count " +
                                std::to_string(features.channels) + " != encoding dimension " +
                                std::to_string(pos.d_pos));
  }
  if (features.grid.height != pos.grid.height || features.grid.width != pos.grid.width) {
    throw std::invalid_argument("apply_positional_encoding: grids differ");
  }
  BevFeatureMap out;
  out.channels = features.channels;
  out.grid = features.grid;
  out.values = features.values + pos.values;
  return out;
}

}  // namespace bevllm
