#pragma once

#include <Eigen/Core>

#include "bevllm/grid.hpp"

namespace bevllm {

/// C-channel feature grid over the BEV raster. Stored flattened as
/// channels x (H*W) with cell (r, c) in column r*W + c.
struct BevFeatureMap {
  int channels = 512;
  GridSpec grid;
  Eigen::MatrixXd values;

  int cell_count() const { return grid.cell_count(); }
  void validate() const;
};

/// Per-cell sinusoidal encoding of the view index, same layout as
/// BevFeatureMap. At most six distinct columns occur.
struct PositionalEncodingMap {
  int d_pos = 512;
  GridSpec grid;
  Eigen::MatrixXd values;  // d_pos x (H*W)
};

/// Transformer-style fixed embedding of an integer position:
/// e[2i] = sin(p * w_i), e[2i+1] = cos(p * w_i), w_i = 10000^(-2i/d).
/// Computed in double precision. Used both for view indices (p in 0..5)
/// and for text token positions.
Eigen::VectorXd sinusoidal_position_vector(double position, int dim);

/// View-index specialization with the {0..5} domain check.
Eigen::VectorXd sinusoidal_encode(int view, int d_pos);

PositionalEncodingMap build_positional_map(const ViewClassificationMap& view_map, int d_pos);

/// Elementwise addition of the positional map onto the features.
BevFeatureMap apply_positional_encoding(const BevFeatureMap& features,
                                        const PositionalEncodingMap& pos);

}  // namespace bevllm
