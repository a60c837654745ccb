#pragma once

#include <cstdint>
#include <vector>

namespace bevllm {

inline constexpr int kNumViews = 6;
inline constexpr double kSectorWidthDeg = 60.0;

/// Raster direction treated as "vehicle front" when measuring cell angles.
enum class ForwardAxis { NegRow, PosRow, NegCol, PosCol };

/// Geometry of the BEV raster: size, ego position (fractional cell
/// coordinates) and the angular convention of the six view sectors.
/// Sector indices run clockwise from the forward axis: 0=front,
/// 1=front-right, 2=back-right, 3=back, 4=back-left, 5=front-left.
struct GridSpec {
  int height = 180;
  int width = 180;
  double ego_row = -1.0;  // negative means "grid center", resolved by validate()
  double ego_col = -1.0;
  ForwardAxis forward_axis = ForwardAxis::NegRow;
  double sector_offset_deg = -30.0;  // sector 0 centered on the forward axis

  static GridSpec defaults() { return GridSpec{}.resolved(); }

  GridSpec resolved() const;
  void validate() const;
  int cell_count() const { return height * width; }
};

struct ViewClassificationMap {
  GridSpec grid;
  std::vector<std::uint8_t> cells;  // row-major H*W, values in {0..5}

  std::uint8_t at(int row, int col) const { return cells[static_cast<size_t>(row) * grid.width + col]; }
};

/// Polar angle of the cell center relative to the ego cell, measured from
/// the forward axis, clockwise positive, in [-180, 180) degrees.
double cell_angle_deg(double row, double col, const GridSpec& grid);

int sector_of_angle(double theta_deg, const GridSpec& grid);

int sector_of_cell(int row, int col, const GridSpec& grid);

ViewClassificationMap build_view_map(const GridSpec& grid);

std::vector<std::uint8_t> view_mask(const ViewClassificationMap& map, int view);

}  // namespace bevllm
