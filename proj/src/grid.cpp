#include "bevllm/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bevllm {

namespace {
constexpr double kRadToDeg = 57.29577951308232087680;
}

GridSpec GridSpec::resolved() const {
  GridSpec g = *this;
  if (g.ego_row < 0.0) g.ego_row = (g.height - 1) / 2.0;
  if (g.ego_col < 0.0) g.ego_col = (g.width - 1) / 2.0;
  return g;
}

void GridSpec::validate() const {
  if (height <= 0 || width <= 0) {
    throw std::invalid_argument("GridSpec: height and width must be positive");
  }
  const GridSpec g = resolved();
  if (g.ego_row < 0.0 || g.ego_row > height - 1 || g.ego_col < 0.0 || g.ego_col > width - 1) {
    throw std::invalid_argument("GridSpec: ego position outside the raster");
  }
  if (sector_offset_deg < -60.0 || sector_offset_deg >= 60.0) {
    throw std::invalid_argument("GridSpec: sector_offset_deg must lie in [-60, 60)");
  }
}

double cell_angle_deg(double row, double col, const GridSpec& grid) {
  const GridSpec g = grid.resolved();
  const double dr = row - g.ego_row;
  const double dc = col - g.ego_col;
  // (fwd, cw) components of the displacement in the chosen frame. Screen
  // convention: rows grow downward, so clockwise from "up" passes through
  // "right".
  double fwd = 0.0, cw = 0.0;
  switch (g.forward_axis) {
    case ForwardAxis::NegRow: fwd = -dr; cw = dc;  break;
    case ForwardAxis::PosRow: fwd = dr;  cw = -dc; break;
    case ForwardAxis::NegCol: fwd = -dc; cw = -dr; break;
    case ForwardAxis::PosCol: fwd = dc;  cw = dr;  break;
  }
  double theta = std::atan2(cw, fwd) * kRadToDeg;
  if (theta >= 180.0) theta -= 360.0;
  return theta;
}

int sector_of_angle(double theta_deg, const GridSpec& grid) {
  double rel = std::fmod(theta_deg - grid.sector_offset_deg, 360.0);
  if (rel < 0.0) rel += 360.0;
  int sector = static_cast<int>(rel / kSectorWidthDeg);
  return sector >= kNumViews ? kNumViews - 1 : sector;  // guards rel == 360 after rounding
}

int sector_of_cell(int row, int col, const GridSpec& grid) {
  if (row < 0 || row >= grid.height || col < 0 || col >= grid.width) {
    throw std::invalid_argument("sector_of_cell: cell (" + std::to_string(row) + "," +
                                std::to_string(col) + ") outside the raster");
  }
  const GridSpec g = grid.resolved();
  const double dr = row - g.ego_row;
  const double dc = col - g.ego_col;
  if (dr == 0.0 && dc == 0.0) return 0;  // ego cell: angle undefined, sector 0 by convention
  return sector_of_angle(cell_angle_deg(row, col, g), g);
}

ViewClassificationMap build_view_map(const GridSpec& grid) {
  grid.validate();
  const GridSpec g = grid.resolved();
  ViewClassificationMap map;
  map.grid = g;
  map.cells.resize(static_cast<size_t>(g.cell_count()));
  for (int r = 0; r < g.height; ++r) {
    for (int c = 0; c < g.width; ++c) {
      map.cells[static_cast<size_t>(r) * g.width + c] =
          static_cast<std::uint8_t>(sector_of_cell(r, c, g));
    }
  }
  return map;
}

std::vector<std::uint8_t> view_mask(const ViewClassificationMap& map, int view) {
  if (view < 0 || view >= kNumViews) {
    throw std::invalid_argument("view_mask: view index " + std::to_string(view) +
                                " outside {0..5}");
  }
  std::vector<std::uint8_t> mask(map.cells.size());
  for (size_t i = 0; i < map.cells.size(); ++i) {
    mask[i] = map.cells[i] == view ? 1 : 0;
  }
  return mask;
}

}  // namespace bevllm
