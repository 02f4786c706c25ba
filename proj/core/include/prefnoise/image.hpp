#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "prefnoise/env.hpp"

namespace prefnoise {

/// 8-bit grayscale raster, row-major, 255 = white background.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y * width + x)]; }
  bool operator==(const GrayImage&) const = default;
};

inline constexpr std::uint8_t kBackground = 255;
inline constexpr std::uint8_t kGoalShade = 128;
inline constexpr std::uint8_t kAgentShade = 0;
inline constexpr std::uint8_t kAgentOnGoalShade = 64;
inline constexpr int kPointmassRaster = 64;

/// Raster of a trajectory's final state. gridworld: one pixel per cell with the goal and
/// agent marked; pointmass: 64x64 with a gray target at the origin and a black dot.
GrayImage render_final_state(const Environment& env, const Trajectory& traj);
std::pair<GrayImage, GrayImage> render_pair(const Environment& env, const TrajectoryPair& pair);

/// Binary portable graymap (P5).
std::string to_pgm(const GrayImage& image);

/// Nearest-neighbour upscale by an integer factor.
GrayImage upscale(const GrayImage& image, int factor);

/// Grayscale PNG, upscaled so the shorter side is at least `min_side` pixels.
std::string to_png(const GrayImage& image, int min_side = 64);

}  // namespace prefnoise
