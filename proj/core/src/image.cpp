#include "prefnoise/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <png.h>

namespace prefnoise {

GrayImage render_final_state(const Environment& env, const Trajectory& traj) {
  const auto final_state = traj.state(traj.horizon());
  GrayImage img;
  switch (env.kind()) {
    case EnvKind::gridworld: {
      const int n = env.spec().grid_size;
      img.width = img.height = n;
      img.pixels.assign(static_cast<std::size_t>(n * n), kBackground);
      const int goal = env.goal_cell();
      const int agent = env.cell_of(final_state);
      img.pixels[static_cast<std::size_t>(goal)] = kGoalShade;
      img.pixels[static_cast<std::size_t>(agent)] = agent == goal ? kAgentOnGoalShade : kAgentShade;
      return img;
    }
    case EnvKind::pointmass: {
      const int n = kPointmassRaster;
      img.width = img.height = n;
      img.pixels.assign(static_cast<std::size_t>(n * n), kBackground);
      const double b = env.spec().bound;
      auto to_pixel = [&](double v) {
        return std::clamp(static_cast<int>(std::floor((v + b) / (2.0 * b) * n)), 0, n - 1);
      };
      auto stamp = [&](int cx, int cy, std::uint8_t shade) {
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int x = cx + dx;
            const int y = cy + dy;
            if (x >= 0 && x < n && y >= 0 && y < n) {
              img.pixels[static_cast<std::size_t>(y * n + x)] = shade;
            }
          }
        }
      };
      stamp(to_pixel(0.0), to_pixel(0.0), kGoalShade);
      stamp(to_pixel(final_state[0]), to_pixel(final_state[1]), kAgentShade);
      return img;
    }
  }
  throw std::invalid_argument("render: unsupported environment kind");
}

std::pair<GrayImage, GrayImage> render_pair(const Environment& env, const TrajectoryPair& pair) {
  return {render_final_state(env, pair.first), render_final_state(env, pair.second)};
}

std::string to_pgm(const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.append(image.pixels.begin(), image.pixels.end());
  return out;
}

GrayImage upscale(const GrayImage& image, int factor) {
  if (factor < 1) throw std::invalid_argument("upscale factor must be >= 1");
  GrayImage out;
  out.width = image.width * factor;
  out.height = image.height * factor;
  out.pixels.resize(static_cast<std::size_t>(out.width * out.height));
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      out.pixels[static_cast<std::size_t>(y * out.width + x)] = image.at(x / factor, y / factor);
    }
  }
  return out;
}

namespace {

void append_to_string(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), length);
}

}  // namespace

std::string to_png(const GrayImage& image, int min_side) {
  const int shorter = std::max(1, std::min(image.width, image.height));
  const int factor = std::max(1, (min_side + shorter - 1) / shorter);
  const GrayImage img = upscale(image, factor);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  std::string out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed while encoding image");
  }
  png_set_write_fn(png, &out, append_to_string, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height),
               8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, img.pixels.data() + static_cast<std::size_t>(y * img.width));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace prefnoise
