#pragma once

// Appearance features: fixed-size bilinear patch extraction and the cascaded
// upper/lower-body RGB color histogram (16 bins per channel per half, 96 dims
// total, L2-normalized).

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "stksvd/errors.hpp"
#include "stksvd/sparse_coding.hpp"

namespace stksvd {

struct ImageFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  static ImageFrame filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    ImageFrame img;
    img.width = w;
    img.height = h;
    img.rgb.resize(static_cast<size_t>(w) * h * 3);
    for (size_t i = 0; i < img.rgb.size(); i += 3) {
      img.rgb[i] = r;
      img.rgb[i + 1] = g;
      img.rgb[i + 2] = b;
    }
    return img;
  }

  void set_pixel(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    const size_t i = (static_cast<size_t>(y) * width + x) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
};

struct BoundingBox {
  double x = 0.0;  // top-left
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  int frame = 0;

  Eigen::Vector2d center() const { return {x + w / 2.0, y + h / 2.0}; }
};

struct Patch {
  static constexpr int kWidth = 32;
  static constexpr int kHeight = 64;
  std::array<std::uint8_t, kWidth * kHeight * 3> rgb{};
};

inline constexpr int kFeatureDim = 96;  // 2 halves x 3 channels x 16 bins
inline constexpr int kBinsPerChannel = 16;

struct FeatureVector {
  Vector values;  // kFeatureDim, unit L2 norm
  BoundingBox box;
  int frame = 0;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
};

namespace detail {

// Samples channel ch at real coordinates; neighbors outside the image count
// as black.
inline double sample_bilinear(const ImageFrame& img, double sx, double sy, int ch) {
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0;
  const double fy = sy - y0;
  auto value_at = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return 0.0;
    return img.rgb[(static_cast<size_t>(y) * img.width + x) * 3 + ch];
  };
  const double top = value_at(x0, y0) * (1.0 - fx) + value_at(x0 + 1, y0) * fx;
  const double bottom = value_at(x0, y0 + 1) * (1.0 - fx) + value_at(x0 + 1, y0 + 1) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

}  // namespace detail

// Resamples the box contents to a fixed 32x64 patch (bilinear); regions of
// the box outside the image come back black.
inline Patch extract_patch(const ImageFrame& img, const BoundingBox& box) {
  if (box.w <= 0.0 || box.h <= 0.0 || box.x >= img.width || box.y >= img.height ||
      box.x + box.w <= 0.0 || box.y + box.h <= 0.0) {
    throw NoOverlap("extract_patch: box does not intersect the image");
  }
  Patch patch;
  const double step_x = box.w / Patch::kWidth;
  const double step_y = box.h / Patch::kHeight;
  for (int py = 0; py < Patch::kHeight; ++py) {
    const double sy = box.y + (py + 0.5) * step_y - 0.5;
    for (int px = 0; px < Patch::kWidth; ++px) {
      const double sx = box.x + (px + 0.5) * step_x - 0.5;
      for (int ch = 0; ch < 3; ++ch) {
        const double v = detail::sample_bilinear(img, sx, sy, ch);
        patch.rgb[(static_cast<size_t>(py) * Patch::kWidth + px) * 3 + ch] =
            static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return patch;
}

// Histogram layout: [upper R0..R15 G0..G15 B0..B15 | lower R0..R15 ...],
// bin i covering pixel values [16i, 16i+16). Upper half is rows 0..31.
inline Vector color_histogram_values(const Patch& patch) {
  std::array<int, kFeatureDim> bins{};
  for (int py = 0; py < Patch::kHeight; ++py) {
    const int half = py < Patch::kHeight / 2 ? 0 : 1;
    for (int px = 0; px < Patch::kWidth; ++px) {
      const size_t base = (static_cast<size_t>(py) * Patch::kWidth + px) * 3;
      for (int ch = 0; ch < 3; ++ch) {
        const int bin = patch.rgb[base + ch] / kBinsPerChannel;
        ++bins[half * 48 + ch * kBinsPerChannel + bin];
      }
    }
  }
  Vector values(kFeatureDim);
  for (int i = 0; i < kFeatureDim; ++i) values(i) = bins[static_cast<size_t>(i)];
  return values / values.norm();  // every half/channel holds 1024 counts, never zero
}

inline FeatureVector color_histogram(const Patch& patch, const BoundingBox& box) {
  FeatureVector f;
  f.values = color_histogram_values(patch);
  f.box = box;
  f.frame = box.frame;
  f.center = box.center();
  return f;
}

inline FeatureVector extract_feature(const ImageFrame& img, const BoundingBox& box) {
  return color_histogram(extract_patch(img, box), box);
}

}  // namespace stksvd
