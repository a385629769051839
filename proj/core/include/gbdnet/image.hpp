#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gbdnet/box.hpp"
#include "gbdnet/tensor.hpp"

namespace gbd {

/// Planar RGB raster, values in [0, 1]. Coordinates put pixel (ix, iy)'s
/// center at (ix, iy), so a horizontal mirror is x <-> w - 1 - x, matching
/// flip_box.
struct Image {
  int w = 0, h = 0;
  std::vector<double> rgb;  // 3 planes, row-major

  static Image filled(int w, int h, double r, double g, double b);
  double& at(int c, int y, int x);
  double at(int c, int y, int x) const;
};

Image load_ppm(const std::string& path);
void save_ppm(const Image& img, const std::string& path);
std::vector<std::uint8_t> encode_ppm(const Image& img);

Image flip_horizontal(const Image& img);

/// Bilinear-samples the rectangle [x1, x2] x [y1, y2] into out_w x out_h
/// pixels; samples outside the image clamp to the border.
Image crop_resize(const Image& img, const CornerRect& region, int out_w, int out_h);

inline Image resize_bilinear(const Image& img, int out_w, int out_h) {
  return crop_resize(img, {-0.5, -0.5, img.w - 0.5, img.h - 0.5}, out_w, out_h);
}

/// 1-pixel rectangle outline, clamped to the image.
void draw_box(Image& img, const CornerRect& r, double red, double green, double blue);

/// (1, 3, h, w) constant tensor (no gradient tracking).
Tensor image_to_tensor(const Image& img);

}  // namespace gbd
