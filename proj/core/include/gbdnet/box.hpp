#pragma once

#include <array>
#include <vector>

#include "gbdnet/error.hpp"

namespace gbd {

/// Center-format rectangle in pixels.
struct Box {
  double x = 0, y = 0, w = 0, h = 0;
  double area() const { return w * h; }
  bool operator==(const Box&) const = default;
};

/// Continuous corner rectangle: x1 = x - w/2, x2 = x + w/2.
struct CornerRect {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  bool operator==(const CornerRect&) const = default;
};

CornerRect to_corners(const Box& b);
Box to_center(const CornerRect& r);

/// Integer cell rectangle on a feature map, half-open: [x0, x1) x [y0, y1).
struct IntRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool operator==(const IntRect&) const = default;
};

struct ContextSet {
  std::vector<double> pads{-0.2, 0.2, 0.8, 1.7};
};

/// Throws DomainError unless pads are strictly increasing with 1+p > 0.
void validate_context_set(const ContextSet& ctx);

struct ShakeSpec {
  int margin = 32;
  double alpha_range = 0.1;
};

/// (x, y, (1+p)w, (1+p)h); center preserved. Requires 1+p > 0.
Box pad_box(const Box& b, double p);

/// Intersection-over-union on continuous rectangles; 0 for degenerate boxes.
double iou(const Box& a, const Box& b);

/// Corner coords over stride, start floored, end ceiled, clamped into the
/// map; always at least 1x1.
IntRect box_to_feature_region(const Box& b, int stride, int fmap_w, int fmap_h);

/// Mirrors the center horizontally: x <- image_w - 1 - x. Involution.
Box flip_box(const Box& b, int image_w);

/// Expands the rect by spec.margin on every side, then shifts each corner by
/// alpha * (side length of the original rect, inclusive pixel count).
CornerRect shake_box(const CornerRect& b, const ShakeSpec& spec,
                     const std::array<double, 4>& alphas);

/// Index of the pyramid level whose resize factor (scale / image_shorter)
/// brings the box area closest (in log space) to canonical_area. Ties go to
/// the smaller scale value, then the lower index.
int pyramid_scale_select(const Box& b, const std::vector<double>& scales,
                         double canonical_area, double image_shorter);

}  // namespace gbd
