#include "gbdnet/box.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gbd {

CornerRect to_corners(const Box& b) {
  return {b.x - b.w / 2.0, b.y - b.h / 2.0, b.x + b.w / 2.0, b.y + b.h / 2.0};
}

Box to_center(const CornerRect& r) {
  return {(r.x1 + r.x2) / 2.0, (r.y1 + r.y2) / 2.0, r.x2 - r.x1, r.y2 - r.y1};
}

void validate_context_set(const ContextSet& ctx) {
  if (ctx.pads.empty()) throw DomainError("context set has no pads");
  for (size_t i = 0; i < ctx.pads.size(); ++i) {
    if (1.0 + ctx.pads[i] <= 0.0)
      throw DomainError("context pad " + std::to_string(ctx.pads[i]) + " collapses the box");
    if (i > 0 && ctx.pads[i] <= ctx.pads[i - 1])
      throw DomainError("context pads must be strictly increasing");
  }
}

Box pad_box(const Box& b, double p) {
  if (1.0 + p <= 0.0)
    throw DomainError("pad_box: scale 1+p must be positive, got p=" + std::to_string(p));
  return {b.x, b.y, (1.0 + p) * b.w, (1.0 + p) * b.h};
}

double iou(const Box& a, const Box& b) {
  if (a.w <= 0 || a.h <= 0 || b.w <= 0 || b.h <= 0) return 0.0;
  const CornerRect ra = to_corners(a);
  const CornerRect rb = to_corners(b);
  const double iw = std::min(ra.x2, rb.x2) - std::max(ra.x1, rb.x1);
  const double ih = std::min(ra.y2, rb.y2) - std::max(ra.y1, rb.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

IntRect box_to_feature_region(const Box& b, int stride, int fmap_w, int fmap_h) {
  if (stride < 1) throw DomainError("box_to_feature_region: stride must be >= 1");
  if (fmap_w < 1 || fmap_h < 1) throw DomainError("box_to_feature_region: empty feature map");
  const CornerRect r = to_corners(b);
  const double s = static_cast<double>(stride);
  IntRect cells;
  cells.x0 = static_cast<int>(std::floor(r.x1 / s));
  cells.y0 = static_cast<int>(std::floor(r.y1 / s));
  cells.x1 = static_cast<int>(std::ceil(r.x2 / s));
  cells.y1 = static_cast<int>(std::ceil(r.y2 / s));
  cells.x0 = std::clamp(cells.x0, 0, fmap_w - 1);
  cells.y0 = std::clamp(cells.y0, 0, fmap_h - 1);
  cells.x1 = std::clamp(cells.x1, cells.x0 + 1, fmap_w);
  cells.y1 = std::clamp(cells.y1, cells.y0 + 1, fmap_h);
  return cells;
}

Box flip_box(const Box& b, int image_w) {
  return {static_cast<double>(image_w) - 1.0 - b.x, b.y, b.w, b.h};
}

CornerRect shake_box(const CornerRect& b, const ShakeSpec& spec,
                     const std::array<double, 4>& alphas) {
  for (double a : alphas)
    if (std::abs(a) > spec.alpha_range)
      throw DomainError("shake_box: alpha " + std::to_string(a) + " outside range " +
                        std::to_string(spec.alpha_range));
  const double m = static_cast<double>(spec.margin);
  // Shifts are proportional to the original box size, counted inclusively
  // in pixels; the margin only moves the corners being shifted.
  const double W = b.x2 - b.x1 + 1.0;
  const double H = b.y2 - b.y1 + 1.0;
  CornerRect out;
  out.x1 = b.x1 - m + alphas[0] * W;
  out.y1 = b.y1 - m + alphas[1] * H;
  out.x2 = b.x2 + m + alphas[2] * W;
  out.y2 = b.y2 + m + alphas[3] * H;
  if (out.x2 <= out.x1 || out.y2 <= out.y1)
    throw DomainError("shake_box: shaken box is inverted");
  return out;
}

int pyramid_scale_select(const Box& b, const std::vector<double>& scales,
                         double canonical_area, double image_shorter) {
  if (scales.empty()) throw DomainError("pyramid_scale_select: no scales");
  if (b.area() <= 0.0) throw DomainError("pyramid_scale_select: degenerate box");
  if (canonical_area <= 0.0 || image_shorter <= 0.0)
    throw DomainError("pyramid_scale_select: areas and sides must be positive");
  int best = 0;
  double best_obj = 0.0;
  for (size_t i = 0; i < scales.size(); ++i) {
    const double s = scales[i] / image_shorter;
    const double obj = std::abs(std::log(b.area() * s * s / canonical_area));
    const bool better =
        i == 0 || obj < best_obj || (obj == best_obj && scales[i] < scales[best]);
    if (better) {
      best = static_cast<int>(i);
      best_obj = obj;
    }
  }
  return best;
}

}  // namespace gbd
