#include "gbdnet/roi_pool.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "gbdnet/error.hpp"

namespace gbd {

std::vector<int> pool_bin_edges(int extent, int out) {
  std::vector<int> edges(static_cast<size_t>(out) + 1);
  for (int k = 0; k <= out; ++k)
    edges[k] = static_cast<int>(
        std::lround(static_cast<double>(k) * extent / static_cast<double>(out)));
  return edges;
}

Tensor roi_max_pool(const Tensor& fmap, const IntRect& region, int out_h, int out_w) {
  const Shape fs = fmap.shape();
  if (out_h < 1 || out_w < 1) throw DomainError("roi_max_pool: output size must be positive");
  IntRect r;
  r.x0 = std::max(region.x0, 0);
  r.y0 = std::max(region.y0, 0);
  r.x1 = std::min(region.x1, fs.w);
  r.y1 = std::min(region.y1, fs.h);
  if (r.x1 <= r.x0 || r.y1 <= r.y0)
    throw DomainError("roi_max_pool: region empty after clamping to " +
                      std::to_string(fs.w) + "x" + std::to_string(fs.h));

  const std::vector<int> ex = pool_bin_edges(r.width(), out_w);
  const std::vector<int> ey = pool_bin_edges(r.height(), out_h);

  const Shape os{fs.n, fs.c, out_h, out_w};
  const std::vector<double>& fv = fmap.node()->vals();
  std::vector<double> out(static_cast<size_t>(os.numel()));
  auto argmax = std::make_shared<std::vector<std::int64_t>>(out.size());

  const std::int64_t f_plane = static_cast<std::int64_t>(fs.h) * fs.w;
  std::int64_t oi = 0;
  for (int n = 0; n < fs.n; ++n) {
    for (int c = 0; c < fs.c; ++c) {
      const std::int64_t base = (static_cast<std::int64_t>(n) * fs.c + c) * f_plane;
      for (int by = 0; by < out_h; ++by) {
        int y0 = r.y0 + ey[by], y1 = r.y0 + ey[by + 1];
        if (y1 <= y0) {
          y0 = std::min(y0, r.y1 - 1);
          y1 = y0 + 1;
        }
        for (int bx = 0; bx < out_w; ++bx) {
          int x0 = r.x0 + ex[bx], x1 = r.x0 + ex[bx + 1];
          if (x1 <= x0) {
            x0 = std::min(x0, r.x1 - 1);
            x1 = x0 + 1;
          }
          double best = fv[base + static_cast<std::int64_t>(y0) * fs.w + x0];
          std::int64_t best_at = base + static_cast<std::int64_t>(y0) * fs.w + x0;
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
              const std::int64_t at = base + static_cast<std::int64_t>(y) * fs.w + x;
              if (fv[at] > best) {
                best = fv[at];
                best_at = at;
              }
            }
          out[oi] = best;
          (*argmax)[oi] = best_at;
          ++oi;
        }
      }
    }
  }

  auto fn = fmap.node();
  return make_op(os, {fmap}, std::move(out), [fn, argmax](detail::Node& node) {
    for (size_t i = 0; i < node.grad.size(); ++i)
      fn->grad[(*argmax)[i]] += node.grad[i];
  });
}

BranchFeatures multi_context_pool(const Tensor& fmap, const Box& b, const ContextSet& ctx,
                                  int stride, int out) {
  validate_context_set(ctx);
  const Shape fs = fmap.shape();
  BranchFeatures bf;
  bf.h.reserve(ctx.pads.size());
  for (double p : ctx.pads) {
    const IntRect region = box_to_feature_region(pad_box(b, p), stride, fs.w, fs.h);
    bf.h.push_back(roi_max_pool(fmap, region, out, out));
  }
  return bf;
}

}  // namespace gbd
