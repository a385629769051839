#pragma once

#include <vector>

#include "gbdnet/box.hpp"
#include "gbdnet/tensor.hpp"

namespace gbd {

/// One pooled feature tensor per context pad, identical shapes, in pad order.
struct BranchFeatures {
  std::vector<Tensor> h;
  int size() const { return static_cast<int>(h.size()); }
};

/// Max-pools the region into out_h x out_w bins. Bin edges come from rounding
/// the linear interpolation of the region extent; an empty bin takes the
/// nearest cell. Backward routes each output gradient to its argmax cell
/// (ties to the smallest row-major index). The region is clamped into the
/// map; empty after clamping is an error.
Tensor roi_max_pool(const Tensor& fmap, const IntRect& region, int out_h, int out_w);

/// pad_box each context pad, map to feature cells, pool to out x out.
BranchFeatures multi_context_pool(const Tensor& fmap, const Box& b, const ContextSet& ctx,
                                  int stride, int out);

/// Bin edge positions (out+1 of them) over extent cells, before empty-bin
/// expansion. Exposed so checks can enumerate bins the same way.
std::vector<int> pool_bin_edges(int extent, int out);

}  // namespace gbd
