#pragma once

#include <array>
#include <vector>

#include "gbdnet/eval.hpp"
#include "gbdnet/rng.hpp"

namespace gbd {

struct ProposalSpec {
  int jitter_per_gt = 8;
  int background_per_image = 4;
  double alpha_range = 0.25;  // corner shake, relative to box size
  double bg_min_size = 8.0;
  double bg_max_size = 32.0;
};

struct Proposal {
  Box box;
  int label = 0;                       // 0 = background
  std::array<double, 4> offsets{};     // valid when label >= 1
};

/// Jittered copies of each ground-truth box plus random background boxes.
/// A proposal takes the class of its best-overlapping GT when that IoU
/// reaches 0.5, and background otherwise.
std::vector<Proposal> gen_proposals(const std::vector<GroundTruth>& gts,
                                    const ProposalSpec& spec, int image_w, int image_h,
                                    Rng& rng);

/// Dense sliding-window boxes for images without annotations.
std::vector<Box> grid_proposals(int image_w, int image_h,
                                const std::vector<double>& sizes, int step);

}  // namespace gbd
