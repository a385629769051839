#include "gbdnet/proposals.hpp"

#include <algorithm>

#include "gbdnet/head.hpp"

namespace gbd {

namespace {

// Class + offsets against the best-overlapping GT; background under 0.5.
void label_proposal(Proposal* p, const std::vector<GroundTruth>& gts) {
  double best = 0.0;
  const GroundTruth* match = nullptr;
  for (const GroundTruth& g : gts) {
    const double v = iou(p->box, g.box);
    if (v > best) {
      best = v;
      match = &g;
    }
  }
  if (match && best >= 0.5) {
    p->label = match->class_id;
    p->offsets = encode_offsets(p->box, match->box);
  } else {
    p->label = 0;
  }
}

}  // namespace

std::vector<Proposal> gen_proposals(const std::vector<GroundTruth>& gts,
                                    const ProposalSpec& spec, int image_w, int image_h,
                                    Rng& rng) {
  std::vector<Proposal> out;
  const ShakeSpec shake{0, spec.alpha_range};
  for (const GroundTruth& g : gts) {
    const CornerRect r = to_corners(g.box);
    for (int j = 0; j < spec.jitter_per_gt; ++j) {
      std::array<double, 4> alphas;
      for (double& a : alphas) a = rng.uniform(-spec.alpha_range, spec.alpha_range);
      Proposal p;
      p.box = to_center(shake_box(r, shake, alphas));
      label_proposal(&p, gts);
      out.push_back(p);
    }
  }
  for (int j = 0; j < spec.background_per_image; ++j) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      Box b;
      b.w = rng.uniform(spec.bg_min_size, spec.bg_max_size);
      b.h = rng.uniform(spec.bg_min_size, spec.bg_max_size);
      b.x = rng.uniform(b.w / 2.0, image_w - b.w / 2.0);
      b.y = rng.uniform(b.h / 2.0, image_h - b.h / 2.0);
      double best = 0.0;
      for (const GroundTruth& g : gts) best = std::max(best, iou(b, g.box));
      if (best < 0.5) {
        Proposal p;
        p.box = b;
        p.label = 0;
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

std::vector<Box> grid_proposals(int image_w, int image_h,
                                const std::vector<double>& sizes, int step) {
  if (step < 1) throw DomainError("grid_proposals: step must be >= 1");
  std::vector<Box> out;
  for (double s : sizes) {
    if (s <= 0) throw DomainError("grid_proposals: sizes must be positive");
    for (double cy = s / 2.0; cy <= image_h - s / 2.0; cy += step)
      for (double cx = s / 2.0; cx <= image_w - s / 2.0; cx += step)
        out.push_back({cx, cy, s, s});
  }
  return out;
}

}  // namespace gbd
