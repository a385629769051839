#include "gbdnet/train.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>

#include "gbdnet/proposals.hpp"

namespace gbd {

namespace {

void shuffle(std::vector<int>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
}

// Roughly half foreground; background slots prefer boxes that barely touch
// any object (best IoU < 0.2) over near-miss jitters, whose crops still show
// the object and would only teach the classifier noise.
std::vector<Proposal> pick_rois(const std::vector<Proposal>& props,
                                const std::vector<GroundTruth>& gts, int want, Rng& rng) {
  std::vector<int> pos, clean_bg, near_miss;
  for (int i = 0; i < static_cast<int>(props.size()); ++i) {
    if (props[i].label >= 1) {
      pos.push_back(i);
      continue;
    }
    double best = 0.0;
    for (const GroundTruth& g : gts) best = std::max(best, iou(props[i].box, g.box));
    (best < 0.2 ? clean_bg : near_miss).push_back(i);
  }
  shuffle(pos, rng);
  shuffle(clean_bg, rng);
  shuffle(near_miss, rng);
  const int take_pos = std::min<int>(static_cast<int>(pos.size()), (want + 1) / 2);
  std::vector<int> order(pos.begin(), pos.begin() + take_pos);
  order.insert(order.end(), clean_bg.begin(), clean_bg.end());
  order.insert(order.end(), pos.begin() + take_pos, pos.end());
  order.insert(order.end(), near_miss.begin(), near_miss.end());
  if (static_cast<int>(order.size()) > want) order.resize(static_cast<std::size_t>(want));
  std::vector<Proposal> out;
  for (int i : order) out.push_back(props[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

TrainStats train_model(Model& m, const Dataset& ds, std::ostream* log) {
  const RunConfig& cfg = m.config;
  TrainStats stats;
  stats.images_used = static_cast<int>(ds.scenes.size());
  if (cfg.max_train_images > 0 && cfg.max_train_images < stats.images_used) {
    stats.images_used = cfg.max_train_images;
  }
  if (stats.images_used == 0) throw TrainingError("empty training set");

  ProposalSpec pspec;
  pspec.jitter_per_gt = cfg.jitter_per_gt;
  pspec.background_per_image = cfg.background_per_image;
  pspec.alpha_range = cfg.proposal_alpha;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Stepped decay over thirds of the run; late epochs refine instead of
    // bouncing between basins.
    double lr = cfg.lr;
    for (int third = 0; third < (3 * epoch) / std::max(1, cfg.epochs); ++third) lr *= 0.5;
    std::vector<int> order(static_cast<std::size_t>(stats.images_used));
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle." + std::to_string(epoch)));
    shuffle(order, shuffle_rng);

    double epoch_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<Tensor> image_losses;
      for (std::size_t oi = start; oi < stop; ++oi) {
        const SyntheticScene& scene = ds.scenes[static_cast<std::size_t>(order[oi])];
        Rng prng(derive_seed(cfg.seed, "prop." + std::to_string(epoch) + "." + std::to_string(order[oi])));
        const std::vector<Proposal> props =
            gen_proposals(scene.gts, pspec, scene.image.w, scene.image.h, prng);
        const std::vector<Proposal> rois = pick_rois(props, scene.gts, cfg.rois_per_image, prng);
        if (rois.empty()) continue;

        const ImageContext ic = prepare_image(m, scene.image, false);
        std::vector<Tensor> roi_losses;
        roi_losses.reserve(rois.size());
        for (const Proposal& p : rois) {
          const HeadOutput out = forward_box(m, ic, p.box);
          roi_losses.push_back(detection_loss(out.probs, out.offsets, p.label, p.offsets, 1.0));
        }
        image_losses.push_back(mean_tensors(roi_losses));
      }
      if (image_losses.empty()) continue;

      Tensor batch_loss = mean_tensors(image_losses);
      const double value = batch_loss.item();
      if (!std::isfinite(value)) {
        throw TrainingError("loss diverged at epoch " + std::to_string(epoch) + ", batch starting at image " +
                            std::to_string(start));
      }
      epoch_sum += value * static_cast<double>(image_losses.size());
      backward(batch_loss);
      m.store.sgd_step(lr, cfg.weight_decay);
    }

    const double epoch_mean = epoch_sum / static_cast<double>(stats.images_used);
    stats.epoch_loss.push_back(epoch_mean);
    if (log) {
      (*log) << "epoch " << (epoch + 1) << "/" << cfg.epochs << "  loss " << epoch_mean << "\n";
    }
  }
  return stats;
}

}  // namespace gbd
