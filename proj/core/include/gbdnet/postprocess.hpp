#pragma once

#include <functional>
#include <vector>

#include "gbdnet/box.hpp"

namespace gbd {

struct Detection {
  int image_id = 0;
  int class_id = 0;  // foreground classes start at 1
  double score = 0.0;
  Box box;
};

/// Greedy per-class suppression: walk detections from the highest score,
/// drop any same-class box with IoU strictly above thresh to one already
/// kept. Ordering ties break by box x, then y, then input position. Kept
/// detections come back in that walk order.
std::vector<Detection> nms(const std::vector<Detection>& dets, double thresh);

/// Replaces each kept box by the score-weighted mean (corner coordinates) of
/// the same-class pool boxes overlapping it at IoU >= iou_thresh. Scores are
/// untouched. Zero total weight leaves the box alone.
std::vector<Detection> box_voting(const std::vector<Detection>& kept,
                                  const std::vector<Detection>& pool,
                                  double iou_thresh = 0.5);

/// One proposal's head output after decoding: class probabilities
/// (background first) and one decoded box per foreground class.
struct CandidateOutput {
  std::vector<double> probs;
  std::vector<Box> boxes;
};

/// Averages the original pass with a horizontally flipped pass; flipped
/// boxes are mapped back through flip_box first. Candidates must align.
std::vector<CandidateOutput> fuse_flip(const std::vector<CandidateOutput>& orig,
                                       const std::vector<CandidateOutput>& flipped,
                                       int image_w);

/// (1 - w) * detection score + w * whole-image score, per class.
std::vector<double> fuse_context(const std::vector<double>& det_scores,
                                 const std::vector<double>& image_scores, double w);

/// One proposal's pre-decode head output, for model ensembling.
struct RawOutput {
  std::vector<double> probs;
  std::vector<double> offsets;  // 4 per foreground class
};

/// Arithmetic mean of probs and offsets across models over identical
/// candidate lists.
std::vector<RawOutput> ensemble_average(const std::vector<std::vector<RawOutput>>& models);

/// Forward greedy subset selection: grow from empty, each round adding the
/// model that raises the subset score the most; stop on no strict
/// improvement or k_max. Ties pick the lowest model index. score_of receives
/// sorted model indices.
std::vector<int> greedy_model_select(int n_models,
                                     const std::function<double(const std::vector<int>&)>& score_of,
                                     int k_max);

}  // namespace gbd
