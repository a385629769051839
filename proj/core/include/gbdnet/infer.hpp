#pragma once

#include <string>
#include <vector>

#include "gbdnet/eval.hpp"
#include "gbdnet/model.hpp"
#include "gbdnet/synthetic.hpp"

namespace gbd {

/// Test-time switches layered over the model's config. A negative nms_thresh
/// defers to the config's value.
struct EvalOptions {
  bool flip = false;
  bool pyramid = false;
  bool context = false;  // fuse whole-image class scores into box scores
  double nms_thresh = -1.0;
};

EvalOptions eval_options_from_config(const RunConfig& cfg);

/// One image's scored candidates before any cross-candidate step: per
/// candidate the class probabilities and one decoded box per class, plus the
/// whole-image pass used for context fusion (empty unless requested).
struct ScoredImage {
  std::vector<CandidateOutput> cands;
  std::vector<double> image_probs;
};

ScoredImage score_image(const Model& m, const Image& img, const std::vector<Box>& cands,
                        const EvalOptions& opt);

/// Candidate boxes for an annotated scene: jitters of the GT boxes plus
/// background boxes, seeded by image id alone so every model under
/// comparison scores the same boxes.
std::vector<Box> eval_candidates(const SyntheticScene& scene, const RunConfig& cfg, int image_id);

/// Context-fused scores thresholded into per-class detections.
std::vector<Detection> decode_detections(const ScoredImage& si, int image_id, double context_w,
                                         const RunConfig& cfg);

/// Per-class NMS then, when configured, box voting over the pre-suppression
/// pool.
std::vector<Detection> suppress(const std::vector<Detection>& dets, const RunConfig& cfg,
                                double nms_thresh);

struct EvalRun {
  EvalResult result;
  double context_weight = 0.0;  // the weight the final detections used
  std::vector<Detection> detections;
};

/// Scores every scene once, then decodes + suppresses + scores the mAP.
/// With context_weight_search set, scans w in {0, 0.05, ..., 1} and keeps
/// the best mAP (ties to the smaller weight).
EvalRun eval_dataset(const Model& m, const Dataset& ds, const EvalOptions& opt);

/// Detections for an unannotated image from dense sliding-window candidates.
std::vector<Detection> infer_image(const Model& m, const Image& img, const EvalOptions& opt,
                                   int image_id = 0);

/// One JSON object per line: image_id, class_id, score, box [x1,y1,x2,y2].
std::string detections_to_jsonl(const std::vector<Detection>& dets);

}  // namespace gbd
