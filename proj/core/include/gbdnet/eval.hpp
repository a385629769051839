#pragma once

#include <array>
#include <map>
#include <vector>

#include "gbdnet/postprocess.hpp"

namespace gbd {

struct GroundTruth {
  int image_id = 0;
  int class_id = 0;
  Box box;
};

struct EvalResult {
  std::map<int, double> per_class_ap;  // classes with at least one GT
  double map = 0.0;
  std::array<double, 3> fp_fractions{0.0, 0.0, 0.0};  // loc, other, bg
};

/// All-points average precision per class, averaged into mAP over the
/// classes that have ground truth. A detection matches the unmatched
/// same-class GT of its image with the highest IoU, and counts as a true
/// positive when that IoU reaches iou_thresh; detections are visited from
/// the highest score down.
EvalResult evaluate_map(const std::vector<Detection>& dets,
                        const std::vector<GroundTruth>& gts, double iou_thresh = 0.5);

/// Splits the top-scored false positives into (localization, wrong-class,
/// background) fractions: localization when the best same-class IoU sits in
/// [0.1, iou_thresh), wrong-class when some other-class IoU reaches 0.1,
/// background otherwise. top_fraction picks how many of the highest-scored
/// false positives are counted.
std::array<double, 3> fp_analysis(const std::vector<Detection>& dets,
                                  const std::vector<GroundTruth>& gts,
                                  double top_fraction, double iou_thresh = 0.5);

}  // namespace gbd
