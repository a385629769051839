#include "gbdnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "gbdnet/error.hpp"

namespace gbd {

namespace {

bool rank_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.image_id != b.image_id) return a.image_id < b.image_id;
  if (a.box.x != b.box.x) return a.box.x < b.box.x;
  return a.box.y < b.box.y;
}

// Marks each detection TP/FP by greedy same-class matching, highest score
// first. Returns flags aligned with dets.
std::vector<bool> match_detections(const std::vector<Detection>& dets,
                                   const std::vector<GroundTruth>& gts,
                                   double iou_thresh) {
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t i, size_t j) { return rank_before(dets[i], dets[j]); });
  std::vector<bool> gt_used(gts.size(), false);
  std::vector<bool> tp(dets.size(), false);
  for (size_t i : order) {
    const Detection& d = dets[i];
    double best = 0.0;
    int best_gt = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (gt_used[g] || gts[g].class_id != d.class_id || gts[g].image_id != d.image_id)
        continue;
      const double v = iou(d.box, gts[g].box);
      if (v > best) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0 && best >= iou_thresh) {
      gt_used[best_gt] = true;
      tp[i] = true;
    }
  }
  return tp;
}

}  // namespace

EvalResult evaluate_map(const std::vector<Detection>& dets,
                        const std::vector<GroundTruth>& gts, double iou_thresh) {
  std::set<int> classes;
  for (const GroundTruth& g : gts) classes.insert(g.class_id);

  const std::vector<bool> tp = match_detections(dets, gts, iou_thresh);

  EvalResult result;
  for (int cls : classes) {
    std::vector<size_t> order;
    for (size_t i = 0; i < dets.size(); ++i)
      if (dets[i].class_id == cls) order.push_back(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t i, size_t j) { return rank_before(dets[i], dets[j]); });
    std::int64_t n_gt = 0;
    for (const GroundTruth& g : gts)
      if (g.class_id == cls) ++n_gt;

    // Precision/recall at every rank, then the all-points interpolated area.
    std::vector<double> precision(order.size()), recall(order.size());
    std::int64_t tps = 0;
    for (size_t r = 0; r < order.size(); ++r) {
      if (tp[order[r]]) ++tps;
      precision[r] = static_cast<double>(tps) / static_cast<double>(r + 1);
      recall[r] = static_cast<double>(tps) / static_cast<double>(n_gt);
    }
    double ap = 0.0;
    double envelope = 0.0;
    for (size_t r = order.size(); r-- > 0;) {
      envelope = std::max(envelope, precision[r]);
      const double prev_recall = r == 0 ? 0.0 : recall[r - 1];
      if (recall[r] > prev_recall) ap += (recall[r] - prev_recall) * envelope;
    }
    result.per_class_ap[cls] = ap;
  }

  if (!result.per_class_ap.empty()) {
    double sum = 0.0;
    for (const auto& [cls, ap] : result.per_class_ap) sum += ap;
    result.map = sum / static_cast<double>(result.per_class_ap.size());
  }
  return result;
}

std::array<double, 3> fp_analysis(const std::vector<Detection>& dets,
                                  const std::vector<GroundTruth>& gts,
                                  double top_fraction, double iou_thresh) {
  if (top_fraction <= 0.0 || top_fraction > 1.0)
    throw DomainError("fp_analysis: top_fraction " + std::to_string(top_fraction) +
                      " outside (0, 1]");
  const std::vector<bool> tp = match_detections(dets, gts, iou_thresh);
  std::vector<size_t> fps;
  for (size_t i = 0; i < dets.size(); ++i)
    if (!tp[i]) fps.push_back(i);
  std::stable_sort(fps.begin(), fps.end(),
                   [&](size_t i, size_t j) { return rank_before(dets[i], dets[j]); });
  const size_t keep = std::min(
      fps.size(),
      static_cast<size_t>(std::ceil(top_fraction * static_cast<double>(fps.size()))));
  fps.resize(keep);

  std::array<double, 3> counts{0.0, 0.0, 0.0};
  for (size_t i : fps) {
    const Detection& d = dets[i];
    double same_best = 0.0, other_best = 0.0;
    for (const GroundTruth& g : gts) {
      if (g.image_id != d.image_id) continue;
      const double v = iou(d.box, g.box);
      if (g.class_id == d.class_id)
        same_best = std::max(same_best, v);
      else
        other_best = std::max(other_best, v);
    }
    if (same_best >= 0.1 && same_best < iou_thresh)
      counts[0] += 1.0;
    else if (other_best >= 0.1)
      counts[1] += 1.0;
    else
      counts[2] += 1.0;
  }
  const double total = counts[0] + counts[1] + counts[2];
  if (total > 0.0)
    for (double& c : counts) c /= total;
  return counts;
}

}  // namespace gbd
