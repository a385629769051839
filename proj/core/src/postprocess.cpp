#include "gbdnet/postprocess.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "gbdnet/error.hpp"

namespace gbd {

namespace {

// Deterministic ranking shared by nms and the evaluator.
bool rank_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.box.x != b.box.x) return a.box.x < b.box.x;
  return a.box.y < b.box.y;
}

}  // namespace

std::vector<Detection> nms(const std::vector<Detection>& dets, double thresh) {
  if (thresh < 0.0 || thresh > 1.0)
    throw DomainError("nms: threshold " + std::to_string(thresh) + " outside [0, 1]");
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t i, size_t j) { return rank_before(dets[i], dets[j]); });
  std::vector<Detection> kept;
  for (size_t i : order) {
    bool suppressed = false;
    for (const Detection& k : kept) {
      if (k.class_id == dets[i].class_id && k.image_id == dets[i].image_id &&
          iou(k.box, dets[i].box) > thresh) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(dets[i]);
  }
  return kept;
}

std::vector<Detection> box_voting(const std::vector<Detection>& kept,
                                  const std::vector<Detection>& pool,
                                  double iou_thresh) {
  std::vector<Detection> out = kept;
  for (Detection& d : out) {
    double weight = 0.0;
    CornerRect acc{0, 0, 0, 0};
    for (const Detection& p : pool) {
      if (p.class_id != d.class_id || p.image_id != d.image_id) continue;
      if (iou(p.box, d.box) < iou_thresh) continue;
      const CornerRect r = to_corners(p.box);
      acc.x1 += p.score * r.x1;
      acc.y1 += p.score * r.y1;
      acc.x2 += p.score * r.x2;
      acc.y2 += p.score * r.y2;
      weight += p.score;
    }
    if (weight > 0.0)
      d.box = to_center({acc.x1 / weight, acc.y1 / weight, acc.x2 / weight, acc.y2 / weight});
  }
  return out;
}

std::vector<CandidateOutput> fuse_flip(const std::vector<CandidateOutput>& orig,
                                       const std::vector<CandidateOutput>& flipped,
                                       int image_w) {
  if (orig.size() != flipped.size())
    throw ContractError("fuse_flip: candidate counts differ: " + std::to_string(orig.size()) +
                        " vs " + std::to_string(flipped.size()));
  std::vector<CandidateOutput> fused(orig.size());
  for (size_t i = 0; i < orig.size(); ++i) {
    const CandidateOutput& a = orig[i];
    const CandidateOutput& b = flipped[i];
    if (a.probs.size() != b.probs.size() || a.boxes.size() != b.boxes.size())
      throw ContractError("fuse_flip: candidate " + std::to_string(i) + " is misaligned");
    CandidateOutput& f = fused[i];
    f.probs.resize(a.probs.size());
    for (size_t c = 0; c < a.probs.size(); ++c) f.probs[c] = 0.5 * (a.probs[c] + b.probs[c]);
    f.boxes.resize(a.boxes.size());
    for (size_t c = 0; c < a.boxes.size(); ++c) {
      const Box back = flip_box(b.boxes[c], image_w);
      f.boxes[c] = {0.5 * (a.boxes[c].x + back.x), 0.5 * (a.boxes[c].y + back.y),
                    0.5 * (a.boxes[c].w + back.w), 0.5 * (a.boxes[c].h + back.h)};
    }
  }
  return fused;
}

std::vector<double> fuse_context(const std::vector<double>& det_scores,
                                 const std::vector<double>& image_scores, double w) {
  if (w < 0.0 || w > 1.0)
    throw DomainError("fuse_context: weight " + std::to_string(w) + " outside [0, 1]");
  if (det_scores.size() != image_scores.size())
    throw ContractError("fuse_context: class counts differ");
  std::vector<double> fused(det_scores.size());
  for (size_t i = 0; i < det_scores.size(); ++i)
    fused[i] = (1.0 - w) * det_scores[i] + w * image_scores[i];
  return fused;
}

std::vector<RawOutput> ensemble_average(const std::vector<std::vector<RawOutput>>& models) {
  if (models.empty()) throw ContractError("ensemble_average: no models");
  const std::vector<RawOutput>& first = models[0];
  for (const auto& m : models)
    if (m.size() != first.size())
      throw ContractError("ensemble_average: candidate counts differ across models");
  std::vector<RawOutput> avg(first.size());
  const double inv = 1.0 / static_cast<double>(models.size());
  for (size_t i = 0; i < first.size(); ++i) {
    avg[i].probs.assign(first[i].probs.size(), 0.0);
    avg[i].offsets.assign(first[i].offsets.size(), 0.0);
    for (const auto& m : models) {
      if (m[i].probs.size() != first[i].probs.size() ||
          m[i].offsets.size() != first[i].offsets.size())
        throw ContractError("ensemble_average: candidate " + std::to_string(i) +
                            " is misaligned");
      for (size_t c = 0; c < avg[i].probs.size(); ++c) avg[i].probs[c] += m[i].probs[c];
      for (size_t c = 0; c < avg[i].offsets.size(); ++c) avg[i].offsets[c] += m[i].offsets[c];
    }
    for (double& v : avg[i].probs) v *= inv;
    for (double& v : avg[i].offsets) v *= inv;
  }
  return avg;
}

std::vector<int> greedy_model_select(int n_models,
                                     const std::function<double(const std::vector<int>&)>& score_of,
                                     int k_max) {
  std::vector<int> selected;
  std::vector<bool> used(static_cast<size_t>(n_models), false);
  double best_score = 0.0;
  while (static_cast<int>(selected.size()) < k_max) {
    int pick = -1;
    double pick_score = best_score;
    for (int m = 0; m < n_models; ++m) {
      if (used[m]) continue;
      std::vector<int> trial = selected;
      trial.push_back(m);
      std::sort(trial.begin(), trial.end());
      const double s = score_of(trial);
      if (s > pick_score) {
        pick_score = s;
        pick = m;
      }
    }
    if (pick < 0) break;
    used[pick] = true;
    selected.push_back(pick);
    std::sort(selected.begin(), selected.end());
    best_score = pick_score;
  }
  return selected;
}

}  // namespace gbd
