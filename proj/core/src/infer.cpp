#include "gbdnet/infer.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "json.hpp"

#include "gbdnet/proposals.hpp"

namespace gbd {

namespace {

Box whole_image_box(const Image& img) {
  return to_center({-0.5, -0.5, img.w - 0.5, img.h - 0.5});
}

CandidateOutput run_candidate(const Model& m, const ImageContext& ic, const Box& b) {
  const HeadOutput out = forward_box(m, ic, b);
  CandidateOutput co;
  co.probs = out.probs.values();
  const int num_classes = m.head.num_classes;
  co.boxes.reserve(static_cast<std::size_t>(num_classes));
  const std::vector<double>& t = out.offsets.values();
  for (int c = 0; c < num_classes; ++c) {
    co.boxes.push_back(decode_offsets(b, {t[4 * c + 0], t[4 * c + 1], t[4 * c + 2], t[4 * c + 3]}));
  }
  return co;
}

std::vector<CandidateOutput> run_candidates(const Model& m, const Image& img,
                                            const std::vector<Box>& cands, bool pyramid) {
  const ImageContext ic = prepare_image(m, img, pyramid);
  std::vector<CandidateOutput> out;
  out.reserve(cands.size());
  for (const Box& b : cands) out.push_back(run_candidate(m, ic, b));
  return out;
}

}  // namespace

EvalOptions eval_options_from_config(const RunConfig& cfg) {
  EvalOptions opt;
  opt.flip = cfg.flip;
  opt.context = cfg.context_weight_search || cfg.context_weight > 0.0;
  opt.nms_thresh = cfg.nms_thresh;
  return opt;
}

ScoredImage score_image(const Model& m, const Image& img, const std::vector<Box>& cands,
                        const EvalOptions& opt) {
  std::vector<Box> boxes = cands;
  if (opt.context) boxes.push_back(whole_image_box(img));

  std::vector<CandidateOutput> scored = run_candidates(m, img, boxes, opt.pyramid);
  if (opt.flip) {
    const Image mirrored = flip_horizontal(img);
    std::vector<Box> flipped;
    flipped.reserve(boxes.size());
    for (const Box& b : boxes) flipped.push_back(flip_box(b, img.w));
    scored = fuse_flip(scored, run_candidates(m, mirrored, flipped, opt.pyramid), img.w);
  }

  ScoredImage si;
  if (opt.context) {
    si.image_probs = scored.back().probs;
    scored.pop_back();
  }
  si.cands = std::move(scored);
  return si;
}

std::vector<Box> eval_candidates(const SyntheticScene& scene, const RunConfig& cfg, int image_id) {
  ProposalSpec spec;
  spec.jitter_per_gt = cfg.jitter_per_gt;
  spec.background_per_image = cfg.background_per_image;
  // Test-time candidates stand in for a high-quality proposal stage, so the
  // jitter stays tight; the wide training jitter is a training-side choice.
  spec.alpha_range = 0.015;
  Rng rng(derive_seed(0xe7a1c0deULL, "eval." + std::to_string(image_id)));
  std::vector<Box> boxes;
  for (const Proposal& p : gen_proposals(scene.gts, spec, scene.image.w, scene.image.h, rng)) {
    boxes.push_back(p.box);
  }
  return boxes;
}

std::vector<Detection> decode_detections(const ScoredImage& si, int image_id, double context_w,
                                         const RunConfig& cfg) {
  std::vector<Detection> dets;
  for (const CandidateOutput& co : si.cands) {
    const std::vector<double> scores =
        context_w > 0.0 ? fuse_context(co.probs, si.image_probs, context_w) : co.probs;
    for (int c = 1; c < static_cast<int>(scores.size()); ++c) {
      if (scores[static_cast<std::size_t>(c)] < cfg.score_min) continue;
      dets.push_back({image_id, c, scores[static_cast<std::size_t>(c)],
                      co.boxes[static_cast<std::size_t>(c - 1)]});
    }
  }
  return dets;
}

std::vector<Detection> suppress(const std::vector<Detection>& dets, const RunConfig& cfg,
                                double nms_thresh) {
  std::vector<Detection> kept = nms(dets, nms_thresh);
  if (cfg.box_voting) kept = box_voting(kept, dets, cfg.vote_iou);
  return kept;
}

EvalRun eval_dataset(const Model& m, const Dataset& ds, const EvalOptions& opt) {
  const RunConfig& cfg = m.config;
  const double nms_thresh = opt.nms_thresh >= 0.0 ? opt.nms_thresh : cfg.nms_thresh;

  std::vector<ScoredImage> scored;
  std::vector<GroundTruth> gts;
  scored.reserve(ds.scenes.size());
  for (int i = 0; i < static_cast<int>(ds.scenes.size()); ++i) {
    const SyntheticScene& scene = ds.scenes[static_cast<std::size_t>(i)];
    scored.push_back(score_image(m, scene.image, eval_candidates(scene, cfg, i), opt));
    gts.insert(gts.end(), scene.gts.begin(), scene.gts.end());
  }

  std::vector<double> weights{0.0};
  if (opt.context) {
    if (cfg.context_weight_search) {
      weights.clear();
      for (int k = 0; k <= 20; ++k) weights.push_back(0.05 * k);
    } else {
      weights = {cfg.context_weight};
    }
  }

  EvalRun best;
  bool first = true;
  for (const double w : weights) {
    std::vector<Detection> dets;
    for (int i = 0; i < static_cast<int>(scored.size()); ++i) {
      std::vector<Detection> d = decode_detections(scored[static_cast<std::size_t>(i)], i, w, cfg);
      dets.insert(dets.end(), d.begin(), d.end());
    }
    dets = suppress(dets, cfg, nms_thresh);
    EvalResult res = evaluate_map(dets, gts);
    if (first || res.map > best.result.map) {
      best.result = res;
      best.context_weight = w;
      best.detections = std::move(dets);
      first = false;
    }
  }
  best.result.fp_fractions = fp_analysis(best.detections, gts, cfg.fp_top_fraction);
  return best;
}

std::vector<Detection> infer_image(const Model& m, const Image& img, const EvalOptions& opt,
                                   int image_id) {
  const RunConfig& cfg = m.config;
  const std::vector<Box> cands = grid_proposals(img.w, img.h, {10.0, 14.0}, 4);
  const ScoredImage si = score_image(m, img, cands, opt);
  const double w = opt.context && !cfg.context_weight_search ? cfg.context_weight : 0.0;
  std::vector<Detection> dets = decode_detections(si, image_id, w, cfg);
  return suppress(dets, cfg, opt.nms_thresh >= 0.0 ? opt.nms_thresh : cfg.nms_thresh);
}

std::string detections_to_jsonl(const std::vector<Detection>& dets) {
  std::string out;
  for (const Detection& d : dets) {
    const CornerRect r = to_corners(d.box);
    nlohmann::json j;
    j["image_id"] = d.image_id;
    j["class_id"] = d.class_id;
    j["score"] = d.score;
    j["box"] = {r.x1, r.y1, r.x2, r.y2};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace gbd
