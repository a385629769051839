#pragma once

#include <vector>

#include "gbdnet/checkpoint.hpp"
#include "gbdnet/config.hpp"
#include "gbdnet/head.hpp"
#include "gbdnet/image.hpp"

namespace gbd {

struct Model {
  RunConfig config;
  ParamStore store;
  TrunkParams trunk;
  GbdParams gbd;
  HeadParams head;
  ContextSet ctx;
};

/// Fresh parameters seeded from config.seed. Every tensor is seeded by its
/// own name, so configs that share trunk/head structure start from the same
/// trunk/head values regardless of which GBD parameters exist.
Model build_model(const RunConfig& cfg);

/// Rebuilds the structure from the stored config and overwrites every
/// parameter with the stored values; name or shape mismatch is an error.
Model model_from_checkpoint(const LoadedCheckpoint& ck);

/// Feature maps (and resize factors) a forward pass can pool from. In
/// features mode one entry per pyramid level; pixels mode keeps only the
/// source image and crops per box.
struct ImageContext {
  std::vector<Tensor> fmaps;
  std::vector<double> factors;
  const Image* image = nullptr;
  bool pixels = false;
};

/// pyramid=false uses the image's native scale only.
ImageContext prepare_image(const Model& m, const Image& img, bool pyramid);

/// Pooled per-pad features for one box, before message passing.
BranchFeatures branch_features(const Model& m, const ImageContext& ic, const Box& b);

/// branch_features -> gbd layer -> shared head.
HeadOutput forward_box(const Model& m, const ImageContext& ic, const Box& b);

struct GradSuiteCase {
  std::string name;
  double max_rel_err = 0.0;
  std::string worst;
  std::int64_t checked = 0;
  bool retried = false;
};

/// Finite-difference sweep over every differentiable op plus both full GBD
/// layers and the head. A case that trips the tolerance is re-measured once
/// at a shifted seed, which filters out measurements that straddle a relu
/// kink; a real backward bug fails both times.
std::vector<GradSuiteCase> run_gradient_suite(int n_seeds, double eps = 1e-6,
                                              double tol = 1e-4);

}  // namespace gbd
