#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gbd {

struct RunConfig {
  // model
  std::vector<double> pads{-0.2, 0.2, 0.8, 1.7};
  std::string gbd_version = "v2";  // none | v1 | v1-gated | v2
  double beta = 0.1;
  std::string pool_source = "features";  // features | pixels
  int roi_out = 7;
  int hidden_dim = 64;
  int trunk_channels1 = 16;
  int trunk_channels2 = 32;
  int pixel_pool_scale = 2;  // pixel crops warp to scale * roi_out * trunk stride
  int num_classes = 4;

  // training
  double lr = 0.0005;
  double weight_decay = 0.0005;
  int batch_size = 8;
  std::uint64_t seed = 0;
  int epochs = 5;
  int rois_per_image = 6;
  int max_train_images = 0;  // 0 = use every image

  // proposals
  int jitter_per_gt = 8;
  int background_per_image = 4;
  double proposal_alpha = 0.25;

  // test-time behaviour
  double nms_thresh = 0.4;
  std::vector<double> pyramid_scales{64.0};
  double canonical_area = 576.0;
  bool flip = false;
  bool context_weight_search = false;
  double context_weight = 0.0;
  double score_min = 0.05;
  bool box_voting = true;
  double vote_iou = 0.5;
  double fp_top_fraction = 1.0;
};

/// Strict parse: unknown keys are rejected, missing keys keep defaults.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical serialization (sorted keys); stable across runs.
std::string config_to_json(const RunConfig& cfg);

/// Range and enum checks; throws DomainError on a bad field.
void validate_config(const RunConfig& cfg);

}  // namespace gbd
