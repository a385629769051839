#include "gbdnet/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

#include "gbdnet/box.hpp"
#include "gbdnet/error.hpp"
#include "gbdnet/gbd.hpp"

namespace gbd {

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& j, const char* key, T* out) {
  if (j.contains(key)) *out = j.at(key).get<T>();
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config is not valid json: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("config root must be a json object");

  static const std::set<std::string> known = {
      "pads", "gbd_version", "beta", "pool_source", "roi_out", "hidden_dim",
      "trunk_channels1", "trunk_channels2", "pixel_pool_scale", "num_classes",
      "lr", "weight_decay", "batch_size", "seed", "epochs", "rois_per_image",
      "max_train_images", "jitter_per_gt", "background_per_image", "proposal_alpha",
      "nms_thresh", "pyramid_scales", "canonical_area", "flip", "context_weight_search",
      "context_weight", "score_min", "box_voting", "vote_iou", "fp_top_fraction"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw FormatError("unknown config key: " + key);

  RunConfig cfg;
  read_field(j, "pads", &cfg.pads);
  read_field(j, "gbd_version", &cfg.gbd_version);
  read_field(j, "beta", &cfg.beta);
  read_field(j, "pool_source", &cfg.pool_source);
  read_field(j, "roi_out", &cfg.roi_out);
  read_field(j, "hidden_dim", &cfg.hidden_dim);
  read_field(j, "trunk_channels1", &cfg.trunk_channels1);
  read_field(j, "trunk_channels2", &cfg.trunk_channels2);
  read_field(j, "pixel_pool_scale", &cfg.pixel_pool_scale);
  read_field(j, "num_classes", &cfg.num_classes);
  read_field(j, "lr", &cfg.lr);
  read_field(j, "weight_decay", &cfg.weight_decay);
  read_field(j, "batch_size", &cfg.batch_size);
  read_field(j, "seed", &cfg.seed);
  read_field(j, "epochs", &cfg.epochs);
  read_field(j, "rois_per_image", &cfg.rois_per_image);
  read_field(j, "max_train_images", &cfg.max_train_images);
  read_field(j, "jitter_per_gt", &cfg.jitter_per_gt);
  read_field(j, "background_per_image", &cfg.background_per_image);
  read_field(j, "proposal_alpha", &cfg.proposal_alpha);
  read_field(j, "nms_thresh", &cfg.nms_thresh);
  read_field(j, "pyramid_scales", &cfg.pyramid_scales);
  read_field(j, "canonical_area", &cfg.canonical_area);
  read_field(j, "flip", &cfg.flip);
  read_field(j, "context_weight_search", &cfg.context_weight_search);
  read_field(j, "context_weight", &cfg.context_weight);
  read_field(j, "score_min", &cfg.score_min);
  read_field(j, "box_voting", &cfg.box_voting);
  read_field(j, "vote_iou", &cfg.vote_iou);
  read_field(j, "fp_top_fraction", &cfg.fp_top_fraction);
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

std::string config_to_json(const RunConfig& cfg) {
  json j;
  j["pads"] = cfg.pads;
  j["gbd_version"] = cfg.gbd_version;
  j["beta"] = cfg.beta;
  j["pool_source"] = cfg.pool_source;
  j["roi_out"] = cfg.roi_out;
  j["hidden_dim"] = cfg.hidden_dim;
  j["trunk_channels1"] = cfg.trunk_channels1;
  j["trunk_channels2"] = cfg.trunk_channels2;
  j["pixel_pool_scale"] = cfg.pixel_pool_scale;
  j["num_classes"] = cfg.num_classes;
  j["lr"] = cfg.lr;
  j["weight_decay"] = cfg.weight_decay;
  j["batch_size"] = cfg.batch_size;
  j["seed"] = cfg.seed;
  j["epochs"] = cfg.epochs;
  j["rois_per_image"] = cfg.rois_per_image;
  j["max_train_images"] = cfg.max_train_images;
  j["jitter_per_gt"] = cfg.jitter_per_gt;
  j["background_per_image"] = cfg.background_per_image;
  j["proposal_alpha"] = cfg.proposal_alpha;
  j["nms_thresh"] = cfg.nms_thresh;
  j["pyramid_scales"] = cfg.pyramid_scales;
  j["canonical_area"] = cfg.canonical_area;
  j["flip"] = cfg.flip;
  j["context_weight_search"] = cfg.context_weight_search;
  j["context_weight"] = cfg.context_weight;
  j["score_min"] = cfg.score_min;
  j["box_voting"] = cfg.box_voting;
  j["vote_iou"] = cfg.vote_iou;
  j["fp_top_fraction"] = cfg.fp_top_fraction;
  return j.dump(2);
}

void validate_config(const RunConfig& cfg) {
  ContextSet ctx;
  ctx.pads = cfg.pads;
  validate_context_set(ctx);
  gbd_version_from_string(cfg.gbd_version);
  if (cfg.pool_source != "features" && cfg.pool_source != "pixels")
    throw DomainError("pool_source must be features or pixels, got " + cfg.pool_source);
  if (cfg.nms_thresh < 0.0 || cfg.nms_thresh > 1.0)
    throw DomainError("nms_thresh must lie in [0, 1]");
  if (cfg.roi_out < 1) throw DomainError("roi_out must be >= 1");
  if (cfg.hidden_dim < 1) throw DomainError("hidden_dim must be >= 1");
  if (cfg.trunk_channels1 < 1 || cfg.trunk_channels2 < 1)
    throw DomainError("trunk channel counts must be >= 1");
  if (cfg.pixel_pool_scale < 1) throw DomainError("pixel_pool_scale must be >= 1");
  if (cfg.num_classes < 1) throw DomainError("num_classes must be >= 1");
  if (cfg.batch_size < 1) throw DomainError("batch_size must be >= 1");
  if (cfg.epochs < 0) throw DomainError("epochs must be >= 0");
  if (cfg.rois_per_image < 1) throw DomainError("rois_per_image must be >= 1");
  if (cfg.pyramid_scales.empty()) throw DomainError("pyramid_scales must be nonempty");
  for (double s : cfg.pyramid_scales)
    if (s <= 0) throw DomainError("pyramid_scales must be positive");
  if (cfg.canonical_area <= 0.0) throw DomainError("canonical_area must be positive");
  if (cfg.context_weight < 0.0 || cfg.context_weight > 1.0)
    throw DomainError("context_weight must lie in [0, 1]");
  if (cfg.vote_iou < 0.0 || cfg.vote_iou > 1.0)
    throw DomainError("vote_iou must lie in [0, 1]");
  if (cfg.fp_top_fraction <= 0.0 || cfg.fp_top_fraction > 1.0)
    throw DomainError("fp_top_fraction must lie in (0, 1]");
  if (cfg.score_min < 0.0 || cfg.score_min >= 1.0)
    throw DomainError("score_min must lie in [0, 1)");
}

}  // namespace gbd
