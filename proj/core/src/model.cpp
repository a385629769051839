#include "gbdnet/model.hpp"

#include <cmath>

#include "gbdnet/error.hpp"
#include "gbdnet/roi_pool.hpp"

namespace gbd {

Model build_model(const RunConfig& cfg) {
  validate_config(cfg);
  Model m;
  m.config = cfg;
  m.ctx.pads = cfg.pads;
  m.store = ParamStore(cfg.seed);
  m.trunk = init_trunk_params(m.store, "trunk", cfg.trunk_channels1, cfg.trunk_channels2);
  m.gbd = init_gbd_params(m.store, "gbd", cfg.trunk_channels2,
                          static_cast<int>(cfg.pads.size()), cfg.beta,
                          gbd_version_from_string(cfg.gbd_version));
  m.head = init_head_params(m.store, "head", cfg.trunk_channels2, cfg.roi_out,
                            cfg.hidden_dim, cfg.num_classes);
  return m;
}

Model model_from_checkpoint(const LoadedCheckpoint& ck) {
  Model m = build_model(ck.config);
  if (m.store.size() != ck.params.size())
    throw FormatError("checkpoint holds " + std::to_string(ck.params.size()) +
                      " tensors, model wants " + std::to_string(m.store.size()));
  for (const auto& [name, t] : m.store.all()) {
    if (!ck.params.has(name)) throw FormatError("checkpoint is missing tensor " + name);
    const Tensor src = ck.params.get(name);
    if (!(src.shape() == t.shape()))
      throw FormatError("checkpoint tensor " + name + " has shape " + src.shape().str() +
                        ", model wants " + t.shape().str());
    Tensor dst = t;
    dst.values() = src.node()->vals();
  }
  return m;
}

ImageContext prepare_image(const Model& m, const Image& img, bool pyramid) {
  ImageContext ic;
  ic.image = &img;
  if (m.config.pool_source == "pixels") {
    ic.pixels = true;
    return ic;
  }
  const double shorter = static_cast<double>(std::min(img.w, img.h));
  std::vector<double> scales = pyramid ? m.config.pyramid_scales
                                       : std::vector<double>{shorter};
  for (double target : scales) {
    const double f = target / shorter;
    Image scaled = (f == 1.0) ? img
                              : resize_bilinear(img,
                                                std::max(1, static_cast<int>(std::lround(img.w * f))),
                                                std::max(1, static_cast<int>(std::lround(img.h * f))));
    ic.fmaps.push_back(trunk_forward(image_to_tensor(scaled), m.trunk));
    ic.factors.push_back(f);
  }
  return ic;
}

namespace {

BranchFeatures pixel_branches(const Model& m, const Image& img, const Box& b) {
  const int warp = m.config.pixel_pool_scale * m.config.roi_out * kTrunkStride;
  BranchFeatures bf;
  bf.h.reserve(m.ctx.pads.size());
  for (double p : m.ctx.pads) {
    const Image crop = crop_resize(img, to_corners(pad_box(b, p)), warp, warp);
    Tensor fmap = trunk_forward(image_to_tensor(crop), m.trunk);
    const Shape fs = fmap.shape();
    bf.h.push_back(roi_max_pool(fmap, {0, 0, fs.w, fs.h}, m.config.roi_out, m.config.roi_out));
  }
  return bf;
}

}  // namespace

BranchFeatures branch_features(const Model& m, const ImageContext& ic, const Box& b) {
  if (ic.pixels) return pixel_branches(m, *ic.image, b);
  size_t level = 0;
  if (ic.fmaps.size() > 1) {
    const double shorter = static_cast<double>(std::min(ic.image->w, ic.image->h));
    level = static_cast<size_t>(pyramid_scale_select(b, m.config.pyramid_scales,
                                                     m.config.canonical_area, shorter));
  }
  const double f = ic.factors[level];
  const Box scaled{b.x * f, b.y * f, b.w * f, b.h * f};
  return multi_context_pool(ic.fmaps[level], scaled, m.ctx, kTrunkStride, m.config.roi_out);
}

HeadOutput forward_box(const Model& m, const ImageContext& ic, const Box& b) {
  BranchFeatures h0 = branch_features(m, ic, b);
  BranchFeatures h3 = gbd_forward(h0, m.gbd);
  return head_forward(h3, m.head);
}

}  // namespace gbd
