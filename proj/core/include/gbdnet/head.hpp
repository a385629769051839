#pragma once

#include <array>
#include <string>

#include "gbdnet/box.hpp"
#include "gbdnet/gbd.hpp"
#include "gbdnet/param_store.hpp"
#include "gbdnet/roi_pool.hpp"

namespace gbd {

/// Whole-image convs ahead of roi pooling: 3 -> c1 (stride 1) -> c2 (stride 2).
struct TrunkParams {
  ConvParams conv1;
  ConvParams conv2;
  int out_channels = 0;
};

inline constexpr int kTrunkStride = 2;

TrunkParams init_trunk_params(ParamStore& store, const std::string& prefix, int c1, int c2);

Tensor trunk_forward(const Tensor& image, const TrunkParams& p);

/// Post-GBD layers shared by every branch: conv + relu, a hidden dense layer,
/// then class logits (num_classes + 1, background first) and per-class
/// offsets (4 * num_classes).
struct HeadParams {
  ConvParams conv;
  DenseParams hidden;
  DenseParams cls;
  DenseParams reg;
  int num_classes = 0;
};

HeadParams init_head_params(ParamStore& store, const std::string& prefix, int channels,
                            int roi_out, int hidden_dim, int num_classes);

struct HeadOutput {
  Tensor logits;   // (1, num_classes + 1, 1, 1), averaged over branches
  Tensor probs;    // softmax of logits
  Tensor offsets;  // (1, 4 * num_classes, 1, 1), averaged over branches
};

/// Runs the shared head over every branch and averages logits and offsets.
HeadOutput head_forward(const BranchFeatures& h3, const HeadParams& p);

/// Fast-RCNN box coding: ((gx-px)/pw, (gy-py)/ph, log(gw/pw), log(gh/ph)).
std::array<double, 4> encode_offsets(const Box& proposal, const Box& gt);
Box decode_offsets(const Box& proposal, const std::array<double, 4>& t);

/// -log t_y plus, for foreground labels, lambda times the smooth-L1 distance
/// between the targets and the predicted offsets of class y.
Tensor detection_loss(const Tensor& probs, const Tensor& offsets, int y,
                      const std::array<double, 4>& v, double lambda);

}  // namespace gbd
