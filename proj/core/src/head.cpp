#include "gbdnet/head.hpp"

#include <cmath>

#include "gbdnet/error.hpp"

namespace gbd {

TrunkParams init_trunk_params(ParamStore& store, const std::string& prefix, int c1, int c2) {
  TrunkParams p;
  p.conv1 = make_conv(store, prefix + ".conv1", 3, c1, 3);
  p.conv2 = make_conv(store, prefix + ".conv2", c1, c2, 3);
  p.out_channels = c2;
  return p;
}

Tensor trunk_forward(const Tensor& image, const TrunkParams& p) {
  if (image.shape().c != 3)
    throw ShapeError("trunk_forward: expected 3-channel input, got " + image.shape().str());
  Tensor x = relu(conv_apply(p.conv1, image));
  return relu(conv_apply(p.conv2, x, kTrunkStride));
}

HeadParams init_head_params(ParamStore& store, const std::string& prefix, int channels,
                            int roi_out, int hidden_dim, int num_classes) {
  if (num_classes < 1) throw DomainError("init_head_params: need at least one class");
  HeadParams p;
  p.conv = make_conv(store, prefix + ".conv", channels, channels, 3);
  p.hidden = make_dense(store, prefix + ".hidden", channels * roi_out * roi_out, hidden_dim);
  p.cls = make_dense(store, prefix + ".cls", hidden_dim, num_classes + 1);
  p.reg = make_dense(store, prefix + ".reg", hidden_dim, 4 * num_classes);
  p.num_classes = num_classes;
  return p;
}

HeadOutput head_forward(const BranchFeatures& h3, const HeadParams& p) {
  if (h3.h.empty()) throw ShapeError("head_forward: no branches");
  std::vector<Tensor> logits, offsets;
  logits.reserve(h3.h.size());
  offsets.reserve(h3.h.size());
  for (const Tensor& branch : h3.h) {
    Tensor x = relu(conv_apply(p.conv, branch));
    Tensor hid = relu(dense_apply(p.hidden, x));
    logits.push_back(dense_apply(p.cls, hid));
    offsets.push_back(dense_apply(p.reg, hid));
  }
  HeadOutput out;
  out.logits = mean_tensors(logits);
  out.offsets = mean_tensors(offsets);
  out.probs = softmax_channels(out.logits);
  return out;
}

std::array<double, 4> encode_offsets(const Box& proposal, const Box& gt) {
  if (proposal.w <= 0 || proposal.h <= 0 || gt.w <= 0 || gt.h <= 0)
    throw DomainError("encode_offsets: boxes must have positive size");
  return {(gt.x - proposal.x) / proposal.w, (gt.y - proposal.y) / proposal.h,
          std::log(gt.w / proposal.w), std::log(gt.h / proposal.h)};
}

Box decode_offsets(const Box& proposal, const std::array<double, 4>& t) {
  if (proposal.w <= 0 || proposal.h <= 0)
    throw DomainError("decode_offsets: proposal must have positive size");
  return {proposal.x + t[0] * proposal.w, proposal.y + t[1] * proposal.h,
          proposal.w * std::exp(t[2]), proposal.h * std::exp(t[3])};
}

Tensor detection_loss(const Tensor& probs, const Tensor& offsets, int y,
                      const std::array<double, 4>& v, double lambda) {
  const Shape ps = probs.shape();
  if (ps.n != 1 || ps.h != 1 || ps.w != 1)
    throw ShapeError("detection_loss: probs must be (1, K+1, 1, 1), got " + ps.str());
  const int num_classes = ps.c - 1;
  const Shape os = offsets.shape();
  if (os.n != 1 || os.c != 4 * num_classes || os.h != 1 || os.w != 1)
    throw ShapeError("detection_loss: offsets " + os.str() + " do not match " +
                     std::to_string(num_classes) + " classes");
  if (y < 0 || y > num_classes)
    throw IndexError("detection_loss: label " + std::to_string(y) + " outside [0, " +
                     std::to_string(num_classes) + "]");
  double total = 0.0;
  for (double p : probs.node()->vals()) total += p;
  if (std::abs(total - 1.0) > 1e-6)
    throw ContractError("detection_loss: class probabilities sum to " + std::to_string(total));

  Tensor loss = cross_entropy(probs, y);
  if (y >= 1) {
    Tensor t_v = slice_channels(offsets, 4 * (y - 1), 4 * y);
    Tensor target = Tensor::constant(Shape{1, 4, 1, 1}, {v[0], v[1], v[2], v[3]});
    loss = add(loss, scale(reduce_sum(smooth_l1(sub(target, t_v))), lambda));
  }
  return loss;
}

}  // namespace gbd
