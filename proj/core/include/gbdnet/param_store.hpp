#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "gbdnet/ops.hpp"
#include "gbdnet/tensor.hpp"

namespace gbd {

/// Named trainable tensors. Every parameter is seeded from (store seed, name)
/// alone, so a given name always gets the same initial values no matter how
/// many other parameters exist or in what order they were created.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  /// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
  Tensor xavier(const std::string& name, const Shape& shape, int fan_in, int fan_out);
  Tensor zeros(const std::string& name, const Shape& shape);

  /// Registers an externally built tensor (checkpoint load). Rejects duplicates.
  void put(const std::string& name, const Tensor& t);

  bool has(const std::string& name) const { return params_.count(name) != 0; }
  Tensor get(const std::string& name) const;
  const std::map<std::string, Tensor>& all() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return params_.size(); }

  /// theta <- theta - lr * (grad + wd * theta), then clears grads.
  /// Throws TrainingError naming the parameter if its gradient is not finite.
  void sgd_step(double lr, double weight_decay);

  void zero_grads();

  /// A store whose tensors share this one's values but own separate gradient
  /// buffers. Lets independent graphs accumulate grads without interfering.
  ParamStore shadow() const;

  /// Adds the shadow's gradients into this store's, in name order.
  void accumulate_grads(const ParamStore& shadow);

 private:
  std::uint64_t seed_;
  std::map<std::string, Tensor> params_;
};

struct ConvParams {
  Tensor weight;  // (out_c, in_c, k, k)
  Tensor bias;    // (1, out_c, 1, 1)
};

/// Registers "<prefix>.w" / "<prefix>.b". k must be odd so that the default
/// pad (k-1)/2 keeps the spatial size under stride 1.
ConvParams make_conv(ParamStore& store, const std::string& prefix, int in_c, int out_c, int k);

Tensor conv_apply(const ConvParams& p, const Tensor& x, int stride = 1);

struct DenseParams {
  Tensor weight;  // (1, 1, out, in)
  Tensor bias;    // (1, 1, 1, out)
};

DenseParams make_dense(ParamStore& store, const std::string& prefix, int in, int out);

inline Tensor dense_apply(const DenseParams& p, const Tensor& x) {
  return dense(x, p.weight, p.bias);
}

}  // namespace gbd
