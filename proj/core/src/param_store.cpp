#include "gbdnet/param_store.hpp"

#include <cmath>
#include <vector>

#include "gbdnet/error.hpp"
#include "gbdnet/rng.hpp"

namespace gbd {

Tensor ParamStore::xavier(const std::string& name, const Shape& shape, int fan_in, int fan_out) {
  if (params_.count(name))
    throw ContractError("parameter already exists: " + name);
  if (fan_in <= 0 || fan_out <= 0)
    throw DomainError("xavier: fans must be positive for " + name);
  Rng rng(derive_seed(seed_, name));
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(static_cast<size_t>(shape.numel()));
  for (double& x : v) x = rng.uniform(-a, a);
  Tensor t = Tensor::from_values(shape, std::move(v));
  params_.emplace(name, t);
  return t;
}

Tensor ParamStore::zeros(const std::string& name, const Shape& shape) {
  if (params_.count(name))
    throw ContractError("parameter already exists: " + name);
  Tensor t = Tensor::zeros(shape);
  params_.emplace(name, t);
  return t;
}

void ParamStore::put(const std::string& name, const Tensor& t) {
  if (params_.count(name))
    throw ContractError("parameter already exists: " + name);
  params_.emplace(name, t);
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ContractError("no such parameter: " + name);
  return it->second;
}

void ParamStore::sgd_step(double lr, double weight_decay) {
  for (auto& [name, t] : params_) {
    std::vector<double>& v = t.values();
    std::vector<double>& g = t.grad();
    for (size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(g[i]))
        throw TrainingError("non-finite gradient in parameter " + name);
      v[i] -= lr * (g[i] + weight_decay * v[i]);
      g[i] = 0.0;
    }
  }
}

void ParamStore::zero_grads() {
  for (auto& [name, t] : params_) t.zero_grad();
}

ParamStore ParamStore::shadow() const {
  ParamStore s(seed_);
  for (const auto& [name, t] : params_) s.params_.emplace(name, t.alias());
  return s;
}

void ParamStore::accumulate_grads(const ParamStore& shadow) {
  auto it = params_.begin();
  auto jt = shadow.params_.begin();
  for (; it != params_.end() && jt != shadow.params_.end(); ++it, ++jt) {
    if (it->first != jt->first)
      throw ContractError("shadow store mismatch at " + it->first);
    std::vector<double>& dst = it->second.grad();
    const std::vector<double>& src = jt->second.node()->grad;
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }
  if (it != params_.end() || jt != shadow.params_.end())
    throw ContractError("shadow store has different parameter count");
}

ConvParams make_conv(ParamStore& store, const std::string& prefix, int in_c, int out_c, int k) {
  if (k % 2 == 0 || k < 1)
    throw DomainError("make_conv: kernel size must be odd, got " + std::to_string(k));
  ConvParams p;
  p.weight = store.xavier(prefix + ".w", Shape{out_c, in_c, k, k}, in_c * k * k, out_c * k * k);
  p.bias = store.zeros(prefix + ".b", Shape{1, out_c, 1, 1});
  return p;
}

Tensor conv_apply(const ConvParams& p, const Tensor& x, int stride) {
  return conv2d(x, p.weight, p.bias, stride, (p.weight.shape().h - 1) / 2);
}

DenseParams make_dense(ParamStore& store, const std::string& prefix, int in, int out) {
  DenseParams p;
  p.weight = store.xavier(prefix + ".w", Shape{1, 1, out, in}, in, out);
  p.bias = store.zeros(prefix + ".b", Shape{1, 1, 1, out});
  return p;
}

}  // namespace gbd
