#pragma once

#include <vector>

#include "gbdnet/tensor.hpp"

namespace gbd {

enum class Pointwise { relu, sigmoid };
enum class Combine { add, mul, emax, concat_c };

/// 2-D convolution with per-output-channel bias.
/// weight: (out_c, in_c, k, k); bias: (1, out_c, 1, 1).
/// Output spatial size is floor((h + 2*pad - k)/stride) + 1.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              int stride, int pad);

Tensor pointwise(const Tensor& x, Pointwise kind);
inline Tensor relu(const Tensor& x) { return pointwise(x, Pointwise::relu); }
inline Tensor sigmoid(const Tensor& x) { return pointwise(x, Pointwise::sigmoid); }

/// add/mul/emax need identical shapes; concat_c needs identical n, h, w.
/// emax ties route the gradient to the first operand.
Tensor combine(const Tensor& a, const Tensor& b, Combine kind);
inline Tensor add(const Tensor& a, const Tensor& b) { return combine(a, b, Combine::add); }
inline Tensor mul(const Tensor& a, const Tensor& b) { return combine(a, b, Combine::mul); }
inline Tensor emax(const Tensor& a, const Tensor& b) { return combine(a, b, Combine::emax); }
inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
  return combine(a, b, Combine::concat_c);
}

Tensor scale(const Tensor& x, double s);

inline Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

/// Sum of all elements, as a (1, 1, 1, 1) tensor.
Tensor reduce_sum(const Tensor& x);

/// Elementwise 0.5*x^2 for |x| <= 1, |x| - 0.5 beyond; continuous with
/// matching one-sided derivatives at |x| = 1.
Tensor smooth_l1(const Tensor& x);

/// Channels [c0, c1) of x. Slicing a concat_c output recovers the operand.
Tensor slice_channels(const Tensor& x, int c0, int c1);

/// (n, c, h, w) -> (n, c, 1, 1), mean over the spatial extent.
Tensor global_avg_pool(const Tensor& x);

/// Fully connected layer over the flattened (c*h*w) extent of each batch
/// item. weight: (1, 1, out, in); bias: (1, 1, 1, out).
Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// Softmax over channels; x must have h == w == 1.
Tensor softmax_channels(const Tensor& x);

/// -log(probs[label]) for a (1, K, 1, 1) probability vector.
Tensor cross_entropy(const Tensor& probs, int label);

inline Tensor softmax_cross_entropy(const Tensor& logits, int label) {
  return cross_entropy(softmax_channels(logits), label);
}

/// Pairwise-tree mean; exact for power-of-two counts of equal inputs.
Tensor mean_tensors(const std::vector<Tensor>& xs);

}  // namespace gbd
