#include "gbdnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>

#include "gbdnet/error.hpp"

namespace gbd {

namespace {

// Valid output range [lo, hi) so that oy*stride - pad + ky lands inside [0, in).
void valid_out_range(int out, int in, int stride, int pad, int k_off, int* lo, int* hi) {
  int shift = k_off - pad;
  int l = 0;
  if (shift < 0) l = (-shift + stride - 1) / stride;
  int h = out;
  // largest oy with oy*stride + shift <= in - 1
  int top = in - 1 - shift;
  if (top < 0) {
    h = 0;
  } else {
    h = std::min(out, top / stride + 1);
  }
  *lo = l;
  *hi = std::max(l, h);
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias,
              int stride, int pad) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const Shape bs = bias.shape();
  if (ws.h != ws.w)
    throw ShapeError("conv2d: kernel must be square, got " + ws.str());
  if (ws.c != xs.c)
    throw ShapeError("conv2d: weight expects " + std::to_string(ws.c) +
                     " input channels, tensor has " + std::to_string(xs.c));
  if (bs.n != 1 || bs.c != ws.n || bs.h != 1 || bs.w != 1)
    throw ShapeError("conv2d: bias shape " + bs.str() + " does not match " +
                     std::to_string(ws.n) + " output channels");
  if (stride < 1) throw DomainError("conv2d: stride must be >= 1");
  if (pad < 0) throw DomainError("conv2d: pad must be >= 0");

  const int k = ws.h;
  const int oh = (xs.h + 2 * pad - k) / stride + 1;
  const int ow = (xs.w + 2 * pad - k) / stride + 1;
  if (xs.h + 2 * pad < k || xs.w + 2 * pad < k)
    throw ShapeError("conv2d: kernel " + std::to_string(k) + " exceeds padded input " + xs.str());
  const Shape os{xs.n, ws.n, oh, ow};

  const std::vector<double>& xv = x.node()->vals();
  const std::vector<double>& wv = weight.node()->vals();
  const std::vector<double>& bv = bias.node()->vals();
  std::vector<double> out(static_cast<size_t>(os.numel()));

  const std::int64_t x_plane = static_cast<std::int64_t>(xs.h) * xs.w;
  const std::int64_t o_plane = static_cast<std::int64_t>(oh) * ow;
  for (int n = 0; n < xs.n; ++n) {
    for (int co = 0; co < ws.n; ++co) {
      double* op = out.data() + (static_cast<std::int64_t>(n) * ws.n + co) * o_plane;
      std::fill(op, op + o_plane, bv[co]);
      for (int ci = 0; ci < xs.c; ++ci) {
        const double* xp = xv.data() + (static_cast<std::int64_t>(n) * xs.c + ci) * x_plane;
        const double* wp = wv.data() + ((static_cast<std::int64_t>(co) * xs.c + ci) * k) * k;
        for (int ky = 0; ky < k; ++ky) {
          int oy_lo, oy_hi;
          valid_out_range(oh, xs.h, stride, pad, ky, &oy_lo, &oy_hi);
          for (int kx = 0; kx < k; ++kx) {
            const double w = wp[ky * k + kx];
            if (w == 0.0) continue;
            int ox_lo, ox_hi;
            valid_out_range(ow, xs.w, stride, pad, kx, &ox_lo, &ox_hi);
            for (int oy = oy_lo; oy < oy_hi; ++oy) {
              const int iy = oy * stride - pad + ky;
              const double* xrow = xp + static_cast<std::int64_t>(iy) * xs.w - pad + kx;
              double* orow = op + static_cast<std::int64_t>(oy) * ow;
              for (int ox = ox_lo; ox < ox_hi; ++ox)
                orow[ox] += w * xrow[ox * stride];
            }
          }
        }
      }
    }
  }

  auto xn = x.node();
  auto wn = weight.node();
  auto bn = bias.node();
  return make_op(os, {x, weight, bias}, std::move(out), [xn, wn, bn, stride, pad, k](detail::Node& node) {
    const Shape& xs = xn->shape;
    const Shape& ws = wn->shape;
    const int oh = node.shape.h;
    const int ow = node.shape.w;
    const std::int64_t x_plane = static_cast<std::int64_t>(xs.h) * xs.w;
    const std::int64_t o_plane = static_cast<std::int64_t>(oh) * ow;
    const std::vector<double>& xv = xn->vals();
    const std::vector<double>& wv = wn->vals();
    const std::vector<double>& g = node.grad;

    if (bn->requires_grad) {
      for (int n = 0; n < xs.n; ++n)
        for (int co = 0; co < ws.n; ++co) {
          const double* gp = g.data() + (static_cast<std::int64_t>(n) * ws.n + co) * o_plane;
          double acc = 0.0;
          for (std::int64_t i = 0; i < o_plane; ++i) acc += gp[i];
          bn->grad[co] += acc;
        }
    }
    const bool need_x = xn->requires_grad;
    const bool need_w = wn->requires_grad;
    if (!need_x && !need_w) return;

    for (int n = 0; n < xs.n; ++n) {
      for (int co = 0; co < ws.n; ++co) {
        const double* gp = g.data() + (static_cast<std::int64_t>(n) * ws.n + co) * o_plane;
        for (int ci = 0; ci < xs.c; ++ci) {
          const double* xp = xv.data() + (static_cast<std::int64_t>(n) * xs.c + ci) * x_plane;
          double* dxp = need_x
              ? xn->grad.data() + (static_cast<std::int64_t>(n) * xs.c + ci) * x_plane
              : nullptr;
          const std::int64_t w_base = (static_cast<std::int64_t>(co) * xs.c + ci) * k * k;
          for (int ky = 0; ky < k; ++ky) {
            int oy_lo, oy_hi;
            valid_out_range(oh, xs.h, stride, pad, ky, &oy_lo, &oy_hi);
            for (int kx = 0; kx < k; ++kx) {
              int ox_lo, ox_hi;
              valid_out_range(ow, xs.w, stride, pad, kx, &ox_lo, &ox_hi);
              const double w = wv[w_base + ky * k + kx];
              double dw = 0.0;
              for (int oy = oy_lo; oy < oy_hi; ++oy) {
                const int iy = oy * stride - pad + ky;
                const std::int64_t row_off = static_cast<std::int64_t>(iy) * xs.w - pad + kx;
                const double* grow = gp + static_cast<std::int64_t>(oy) * ow;
                if (need_w) {
                  const double* xrow = xp + row_off;
                  for (int ox = ox_lo; ox < ox_hi; ++ox)
                    dw += grow[ox] * xrow[ox * stride];
                }
                if (need_x) {
                  double* dxrow = dxp + row_off;
                  for (int ox = ox_lo; ox < ox_hi; ++ox)
                    dxrow[ox * stride] += grow[ox] * w;
                }
              }
              if (need_w) wn->grad[w_base + ky * k + kx] += dw;
            }
          }
        }
      }
    }
  });
}

Tensor pointwise(const Tensor& x, Pointwise kind) {
  const std::vector<double>& xv = x.node()->vals();
  std::vector<double> out(xv.size());
  if (kind == Pointwise::relu) {
    for (size_t i = 0; i < xv.size(); ++i) out[i] = std::max(0.0, xv[i]);
  } else {
    for (size_t i = 0; i < xv.size(); ++i) {
      // Clamp so exp() stays finite and the output stays strictly inside (0, 1).
      const double z = std::clamp(xv[i], -36.0, 36.0);
      out[i] = 1.0 / (1.0 + std::exp(-z));
    }
  }
  auto xn = x.node();
  if (kind == Pointwise::relu) {
    return make_op(x.shape(), {x}, std::move(out), [xn](detail::Node& node) {
      const std::vector<double>& xv = xn->vals();
      for (size_t i = 0; i < xv.size(); ++i)
        if (xv[i] > 0.0) xn->grad[i] += node.grad[i];
    });
  }
  return make_op(x.shape(), {x}, std::move(out), [xn](detail::Node& node) {
    const std::vector<double>& y = node.vals();
    for (size_t i = 0; i < y.size(); ++i)
      xn->grad[i] += node.grad[i] * y[i] * (1.0 - y[i]);
  });
}

Tensor combine(const Tensor& a, const Tensor& b, Combine kind) {
  const Shape as = a.shape();
  const Shape bs = b.shape();
  if (kind == Combine::concat_c) {
    if (as.n != bs.n || as.h != bs.h || as.w != bs.w)
      throw ShapeError("concat_c: " + as.str() + " vs " + bs.str());
  } else if (!(as == bs)) {
    throw ShapeError("combine: " + as.str() + " vs " + bs.str());
  }

  const std::vector<double>& av = a.node()->vals();
  const std::vector<double>& bv = b.node()->vals();
  auto an = a.node();
  auto bn = b.node();

  switch (kind) {
    case Combine::add: {
      std::vector<double> out(av.size());
      for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
      return make_op(as, {a, b}, std::move(out), [an, bn](detail::Node& node) {
        if (an->requires_grad)
          for (size_t i = 0; i < node.grad.size(); ++i) an->grad[i] += node.grad[i];
        if (bn->requires_grad)
          for (size_t i = 0; i < node.grad.size(); ++i) bn->grad[i] += node.grad[i];
      });
    }
    case Combine::mul: {
      std::vector<double> out(av.size());
      for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
      return make_op(as, {a, b}, std::move(out), [an, bn](detail::Node& node) {
        const std::vector<double>& av = an->vals();
        const std::vector<double>& bv = bn->vals();
        if (an->requires_grad)
          for (size_t i = 0; i < node.grad.size(); ++i) an->grad[i] += node.grad[i] * bv[i];
        if (bn->requires_grad)
          for (size_t i = 0; i < node.grad.size(); ++i) bn->grad[i] += node.grad[i] * av[i];
      });
    }
    case Combine::emax: {
      std::vector<double> out(av.size());
      auto from_a = std::make_shared<std::vector<unsigned char>>(av.size());
      for (size_t i = 0; i < av.size(); ++i) {
        const bool first = av[i] >= bv[i];
        (*from_a)[i] = first;
        out[i] = first ? av[i] : bv[i];
      }
      return make_op(as, {a, b}, std::move(out), [an, bn, from_a](detail::Node& node) {
        for (size_t i = 0; i < node.grad.size(); ++i) {
          if ((*from_a)[i])
            an->grad[i] += node.grad[i];
          else
            bn->grad[i] += node.grad[i];
        }
      });
    }
    case Combine::concat_c: {
      const Shape os{as.n, as.c + bs.c, as.h, as.w};
      std::vector<double> out(static_cast<size_t>(os.numel()));
      const std::int64_t plane = static_cast<std::int64_t>(as.h) * as.w;
      for (int n = 0; n < as.n; ++n) {
        std::copy(av.begin() + n * as.c * plane, av.begin() + (n + 1) * as.c * plane,
                  out.begin() + static_cast<std::int64_t>(n) * os.c * plane);
        std::copy(bv.begin() + n * bs.c * plane, bv.begin() + (n + 1) * bs.c * plane,
                  out.begin() + (static_cast<std::int64_t>(n) * os.c + as.c) * plane);
      }
      const int ac = as.c;
      return make_op(os, {a, b}, std::move(out), [an, bn, ac, plane](detail::Node& node) {
        const Shape& os = node.shape;
        const int bc = os.c - ac;
        for (int n = 0; n < os.n; ++n) {
          const double* g = node.grad.data() + static_cast<std::int64_t>(n) * os.c * plane;
          if (an->requires_grad) {
            double* da = an->grad.data() + static_cast<std::int64_t>(n) * ac * plane;
            for (std::int64_t i = 0; i < ac * plane; ++i) da[i] += g[i];
          }
          if (bn->requires_grad) {
            double* db = bn->grad.data() + static_cast<std::int64_t>(n) * bc * plane;
            const double* gb = g + static_cast<std::int64_t>(ac) * plane;
            for (std::int64_t i = 0; i < bc * plane; ++i) db[i] += gb[i];
          }
        }
      });
    }
  }
  throw DomainError("combine: unknown kind");
}

Tensor scale(const Tensor& x, double s) {
  const std::vector<double>& xv = x.node()->vals();
  std::vector<double> out(xv.size());
  for (size_t i = 0; i < xv.size(); ++i) out[i] = s * xv[i];
  auto xn = x.node();
  return make_op(x.shape(), {x}, std::move(out), [xn, s](detail::Node& node) {
    for (size_t i = 0; i < node.grad.size(); ++i) xn->grad[i] += s * node.grad[i];
  });
}

Tensor reduce_sum(const Tensor& x) {
  const std::vector<double>& xv = x.node()->vals();
  double acc = 0.0;
  for (double v : xv) acc += v;
  auto xn = x.node();
  return make_op(Shape{1, 1, 1, 1}, {x}, {acc}, [xn](detail::Node& node) {
    const double g = node.grad[0];
    for (double& d : xn->grad) d += g;
  });
}

Tensor smooth_l1(const Tensor& x) {
  const std::vector<double>& xv = x.node()->vals();
  std::vector<double> out(xv.size());
  for (size_t i = 0; i < xv.size(); ++i) {
    const double a = std::abs(xv[i]);
    out[i] = a <= 1.0 ? 0.5 * xv[i] * xv[i] : a - 0.5;
  }
  auto xn = x.node();
  return make_op(x.shape(), {x}, std::move(out), [xn](detail::Node& node) {
    const std::vector<double>& xv = xn->vals();
    for (size_t i = 0; i < xv.size(); ++i) {
      const double d = std::abs(xv[i]) <= 1.0 ? xv[i] : (xv[i] > 0.0 ? 1.0 : -1.0);
      xn->grad[i] += node.grad[i] * d;
    }
  });
}

Tensor slice_channels(const Tensor& x, int c0, int c1) {
  const Shape xs = x.shape();
  if (c0 < 0 || c1 > xs.c || c0 >= c1)
    throw IndexError("slice_channels: [" + std::to_string(c0) + ", " + std::to_string(c1) +
                     ") out of range for " + std::to_string(xs.c) + " channels");
  const Shape os{xs.n, c1 - c0, xs.h, xs.w};
  const std::int64_t plane = static_cast<std::int64_t>(xs.h) * xs.w;
  const std::vector<double>& xv = x.node()->vals();
  std::vector<double> out(static_cast<size_t>(os.numel()));
  for (int n = 0; n < xs.n; ++n)
    std::copy(xv.begin() + (static_cast<std::int64_t>(n) * xs.c + c0) * plane,
              xv.begin() + (static_cast<std::int64_t>(n) * xs.c + c1) * plane,
              out.begin() + static_cast<std::int64_t>(n) * os.c * plane);
  auto xn = x.node();
  const int xc = xs.c;
  return make_op(os, {x}, std::move(out), [xn, c0, xc, plane](detail::Node& node) {
    const Shape& os = node.shape;
    for (int n = 0; n < os.n; ++n) {
      const double* g = node.grad.data() + static_cast<std::int64_t>(n) * os.c * plane;
      double* dx = xn->grad.data() + (static_cast<std::int64_t>(n) * xc + c0) * plane;
      for (std::int64_t i = 0; i < os.c * plane; ++i) dx[i] += g[i];
    }
  });
}

Tensor global_avg_pool(const Tensor& x) {
  const Shape xs = x.shape();
  const Shape os{xs.n, xs.c, 1, 1};
  const std::int64_t plane = static_cast<std::int64_t>(xs.h) * xs.w;
  const std::vector<double>& xv = x.node()->vals();
  std::vector<double> out(static_cast<size_t>(os.numel()));
  for (std::int64_t p = 0; p < os.numel(); ++p) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < plane; ++i) acc += xv[p * plane + i];
    out[p] = acc / static_cast<double>(plane);
  }
  auto xn = x.node();
  return make_op(os, {x}, std::move(out), [xn, plane](detail::Node& node) {
    const double inv = 1.0 / static_cast<double>(plane);
    for (size_t p = 0; p < node.grad.size(); ++p) {
      const double g = node.grad[p] * inv;
      double* dx = xn->grad.data() + static_cast<std::int64_t>(p) * plane;
      for (std::int64_t i = 0; i < plane; ++i) dx[i] += g;
    }
  });
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  const Shape bs = bias.shape();
  const std::int64_t in = static_cast<std::int64_t>(xs.c) * xs.h * xs.w;
  if (ws.n != 1 || ws.c != 1 || ws.w != in)
    throw ShapeError("dense: weight " + ws.str() + " does not take " +
                     std::to_string(in) + " inputs");
  if (bs.n != 1 || bs.c != 1 || bs.h != 1 || bs.w != ws.h)
    throw ShapeError("dense: bias " + bs.str() + " does not match " +
                     std::to_string(ws.h) + " outputs");
  const int out_dim = ws.h;
  const Shape os{xs.n, out_dim, 1, 1};
  const std::vector<double>& xv = x.node()->vals();
  const std::vector<double>& wv = weight.node()->vals();
  const std::vector<double>& bv = bias.node()->vals();
  std::vector<double> out(static_cast<size_t>(os.numel()));
  for (int n = 0; n < xs.n; ++n) {
    const double* xp = xv.data() + n * in;
    for (int o = 0; o < out_dim; ++o) {
      const double* wp = wv.data() + static_cast<std::int64_t>(o) * in;
      double acc = bv[o];
      for (std::int64_t i = 0; i < in; ++i) acc += wp[i] * xp[i];
      out[static_cast<std::int64_t>(n) * out_dim + o] = acc;
    }
  }
  auto xn = x.node();
  auto wn = weight.node();
  auto bn = bias.node();
  return make_op(os, {x, weight, bias}, std::move(out), [xn, wn, bn, in](detail::Node& node) {
    const int out_dim = node.shape.c;
    const std::vector<double>& xv = xn->vals();
    const std::vector<double>& wv = wn->vals();
    for (int n = 0; n < node.shape.n; ++n) {
      const double* g = node.grad.data() + static_cast<std::int64_t>(n) * out_dim;
      const double* xp = xv.data() + n * in;
      double* dx = xn->requires_grad ? xn->grad.data() + n * in : nullptr;
      for (int o = 0; o < out_dim; ++o) {
        const double go = g[o];
        if (go == 0.0) continue;
        const double* wp = wv.data() + static_cast<std::int64_t>(o) * in;
        if (wn->requires_grad) {
          double* dw = wn->grad.data() + static_cast<std::int64_t>(o) * in;
          for (std::int64_t i = 0; i < in; ++i) dw[i] += go * xp[i];
        }
        if (dx)
          for (std::int64_t i = 0; i < in; ++i) dx[i] += go * wp[i];
        if (bn->requires_grad) bn->grad[o] += go;
      }
    }
  });
}

Tensor softmax_channels(const Tensor& x) {
  const Shape xs = x.shape();
  if (xs.h != 1 || xs.w != 1)
    throw ShapeError("softmax_channels: expected (n, c, 1, 1), got " + xs.str());
  const std::vector<double>& xv = x.node()->vals();
  std::vector<double> out(xv.size());
  for (int n = 0; n < xs.n; ++n) {
    const double* xp = xv.data() + static_cast<std::int64_t>(n) * xs.c;
    double* op = out.data() + static_cast<std::int64_t>(n) * xs.c;
    double m = xp[0];
    for (int c = 1; c < xs.c; ++c) m = std::max(m, xp[c]);
    double z = 0.0;
    for (int c = 0; c < xs.c; ++c) {
      op[c] = std::exp(xp[c] - m);
      z += op[c];
    }
    for (int c = 0; c < xs.c; ++c) op[c] /= z;
  }
  auto xn = x.node();
  return make_op(xs, {x}, std::move(out), [xn](detail::Node& node) {
    const int cs = node.shape.c;
    const std::vector<double>& y = node.vals();
    for (int n = 0; n < node.shape.n; ++n) {
      const double* yp = y.data() + static_cast<std::int64_t>(n) * cs;
      const double* g = node.grad.data() + static_cast<std::int64_t>(n) * cs;
      double dot = 0.0;
      for (int c = 0; c < cs; ++c) dot += g[c] * yp[c];
      double* dx = xn->grad.data() + static_cast<std::int64_t>(n) * cs;
      for (int c = 0; c < cs; ++c) dx[c] += yp[c] * (g[c] - dot);
    }
  });
}

Tensor cross_entropy(const Tensor& probs, int label) {
  const Shape ps = probs.shape();
  if (ps.n != 1 || ps.h != 1 || ps.w != 1)
    throw ShapeError("cross_entropy: expected (1, K, 1, 1), got " + ps.str());
  if (label < 0 || label >= ps.c)
    throw IndexError("cross_entropy: label " + std::to_string(label) + " outside " +
                     std::to_string(ps.c) + " classes");
  const double p = probs.node()->vals()[label];
  if (!(p > 0.0))
    throw DomainError("cross_entropy: probability for label " + std::to_string(label) +
                      " is not positive");
  auto pn = probs.node();
  return make_op(Shape{1, 1, 1, 1}, {probs}, {-std::log(p)}, [pn, label](detail::Node& node) {
    pn->grad[label] -= node.grad[0] / pn->vals()[label];
  });
}

Tensor mean_tensors(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw DomainError("mean_tensors: empty input");
  for (const Tensor& t : xs)
    if (!(t.shape() == xs[0].shape()))
      throw ShapeError("mean_tensors: mismatched shapes " + xs[0].shape().str() + " vs " +
                       t.shape().str());
  std::vector<Tensor> level = xs;
  while (level.size() > 1) {
    std::vector<Tensor> next;
    next.reserve((level.size() + 1) / 2);
    for (size_t i = 0; i + 1 < level.size(); i += 2) next.push_back(add(level[i], level[i + 1]));
    if (level.size() % 2 == 1) next.push_back(level.back());
    level = std::move(next);
  }
  if (xs.size() == 1) return level[0];
  return scale(level[0], 1.0 / static_cast<double>(xs.size()));
}

}  // namespace gbd
