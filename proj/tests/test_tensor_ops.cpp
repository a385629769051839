#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstddef>
#include <vector>

#include "gbdnet/grad_check.hpp"
#include "gbdnet/model.hpp"
#include "gbdnet/ops.hpp"
#include "gbdnet/param_store.hpp"
#include "gbdnet/rng.hpp"
#include "gbdnet/tensor.hpp"

using namespace gbd;

namespace {

Tensor random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(s.numel()));
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_values(s, std::move(v));
}

}  // namespace

TEST_CASE("conv with an identity kernel reproduces the input") {
  Rng rng(3);
  Tensor x = random_tensor({1, 1, 3, 3}, rng);
  Tensor w = Tensor::from_values({1, 1, 1, 1}, {1.0});
  Tensor b = Tensor::zeros({1, 1, 1, 1});
  Tensor y = conv2d(x, w, b, 1, 0);
  REQUIRE(y.shape() == x.shape());
  for (std::size_t i = 0; i < x.values().size(); ++i) {
    CHECK(y.values()[i] == x.values()[i]);
  }
}

TEST_CASE("conv with zero weights emits the bias everywhere") {
  Rng rng(4);
  Tensor x = random_tensor({1, 3, 5, 6}, rng);
  Tensor w = Tensor::zeros({2, 3, 3, 3});
  Tensor b = Tensor::from_values({1, 2, 1, 1}, {0.7, -0.3});
  Tensor y = conv2d(x, w, b, 1, 1);
  REQUIRE(y.shape() == Shape{1, 2, 5, 6});
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < 30; ++i) {
      CHECK(y.values()[static_cast<std::size_t>(c * 30 + i)] == (c == 0 ? 0.7 : -0.3));
    }
  }
}

TEST_CASE("conv hand case: 2x2 input, scalar kernel 2, bias 0.5") {
  Tensor x = Tensor::from_values({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor w = Tensor::from_values({1, 1, 1, 1}, {2.0});
  Tensor b = Tensor::from_values({1, 1, 1, 1}, {0.5});
  Tensor y = conv2d(x, w, b, 1, 0);
  CHECK(y.values() == std::vector<double>{2.5, 4.5, 6.5, 8.5});
}

TEST_CASE("conv output size follows floor((n + 2p - k)/s) + 1") {
  Rng rng(5);
  Tensor x = random_tensor({1, 2, 7, 9}, rng);
  ParamStore ps(9);
  ConvParams cp = make_conv(ps, "c", 2, 3, 3);
  Tensor y = conv2d(x, cp.weight, cp.bias, 2, 1);
  CHECK(y.shape() == Shape{1, 3, 4, 5});
}

TEST_CASE("conv rejects mismatched shapes and bad hyperparameters") {
  Rng rng(6);
  Tensor x = random_tensor({1, 2, 5, 5}, rng);
  Tensor w_bad_c = random_tensor({3, 4, 3, 3}, rng);
  Tensor w = random_tensor({3, 2, 3, 3}, rng);
  Tensor b = Tensor::zeros({1, 3, 1, 1});
  Tensor b_bad = Tensor::zeros({1, 2, 1, 1});
  CHECK_THROWS_AS(conv2d(x, w_bad_c, b, 1, 1), ShapeError);
  CHECK_THROWS_AS(conv2d(x, w, b_bad, 1, 1), ShapeError);
  CHECK_THROWS_AS(conv2d(x, w, b, 0, 1), DomainError);
  CHECK_THROWS_AS(conv2d(x, w, b, 1, -1), DomainError);
  Tensor w_rect = random_tensor({3, 2, 3, 5}, rng);
  CHECK_THROWS_AS(conv2d(x, w_rect, b, 1, 1), ShapeError);
  Tensor w_huge = random_tensor({3, 2, 9, 9}, rng);
  CHECK_THROWS_AS(conv2d(x, w_huge, b, 1, 1), ShapeError);
}

TEST_CASE("conv gradient agrees with central differences at step 1e-4") {
  Rng rng(7);
  Tensor x = random_tensor({1, 2, 5, 5}, rng);
  Tensor w = random_tensor({3, 2, 3, 3}, rng, -0.5, 0.5);
  Tensor b = random_tensor({1, 3, 1, 1}, rng, -0.2, 0.2);
  auto f = [&] { return reduce_sum(conv2d(x, w, b, 1, 1)); };
  GradCheckReport r = grad_check(f, {{"x", x}, {"w", w}, {"b", b}}, 1e-4);
  CHECK(r.max_rel_err <= 1e-4);
  CHECK(r.checked == 50 + 54 + 3);
}

TEST_CASE("relu and sigmoid point values") {
  Tensor x = Tensor::from_values({1, 1, 1, 2}, {-3.0, 3.0});
  Tensor r = relu(x);
  CHECK(r.values()[0] == 0.0);
  CHECK(r.values()[1] == 3.0);

  Tensor z = Tensor::from_values({1, 1, 1, 1}, {0.0});
  Tensor s = sigmoid(z);
  CHECK(s.values()[0] == 0.5);
  backward(s);
  CHECK(z.grad()[0] == 0.25);
}

TEST_CASE("sigmoid output is strictly inside (0, 1)") {
  Rng rng(8);
  Tensor x = random_tensor({2, 3, 4, 4}, rng, -40.0, 40.0);
  Tensor s = sigmoid(x);
  for (double v : s.values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("emax of a tensor with itself is the tensor; ties send gradient to the first operand") {
  Rng rng(9);
  Tensor a = random_tensor({1, 2, 3, 3}, rng);
  Tensor b = Tensor::from_values(a.shape(), a.values());
  Tensor m = emax(a, b);
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    CHECK(m.values()[i] == a.values()[i]);
  }
  backward(reduce_sum(m));
  for (std::size_t i = 0; i < a.values().size(); ++i) {
    CHECK(a.grad()[i] == 1.0);
    CHECK(b.grad()[i] == 0.0);
  }
}

TEST_CASE("concat_channels stacks along c and slicing recovers the operands") {
  Rng rng(10);
  Tensor a = random_tensor({1, 2, 4, 4}, rng);
  Tensor b = random_tensor({1, 3, 4, 4}, rng);
  Tensor cat = concat_channels(a, b);
  REQUIRE(cat.shape() == Shape{1, 5, 4, 4});
  Tensor sa = slice_channels(cat, 0, 2);
  Tensor sb = slice_channels(cat, 2, 5);
  CHECK(sa.values() == a.values());
  CHECK(sb.values() == b.values());
  CHECK_THROWS_AS(slice_channels(cat, 2, 6), IndexError);
  CHECK_THROWS_AS(slice_channels(cat, 3, 3), IndexError);
}

TEST_CASE("combine ops reject shape mismatches") {
  Rng rng(11);
  Tensor a = random_tensor({1, 2, 3, 3}, rng);
  Tensor b = random_tensor({1, 2, 3, 4}, rng);
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(mul(a, b), ShapeError);
  CHECK_THROWS_AS(emax(a, b), ShapeError);
  Tensor c = random_tensor({2, 2, 3, 3}, rng);
  CHECK_THROWS_AS(concat_channels(a, c), ShapeError);
}

TEST_CASE("elementwise product gradient passes the finite-difference check") {
  Rng rng(12);
  Tensor a = random_tensor({1, 2, 3, 3}, rng);
  Tensor b = random_tensor({1, 2, 3, 3}, rng);
  auto f = [&] { return reduce_sum(mul(a, b)); };
  GradCheckReport r = grad_check(f, {{"a", a}, {"b", b}});
  CHECK(r.max_rel_err <= 1e-4);
}

TEST_CASE("softmax cross-entropy of uniform logits is ln K") {
  Tensor logits = Tensor::full({1, 7, 1, 1}, 0.3);
  Tensor loss = softmax_cross_entropy(logits, 2);
  CHECK(loss.item() == doctest::Approx(std::log(7.0)).epsilon(1e-12));
}

TEST_CASE("cross-entropy falls toward zero as the true logit grows") {
  double prev = 1e9;
  for (double t : {2.0, 5.0, 10.0}) {
    Tensor logits = Tensor::from_values({1, 3, 1, 1}, {0.0, t, 0.0});
    const double loss = softmax_cross_entropy(logits, 1).item();
    CHECK(loss < prev);
    prev = loss;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("softmax requires a 1x1 spatial extent and labels must be in range") {
  Rng rng(13);
  Tensor spatial = random_tensor({1, 3, 2, 2}, rng);
  CHECK_THROWS_AS(softmax_channels(spatial), ShapeError);
  Tensor logits = random_tensor({1, 4, 1, 1}, rng);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, 4), IndexError);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, -1), IndexError);
}

TEST_CASE("softmax cross-entropy gradient on random logits") {
  Rng rng(14);
  Tensor logits = random_tensor({1, 5, 1, 1}, rng, -2.0, 2.0);
  auto f = [&] { return softmax_cross_entropy(logits, 3); };
  GradCheckReport r = grad_check(f, {{"logits", logits}});
  CHECK(r.max_rel_err <= 1e-4);
}

TEST_CASE("smooth_l1 values and the kink at |x| = 1") {
  Tensor x = Tensor::from_values({1, 1, 1, 6}, {0.5, 1.0, 3.0, -0.5, -1.0, -3.0});
  Tensor y = smooth_l1(x);
  CHECK(y.values() == std::vector<double>{0.125, 0.5, 2.5, 0.125, 0.5, 2.5});

  // Continuous across the switch, and the derivative at exactly 1 is 1
  // whichever branch computes it.
  Tensor lo = Tensor::from_values({1, 1, 1, 1}, {1.0 - 1e-9});
  Tensor hi = Tensor::from_values({1, 1, 1, 1}, {1.0 + 1e-9});
  CHECK(std::abs(smooth_l1(lo).item() - smooth_l1(hi).item()) < 1e-8);
  Tensor at = Tensor::from_values({1, 1, 1, 1}, {1.0});
  backward(smooth_l1(at));
  CHECK(at.grad()[0] == 1.0);
}

TEST_CASE("reduce_sum, scale, sub and global_avg_pool do what they say") {
  Tensor x = Tensor::from_values({1, 2, 1, 2}, {1, 2, 3, 4});
  CHECK(reduce_sum(x).item() == 10.0);
  CHECK(scale(x, -2.0).values() == std::vector<double>{-2, -4, -6, -8});
  Tensor y = Tensor::from_values({1, 2, 1, 2}, {1, 1, 1, 1});
  CHECK(sub(x, y).values() == std::vector<double>{0, 1, 2, 3});
  Tensor g = global_avg_pool(x);
  REQUIRE(g.shape() == Shape{1, 2, 1, 1});
  CHECK(g.values() == std::vector<double>{1.5, 3.5});
}

TEST_CASE("dense multiplies the flattened extent and its gradient checks out") {
  Tensor x = Tensor::from_values({1, 1, 1, 3}, {1, 2, 3});
  Tensor w = Tensor::from_values({1, 1, 2, 3}, {1, 0, 0, 0, 1, 1});
  Tensor b = Tensor::from_values({1, 1, 1, 2}, {10, 20});
  Tensor y = dense(x, w, b);
  REQUIRE(y.shape() == Shape{1, 2, 1, 1});
  CHECK(y.values() == std::vector<double>{11, 25});

  Rng rng(15);
  Tensor xr = random_tensor({2, 2, 2, 2}, rng);
  Tensor wr = random_tensor({1, 1, 3, 8}, rng);
  Tensor br = random_tensor({1, 1, 1, 3}, rng);
  auto f = [&] { return reduce_sum(dense(xr, wr, br)); };
  CHECK(grad_check(f, {{"x", xr}, {"w", wr}, {"b", br}}).max_rel_err <= 1e-4);
}

TEST_CASE("mean_tensors averages and rejects empty or mismatched input") {
  Tensor a = Tensor::full({1, 1, 1, 2}, 1.0);
  Tensor b = Tensor::full({1, 1, 1, 2}, 3.0);
  CHECK(mean_tensors({a, b}).values() == std::vector<double>{2.0, 2.0});
  CHECK(mean_tensors({a}).values() == a.values());
  CHECK_THROWS_AS(mean_tensors({}), DomainError);
  Tensor c = Tensor::full({1, 1, 2, 1}, 3.0);
  CHECK_THROWS_AS(mean_tensors({a, c}), ShapeError);
}

TEST_CASE("sgd step: plain descent and decoupled-style weight decay") {
  ParamStore ps(1);
  Tensor p = ps.zeros("p", {1, 1, 1, 1});
  p.values()[0] = 1.0;
  p.grad()[0] = 1.0;
  ps.sgd_step(0.1, 0.0);
  CHECK(p.values()[0] == 0.9);
  CHECK(p.grad()[0] == 0.0);  // step clears gradients

  p.values()[0] = 1.0;
  double expected = 1.0;
  expected -= 0.1 * (0.0 + 0.0005 * expected);
  ps.sgd_step(0.1, 0.0005);
  CHECK(p.values()[0] == expected);
}

TEST_CASE("sgd refuses non-finite gradients, naming the parameter") {
  ParamStore ps(2);
  Tensor p = ps.zeros("layer.w", {1, 1, 1, 1});
  p.grad()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_WITH_AS(ps.sgd_step(0.1, 0.0), doctest::Contains("layer.w"), TrainingError);
}

TEST_CASE("param store: duplicate names rejected, xavier stays in bounds, seeding is by name") {
  ParamStore ps(5);
  ps.xavier("a", {4, 2, 3, 3}, 18, 36);
  CHECK_THROWS_AS(ps.xavier("a", {4, 2, 3, 3}, 18, 36), ContractError);

  const double bound = std::sqrt(6.0 / (18 + 36));
  for (double v : ps.get("a").values()) {
    CHECK(std::abs(v) <= bound);
  }

  // Same (seed, name) reproduces values regardless of creation order.
  ParamStore other(5);
  other.zeros("zzz", {1, 1, 1, 1});
  Tensor again = other.xavier("a", {4, 2, 3, 3}, 18, 36);
  CHECK(again.values() == ps.get("a").values());
}

TEST_CASE("grad_check on a linear map is exact to rounding") {
  Rng rng(16);
  Tensor x = random_tensor({1, 1, 2, 2}, rng);
  auto f = [&] { return reduce_sum(scale(x, 3.0)); };
  GradCheckReport r = grad_check(f, {{"x", x}}, 1e-3);
  CHECK(r.max_rel_err <= 1e-10);
}

TEST_CASE("grad_check flags a corrupted backward pass") {
  Rng rng(17);
  Tensor x = random_tensor({1, 1, 2, 3}, rng);
  auto broken_copy = [](const Tensor& t) {
    return make_op(t.shape(), {t}, t.values(), [](detail::Node& n) {
      detail::Node& p = *n.parents[0];
      if (!p.requires_grad) return;
      for (std::size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += 1.1 * n.grad[i];
    });
  };
  auto f = [&] { return reduce_sum(broken_copy(x)); };
  GradCheckReport r = grad_check(f, {{"x", x}});
  CHECK(r.max_rel_err > 1e-2);
}

TEST_CASE("the bundled gradient suite passes at unit scale") {
  for (const GradSuiteCase& c : run_gradient_suite(2)) {
    INFO(c.name, " worst ", c.worst);
    CHECK(c.max_rel_err <= 1e-4);
  }
}

TEST_CASE("backward survives a ten-thousand-node chain") {
  Tensor x = Tensor::from_values({1, 1, 1, 1}, {2.0});
  Tensor y = x;
  for (int i = 0; i < 10000; ++i) y = relu(y);
  backward(y);
  CHECK(y.item() == 2.0);
  CHECK(x.grad()[0] == 1.0);
}

TEST_CASE("rebuilding the same graph reproduces values bit for bit") {
  Rng rng(18);
  Tensor x = random_tensor({1, 2, 6, 6}, rng);
  ParamStore ps(7);
  ConvParams cp = make_conv(ps, "c", 2, 3, 3);
  Tensor y1 = sigmoid(conv_apply(cp, x));
  Tensor y2 = sigmoid(conv_apply(cp, x));
  CHECK(y1.values() == y2.values());
}

TEST_CASE("constants take no gradient; aliases share values but not grads") {
  Tensor c = Tensor::constant({1, 1, 1, 2}, {1.0, 2.0});
  CHECK_FALSE(c.requires_grad());
  Tensor v = Tensor::from_values({1, 1, 1, 2}, {3.0, 4.0});
  backward(reduce_sum(add(c, v)));
  CHECK(v.grad() == std::vector<double>{1.0, 1.0});
  CHECK(c.grad() == std::vector<double>{0.0, 0.0});

  Tensor a = v.alias();
  v.values()[0] = -5.0;
  CHECK(a.values()[0] == -5.0);  // storage is shared
  backward(reduce_sum(scale(a, 2.0)));
  CHECK(a.grad() == std::vector<double>{2.0, 2.0});
  CHECK(v.grad() == std::vector<double>{1.0, 1.0});  // untouched by the alias's graph
}

TEST_CASE("shape plumbing errors: element counts, item(), multi-element roots") {
  CHECK_THROWS_AS(Tensor::from_values({1, 1, 2, 2}, {1.0, 2.0}), ShapeError);
  Tensor x = Tensor::from_values({1, 1, 1, 2}, {1.0, 2.0});
  CHECK_THROWS_AS(x.item(), ShapeError);
  CHECK_THROWS_AS(backward(x), ShapeError);
}

TEST_CASE("check_finite trips on NaN and infinity") {
  Tensor ok = Tensor::from_values({1, 1, 1, 2}, {1.0, 2.0});
  CHECK_NOTHROW(check_finite(ok, "ok"));
  Tensor bad = Tensor::from_values({1, 1, 1, 2}, {1.0, std::numeric_limits<double>::infinity()});
  CHECK_THROWS_AS(check_finite(bad, "bad"), TrainingError);
}
