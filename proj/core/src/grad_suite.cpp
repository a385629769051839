#include <functional>
#include <utility>

#include "gbdnet/grad_check.hpp"
#include "gbdnet/model.hpp"
#include "gbdnet/rng.hpp"
#include "gbdnet/roi_pool.hpp"

namespace gbd {

namespace {

// Magnitudes bounded away from zero keep relu/emax arguments off their kinks
// for the common case; the retry in the driver covers the rest.
Tensor rand_tensor(Rng& rng, const Shape& s) {
  std::vector<double> v(static_cast<size_t>(s.numel()));
  for (double& x : v) {
    const double mag = rng.uniform(0.15, 1.0);
    x = rng.uniform() < 0.5 ? -mag : mag;
  }
  return Tensor::from_values(s, std::move(v));
}

Tensor rand_const(Rng& rng, const Shape& s) {
  std::vector<double> v(static_cast<size_t>(s.numel()));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::constant(s, std::move(v));
}

using Inputs = std::vector<std::pair<std::string, Tensor>>;

struct Case {
  std::string name;
  // Returns the loss builder and registers the tensors to differentiate.
  std::function<std::function<Tensor()>(Rng&, Inputs*)> build;
};

std::vector<Case> make_cases() {
  std::vector<Case> cases;

  cases.push_back({"conv2d", [](Rng& rng, Inputs* in) {
    Tensor x = rand_tensor(rng, {1, 2, 5, 5});
    Tensor w = rand_tensor(rng, {3, 2, 3, 3});
    Tensor b = rand_tensor(rng, {1, 3, 1, 1});
    in->assign({{"x", x}, {"w", w}, {"b", b}});
    return [=] { return reduce_sum(sigmoid(conv2d(x, w, b, 1, 1))); };
  }});

  cases.push_back({"combine", [](Rng& rng, Inputs* in) {
    Tensor a = rand_tensor(rng, {1, 2, 3, 3});
    Tensor b = rand_tensor(rng, {1, 2, 3, 3});
    in->assign({{"a", a}, {"b", b}});
    return [=] {
      Tensor lhs = reduce_sum(mul(emax(a, b), sigmoid(add(a, b))));
      Tensor rhs = reduce_sum(global_avg_pool(mul(a, b)));
      return add(lhs, rhs);
    };
  }});

  cases.push_back({"relu-conv", [](Rng& rng, Inputs* in) {
    Tensor x = rand_tensor(rng, {1, 2, 4, 4});
    Tensor w = rand_tensor(rng, {2, 2, 3, 3});
    Tensor b = rand_tensor(rng, {1, 2, 1, 1});
    Tensor mask = rand_const(rng, {1, 2, 4, 4});
    in->assign({{"x", x}, {"w", w}, {"b", b}});
    return [=] { return reduce_sum(mul(relu(conv2d(x, w, b, 1, 1)), mask)); };
  }});

  cases.push_back({"conv-stride2", [](Rng& rng, Inputs* in) {
    Tensor x = rand_tensor(rng, {1, 2, 7, 7});
    Tensor w = rand_tensor(rng, {2, 2, 3, 3});
    Tensor b = rand_tensor(rng, {1, 2, 1, 1});
    in->assign({{"x", x}, {"w", w}, {"b", b}});
    return [=] { return reduce_sum(sigmoid(conv2d(x, w, b, 2, 1))); };
  }});

  cases.push_back({"softmax-ce", [](Rng& rng, Inputs* in) {
    Tensor logits = rand_tensor(rng, {1, 5, 1, 1});
    const int label = static_cast<int>(rng.uniform_int(0, 4));
    in->assign({{"logits", logits}});
    return [=] { return softmax_cross_entropy(logits, label); };
  }});

  cases.push_back({"smooth-l1", [](Rng& rng, Inputs* in) {
    // Differences dodge the |x| = 1 corner on both sides.
    std::vector<double> tv(4), diff(4);
    for (int i = 0; i < 4; ++i) {
      tv[i] = rng.uniform(-1.0, 1.0);
      const double mag = rng.uniform() < 0.5 ? rng.uniform(0.2, 0.8) : rng.uniform(1.2, 2.0);
      diff[i] = rng.uniform() < 0.5 ? -mag : mag;
    }
    Tensor t = Tensor::from_values({1, 4, 1, 1}, tv);
    std::vector<double> target(4);
    for (int i = 0; i < 4; ++i) target[i] = tv[i] + diff[i];
    Tensor c = Tensor::constant({1, 4, 1, 1}, target);
    in->assign({{"t", t}});
    return [=] { return reduce_sum(smooth_l1(sub(c, t))); };
  }});

  cases.push_back({"roi-pool", [](Rng& rng, Inputs* in) {
    Tensor fmap = rand_tensor(rng, {1, 3, 7, 9});
    IntRect region;
    region.x0 = static_cast<int>(rng.uniform_int(0, 4));
    region.y0 = static_cast<int>(rng.uniform_int(0, 3));
    region.x1 = region.x0 + static_cast<int>(rng.uniform_int(2, 9 - region.x0));
    region.y1 = region.y0 + static_cast<int>(rng.uniform_int(2, 7 - region.y0));
    Tensor mask = rand_const(rng, {1, 3, 4, 4});
    in->assign({{"fmap", fmap}});
    return [=] { return reduce_sum(mul(roi_max_pool(fmap, region, 4, 4), mask)); };
  }});

  cases.push_back({"dense-slice", [](Rng& rng, Inputs* in) {
    Tensor x = rand_tensor(rng, {1, 3, 2, 2});
    Tensor w = rand_tensor(rng, {1, 1, 4, 12});
    Tensor b = rand_tensor(rng, {1, 1, 1, 4});
    in->assign({{"x", x}, {"w", w}, {"b", b}});
    return [=] { return reduce_sum(sigmoid(slice_channels(dense(x, w, b), 1, 3))); };
  }});

  // Fresh stores zero their biases; the boundary message convs see a frozen
  // zero input, which would park those biases exactly on the relu kink where
  // a derivative measurement is meaningless. Move every bias off zero first.
  auto randomize_biases = [](ParamStore& store, Rng& rng) {
    for (auto [name, t] : store.all()) {
      if (name.size() < 2 || name.compare(name.size() - 2, 2, ".b") != 0) continue;
      for (double& v : t.values()) {
        const double mag = rng.uniform(0.05, 0.5);
        v = rng.uniform() < 0.5 ? -mag : mag;
      }
    }
  };

  auto gbd_case = [randomize_biases](GbdVersion version) {
    return [version, randomize_biases](Rng& rng, Inputs* in) {
      ParamStore store(rng.next_u64());
      GbdParams params = init_gbd_params(store, "g", 2, 4, 0.3, version);
      randomize_biases(store, rng);
      BranchFeatures h0;
      for (int i = 0; i < 4; ++i) h0.h.push_back(rand_tensor(rng, {1, 2, 4, 4}));
      for (const auto& [name, t] : store.all()) in->emplace_back(name, t);
      for (int i = 0; i < 4; ++i) in->emplace_back("h0." + std::to_string(i), h0.h[i]);
      return [=] {
        BranchFeatures h3 = version == GbdVersion::v2 ? gbd_v2_forward(h0, params)
                                                      : gbd_v1_forward(h0, params, true);
        Tensor loss = reduce_sum(h3.h[0]);
        for (int i = 1; i < h3.size(); ++i) loss = add(loss, reduce_sum(h3.h[i]));
        return loss;
      };
    };
  };
  cases.push_back({"gbd-v1-gated", gbd_case(GbdVersion::v1_gated)});
  cases.push_back({"gbd-v2", gbd_case(GbdVersion::v2)});

  cases.push_back({"head-loss", [](Rng& rng, Inputs* in) {
    ParamStore store(rng.next_u64());
    HeadParams head = init_head_params(store, "h", 3, 3, 4, 2);
    BranchFeatures h3;
    for (int i = 0; i < 2; ++i) h3.h.push_back(rand_tensor(rng, {1, 3, 3, 3}));
    const int label = static_cast<int>(rng.uniform_int(0, 2));
    std::array<double, 4> v;
    for (double& x : v) x = rng.uniform(-0.4, 0.4);
    for (const auto& [name, t] : store.all()) in->emplace_back(name, t);
    for (int i = 0; i < 2; ++i) in->emplace_back("h3." + std::to_string(i), h3.h[i]);
    return [=] {
      HeadOutput out = head_forward(h3, head);
      return detection_loss(out.probs, out.offsets, label, v, 1.0);
    };
  }});

  return cases;
}

}  // namespace

std::vector<GradSuiteCase> run_gradient_suite(int n_seeds, double eps, double tol) {
  std::vector<Case> cases = make_cases();
  std::vector<GradSuiteCase> results;
  for (const Case& c : cases) {
    GradSuiteCase agg;
    agg.name = c.name;
    for (int seed = 1; seed <= n_seeds; ++seed) {
      Rng rng(derive_seed(static_cast<std::uint64_t>(seed), c.name));
      Inputs inputs;
      auto f = c.build(rng, &inputs);
      GradCheckReport report = grad_check(f, inputs, eps);
      if (report.max_rel_err > tol) {
        Rng retry_rng(derive_seed(static_cast<std::uint64_t>(seed) + 7777, c.name));
        Inputs retry_inputs;
        auto g = c.build(retry_rng, &retry_inputs);
        report = grad_check(g, retry_inputs, eps);
        agg.retried = true;
      }
      agg.checked += report.checked;
      if (report.max_rel_err > agg.max_rel_err) {
        agg.max_rel_err = report.max_rel_err;
        agg.worst = report.worst + " (seed " + std::to_string(seed) + ")";
      }
    }
    results.push_back(std::move(agg));
  }
  return results;
}

}  // namespace gbd
