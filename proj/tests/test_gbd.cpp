#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gbdnet/gbd.hpp"
#include "gbdnet/ops.hpp"
#include "gbdnet/param_store.hpp"
#include "gbdnet/rng.hpp"
#include "gbdnet/tensor.hpp"

using namespace gbd;

namespace {

// Non-negative activations, the way pooled relu features arrive.
BranchFeatures random_h0(int n_branches, int c, int hw, Rng& rng) {
  BranchFeatures bf;
  for (int b = 0; b < n_branches; ++b) {
    std::vector<double> v(static_cast<std::size_t>(c) * hw * hw);
    for (double& x : v) x = std::max(0.0, rng.uniform(-1.0, 1.0));
    bf.h.push_back(Tensor::from_values({1, c, hw, hw}, std::move(v)));
  }
  return bf;
}

// The message-passing equations restated: two directional chains with a
// frozen zero tensor standing in for the missing neighbor at each end, gates
// reading the neighbor's pooled features, then the per-version merge.
BranchFeatures reference_forward(const BranchFeatures& h0, const GbdParams& p, bool gated,
                                 bool v2) {
  const int n = h0.size();
  const Tensor zero = Tensor::constant(h0.h[0].shape(),
                                       std::vector<double>(static_cast<std::size_t>(h0.h[0].numel()), 0.0));
  std::vector<Tensor> h1(static_cast<std::size_t>(n)), h2(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const GbdBranchParams& bp = p.branches[static_cast<std::size_t>(i)];
    Tensor msg = relu(conv_apply(bp.up_msg, i == 0 ? zero : h1[static_cast<std::size_t>(i - 1)]));
    if (gated) {
      msg = mul(msg, gate_map(i == 0 ? zero : h0.h[static_cast<std::size_t>(i - 1)], bp.up_gate));
    }
    h1[static_cast<std::size_t>(i)] = add(relu(conv_apply(bp.up_self, h0.h[static_cast<std::size_t>(i)])), msg);
  }
  for (int i = n - 1; i >= 0; --i) {
    const GbdBranchParams& bp = p.branches[static_cast<std::size_t>(i)];
    Tensor msg = relu(conv_apply(bp.down_msg, i == n - 1 ? zero : h2[static_cast<std::size_t>(i + 1)]));
    if (gated) {
      msg = mul(msg, gate_map(i == n - 1 ? zero : h0.h[static_cast<std::size_t>(i + 1)], bp.down_gate));
    }
    h2[static_cast<std::size_t>(i)] = add(relu(conv_apply(bp.down_self, h0.h[static_cast<std::size_t>(i)])), msg);
  }
  BranchFeatures out;
  for (int i = 0; i < n; ++i) {
    const GbdBranchParams& bp = p.branches[static_cast<std::size_t>(i)];
    if (v2) {
      out.h.push_back(add(h0.h[static_cast<std::size_t>(i)],
                          scale(emax(h1[static_cast<std::size_t>(i)], h2[static_cast<std::size_t>(i)]), p.beta)));
    } else {
      out.h.push_back(relu(conv_apply(bp.merge, concat_channels(h1[static_cast<std::size_t>(i)],
                                                                h2[static_cast<std::size_t>(i)]))));
    }
  }
  return out;
}

void zero_conv(ConvParams& cp) {
  std::fill(cp.weight.values().begin(), cp.weight.values().end(), 0.0);
  std::fill(cp.bias.values().begin(), cp.bias.values().end(), 0.0);
}

bool same_values(const Tensor& a, const Tensor& b) { return a.values() == b.values(); }

}  // namespace

TEST_CASE("version names round-trip; unknown names are rejected") {
  for (const char* s : {"none", "v1", "v1-gated", "v2"}) {
    CHECK(to_string(gbd_version_from_string(s)) == s);
  }
  CHECK_THROWS_AS(gbd_version_from_string("v3"), DomainError);
  CHECK_THROWS_AS(gbd_version_from_string(""), DomainError);
}

TEST_CASE("parameter sets identify the version by which convs exist") {
  auto names_for = [](GbdVersion v) {
    ParamStore ps(1);
    init_gbd_params(ps, "g", 4, 3, 0.1, v);
    return ps;
  };

  ParamStore v2 = names_for(GbdVersion::v2);
  CHECK(v2.has("g.b1.up.self.w"));
  CHECK(v2.has("g.b2.up.msg.w"));
  CHECK(v2.has("g.b3.down.self.b"));
  CHECK(v2.has("g.b1.up.gate.w"));
  CHECK(v2.has("g.b3.down.gate.w"));
  CHECK_FALSE(v2.has("g.b1.merge.w"));
  CHECK(v2.size() == 3 * 6 * 2);

  ParamStore v1 = names_for(GbdVersion::v1);
  CHECK(v1.has("g.b1.merge.w"));
  CHECK_FALSE(v1.has("g.b1.up.gate.w"));
  CHECK(v1.size() == 3 * 5 * 2);

  ParamStore v1g = names_for(GbdVersion::v1_gated);
  CHECK(v1g.has("g.b1.merge.w"));
  CHECK(v1g.has("g.b1.up.gate.w"));
  CHECK(v1g.size() == 3 * 7 * 2);

  ParamStore none = names_for(GbdVersion::none);
  CHECK(none.size() == 0);

  // Shapes: 3x3 C->C chains, 1x1 2C->C merge.
  CHECK(v1.get("g.b1.up.self.w").shape() == Shape{4, 4, 3, 3});
  CHECK(v1.get("g.b1.merge.w").shape() == Shape{4, 8, 1, 1});
  CHECK(v1.get("g.b1.merge.b").shape() == Shape{1, 4, 1, 1});
}

TEST_CASE("initialization is reproducible and stays inside the xavier bound") {
  ParamStore a(11), b(11);
  GbdParams pa = init_gbd_params(a, "g", 8, 4, 0.1, GbdVersion::v2);
  init_gbd_params(b, "g", 8, 4, 0.1, GbdVersion::v2);
  for (const auto& [name, t] : a.all()) {
    CHECK(t.values() == b.get(name).values());
  }
  CHECK(pa.version == GbdVersion::v2);
  CHECK(pa.channels == 8);

  // 3x3 convs at C=8: fan_in = fan_out = 72.
  const double bound = std::sqrt(6.0 / 144.0);
  const double sigma = bound / std::sqrt(3.0);
  double sum = 0.0;
  std::int64_t count = 0;
  for (const auto& [name, t] : a.all()) {
    if (name.size() < 2 || name.substr(name.size() - 2) != ".w") continue;
    for (double v : t.values()) {
      CHECK(std::abs(v) <= bound);
      sum += v;
      ++count;
    }
  }
  CHECK(count == 4 * 6 * 8 * 8 * 9);  // enough draws for the mean to settle
  CHECK(std::abs(sum / static_cast<double>(count)) < 3.0 * sigma / 100.0);
}

TEST_CASE("gate of an all-zero neighbor through zero weights is exactly one half") {
  ConvParams g{Tensor::zeros({2, 2, 3, 3}), Tensor::zeros({1, 2, 1, 1})};
  Tensor zero = Tensor::constant({1, 2, 4, 4}, std::vector<double>(32, 0.0));
  Tensor out = gate_map(zero, g);
  for (double v : out.values()) CHECK(v == 0.5);
}

TEST_CASE("a strongly negative gate bias drives the gate toward zero without reaching it") {
  ConvParams g{Tensor::zeros({2, 2, 3, 3}), Tensor::full({1, 2, 1, 1}, -12.0)};
  Rng rng(40);
  std::vector<double> v(32);
  for (double& x : v) x = rng.uniform(0.0, 1.0);
  Tensor out = gate_map(Tensor::constant({1, 2, 4, 4}, v), g);
  for (double x : out.values()) {
    CHECK(x > 0.0);
    CHECK(x < 1e-5);
  }
}

TEST_CASE("gates stay strictly inside (0, 1) on random input") {
  Rng rng(41);
  ParamStore ps(41);
  ConvParams g = make_conv(ps, "g", 3, 3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(3 * 25);
    for (double& x : v) x = rng.uniform(-3.0, 3.0);
    Tensor out = gate_map(Tensor::constant({1, 3, 5, 5}, v), g);
    for (double x : out.values()) {
      CHECK(x > 0.0);
      CHECK(x < 1.0);
    }
  }
  Tensor wrong_c = Tensor::constant({1, 2, 5, 5}, std::vector<double>(50, 0.1));
  CHECK_THROWS_AS(gate_map(wrong_c, g), ShapeError);
}

TEST_CASE("library forward matches the restated equations bit for bit") {
  Rng rng(33);
  BranchFeatures h0 = random_h0(4, 3, 5, rng);

  ParamStore p1(7);
  GbdParams v1 = init_gbd_params(p1, "g", 3, 4, 0.1, GbdVersion::v1);
  BranchFeatures lib1 = gbd_v1_forward(h0, v1, false);
  BranchFeatures ref1 = reference_forward(h0, v1, false, false);
  for (int i = 0; i < 4; ++i) CHECK(same_values(lib1.h[static_cast<std::size_t>(i)], ref1.h[static_cast<std::size_t>(i)]));

  ParamStore p2(8);
  GbdParams v1g = init_gbd_params(p2, "g", 3, 4, 0.1, GbdVersion::v1_gated);
  BranchFeatures lib2 = gbd_v1_forward(h0, v1g, true);
  BranchFeatures ref2 = reference_forward(h0, v1g, true, false);
  for (int i = 0; i < 4; ++i) CHECK(same_values(lib2.h[static_cast<std::size_t>(i)], ref2.h[static_cast<std::size_t>(i)]));

  ParamStore p3(9);
  GbdParams v2 = init_gbd_params(p3, "g", 3, 4, 0.37, GbdVersion::v2);
  BranchFeatures lib3 = gbd_v2_forward(h0, v2);
  BranchFeatures ref3 = reference_forward(h0, v2, true, true);
  for (int i = 0; i < 4; ++i) CHECK(same_values(lib3.h[static_cast<std::size_t>(i)], ref3.h[static_cast<std::size_t>(i)]));
}

TEST_CASE("zeroed message convs decouple the branches completely") {
  Rng rng(34);
  BranchFeatures h0 = random_h0(3, 3, 5, rng);
  ParamStore ps(10);
  GbdParams p = init_gbd_params(ps, "g", 3, 3, 0.1, GbdVersion::v1);
  for (GbdBranchParams& bp : p.branches) {
    zero_conv(bp.up_msg);
    zero_conv(bp.down_msg);
  }
  BranchFeatures before = gbd_v1_forward(h0, p, false);

  Tensor perturbed = h0.h[1];
  perturbed.values()[3] += 0.5;
  BranchFeatures after = gbd_v1_forward(h0, p, false);
  CHECK(same_values(before.h[0], after.h[0]));
  CHECK(same_values(before.h[2], after.h[2]));
  CHECK_FALSE(same_values(before.h[1], after.h[1]));
}

TEST_CASE("messages only travel along each chain's direction") {
  Rng rng(35);
  BranchFeatures h0 = random_h0(4, 2, 4, rng);
  ParamStore ps(12);
  GbdParams p = init_gbd_params(ps, "g", 2, 4, 0.1, GbdVersion::v1);

  SUBCASE("with the down chain silenced, the last branch cannot reach earlier ones") {
    for (GbdBranchParams& bp : p.branches) {
      zero_conv(bp.down_self);
      zero_conv(bp.down_msg);
    }
    BranchFeatures before = gbd_v1_forward(h0, p, false);
    h0.h[3].values()[0] += 1.0;
    BranchFeatures after = gbd_v1_forward(h0, p, false);
    CHECK(same_values(before.h[0], after.h[0]));
    CHECK(same_values(before.h[1], after.h[1]));
    CHECK(same_values(before.h[2], after.h[2]));
    CHECK_FALSE(same_values(before.h[3], after.h[3]));
  }

  SUBCASE("the up chain carries a first-branch change all the way to the last") {
    for (GbdBranchParams& bp : p.branches) {
      zero_conv(bp.down_self);
      zero_conv(bp.down_msg);
    }
    BranchFeatures before = gbd_v1_forward(h0, p, false);
    h0.h[0].values()[0] += 1.0;
    BranchFeatures after = gbd_v1_forward(h0, p, false);
    CHECK_FALSE(same_values(before.h[3], after.h[3]));
  }

  SUBCASE("with the up chain silenced, the first branch cannot reach later ones") {
    for (GbdBranchParams& bp : p.branches) {
      zero_conv(bp.up_self);
      zero_conv(bp.up_msg);
    }
    BranchFeatures before = gbd_v1_forward(h0, p, false);
    h0.h[0].values()[0] += 1.0;
    BranchFeatures after = gbd_v1_forward(h0, p, false);
    CHECK(same_values(before.h[1], after.h[1]));
    CHECK(same_values(before.h[2], after.h[2]));
    CHECK(same_values(before.h[3], after.h[3]));
    CHECK_FALSE(same_values(before.h[0], after.h[0]));
  }
}

TEST_CASE("branch order is structural: permuting branches with their parameters changes outputs") {
  Rng rng(36);
  BranchFeatures h0 = random_h0(3, 2, 4, rng);
  ParamStore ps(13);
  GbdParams p = init_gbd_params(ps, "g", 2, 3, 0.1, GbdVersion::v1);
  BranchFeatures orig = gbd_v1_forward(h0, p, false);

  BranchFeatures swapped;
  swapped.h = {h0.h[1], h0.h[0], h0.h[2]};
  GbdParams ps2 = p;
  std::swap(ps2.branches[0], ps2.branches[1]);
  BranchFeatures out = gbd_v1_forward(swapped, ps2, false);

  // Were the layer order-invariant, branch 1's output would just move to
  // slot 0. The chains make position matter.
  double diff = 0.0;
  for (std::size_t i = 0; i < out.h[0].values().size(); ++i) {
    diff = std::max(diff, std::abs(out.h[0].values()[i] - orig.h[1].values()[i]));
  }
  CHECK(diff > 1e-9);
}

TEST_CASE("v2 with beta zero returns the inputs bit for bit") {
  Rng rng(37);
  BranchFeatures h0 = random_h0(4, 3, 5, rng);
  ParamStore ps(14);
  GbdParams p = init_gbd_params(ps, "g", 3, 4, 0.0, GbdVersion::v2);
  BranchFeatures out = gbd_v2_forward(h0, p);
  for (int i = 0; i < 4; ++i) {
    CHECK(same_values(out.h[static_cast<std::size_t>(i)], h0.h[static_cast<std::size_t>(i)]));
  }
}

TEST_CASE("v2 deviation from the identity is bounded by beta times the chain magnitudes") {
  Rng rng(38);
  BranchFeatures h0 = random_h0(4, 3, 5, rng);
  ParamStore ps(15);
  const double beta = 0.37;
  GbdParams p = init_gbd_params(ps, "g", 3, 4, beta, GbdVersion::v2);
  BranchFeatures out = gbd_v2_forward(h0, p);

  GbdParams probe = p;
  probe.beta = 1.0;  // reference merge at unit beta recovers emax(h1, h2) as (h3 - h0)
  BranchFeatures unit = reference_forward(h0, probe, true, true);
  for (int i = 0; i < 4; ++i) {
    double chain_inf = 0.0;
    for (std::size_t k = 0; k < unit.h[static_cast<std::size_t>(i)].values().size(); ++k) {
      chain_inf = std::max(chain_inf, unit.h[static_cast<std::size_t>(i)].values()[k] -
                                          h0.h[static_cast<std::size_t>(i)].values()[k]);
    }
    for (std::size_t k = 0; k < out.h[static_cast<std::size_t>(i)].values().size(); ++k) {
      const double dev = std::abs(out.h[static_cast<std::size_t>(i)].values()[k] -
                                  h0.h[static_cast<std::size_t>(i)].values()[k]);
      CHECK(dev <= beta * chain_inf + 1e-9);
    }
  }
}

TEST_CASE("version none passes the branch tensors through untouched") {
  Rng rng(39);
  BranchFeatures h0 = random_h0(2, 2, 4, rng);
  GbdParams p;
  p.version = GbdVersion::none;
  p.channels = 2;
  BranchFeatures out = gbd_forward(h0, p);
  REQUIRE(out.size() == 2);
  CHECK(out.h[0].node() == h0.h[0].node());
  CHECK(out.h[1].node() == h0.h[1].node());
}

TEST_CASE("branch count, shape, and channel mismatches are rejected") {
  Rng rng(42);
  ParamStore ps(16);
  GbdParams p = init_gbd_params(ps, "g", 3, 4, 0.1, GbdVersion::v2);

  BranchFeatures three = random_h0(3, 3, 5, rng);
  CHECK_THROWS_AS(gbd_forward(three, p), ShapeError);

  BranchFeatures wrong_c = random_h0(4, 2, 5, rng);
  CHECK_THROWS_AS(gbd_forward(wrong_c, p), ShapeError);

  BranchFeatures uneven = random_h0(4, 3, 5, rng);
  uneven.h[2] = random_h0(1, 3, 4, rng).h[0];
  CHECK_THROWS_AS(gbd_forward(uneven, p), ShapeError);
}
