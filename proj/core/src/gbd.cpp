#include "gbdnet/gbd.hpp"

#include "gbdnet/error.hpp"

namespace gbd {

GbdVersion gbd_version_from_string(const std::string& s) {
  if (s == "none") return GbdVersion::none;
  if (s == "v1") return GbdVersion::v1;
  if (s == "v1-gated") return GbdVersion::v1_gated;
  if (s == "v2") return GbdVersion::v2;
  throw DomainError("unknown gbd_version: " + s);
}

std::string to_string(GbdVersion v) {
  switch (v) {
    case GbdVersion::none: return "none";
    case GbdVersion::v1: return "v1";
    case GbdVersion::v1_gated: return "v1-gated";
    case GbdVersion::v2: return "v2";
  }
  return "none";
}

GbdParams init_gbd_params(ParamStore& store, const std::string& prefix, int channels,
                          int n_branches, double beta, GbdVersion version) {
  if (channels < 1) throw DomainError("init_gbd_params: channels must be positive");
  if (n_branches < 1) throw DomainError("init_gbd_params: need at least one branch");
  GbdParams p;
  p.version = version;
  p.channels = channels;
  p.beta = beta;
  if (version == GbdVersion::none) return p;
  const bool gated = p.gated();
  const bool merge = version == GbdVersion::v1 || version == GbdVersion::v1_gated;
  for (int i = 1; i <= n_branches; ++i) {
    const std::string b = prefix + ".b" + std::to_string(i);
    GbdBranchParams bp;
    bp.up_self = make_conv(store, b + ".up.self", channels, channels, 3);
    bp.up_msg = make_conv(store, b + ".up.msg", channels, channels, 3);
    bp.down_self = make_conv(store, b + ".down.self", channels, channels, 3);
    bp.down_msg = make_conv(store, b + ".down.msg", channels, channels, 3);
    if (gated) {
      bp.up_gate = make_conv(store, b + ".up.gate", channels, channels, 3);
      bp.down_gate = make_conv(store, b + ".down.gate", channels, channels, 3);
    }
    if (merge) bp.merge = make_conv(store, b + ".merge", 2 * channels, channels, 1);
    p.branches.push_back(std::move(bp));
  }
  return p;
}

Tensor gate_map(const Tensor& h0_neighbor, const ConvParams& g) {
  return sigmoid(conv_apply(g, h0_neighbor));
}

namespace {

void check_branches(const BranchFeatures& h0, const GbdParams& p) {
  if (h0.h.empty()) throw ShapeError("gbd forward: no branches");
  if (static_cast<int>(p.branches.size()) != h0.size())
    throw ShapeError("gbd forward: " + std::to_string(h0.size()) + " branches vs " +
                     std::to_string(p.branches.size()) + " parameter sets");
  for (const Tensor& t : h0.h) {
    if (!(t.shape() == h0.h[0].shape()))
      throw ShapeError("gbd forward: branch shapes differ: " + h0.h[0].shape().str() +
                       " vs " + t.shape().str());
    if (t.shape().c != p.channels)
      throw ShapeError("gbd forward: expected " + std::to_string(p.channels) +
                       " channels, got " + t.shape().str());
  }
}

// The two directional chains. Branch 0 has no lower neighbor and the last
// branch no upper one; a frozen zero tensor stands in so every branch runs
// the same expression.
void directional_chains(const BranchFeatures& h0, const GbdParams& p, bool gated,
                        std::vector<Tensor>* h1, std::vector<Tensor>* h2) {
  const int n = h0.size();
  const Tensor zero = Tensor::constant(h0.h[0].shape(), std::vector<double>(
      static_cast<size_t>(h0.h[0].numel()), 0.0));
  h1->resize(n);
  h2->resize(n);
  for (int i = 0; i < n; ++i) {
    const GbdBranchParams& bp = p.branches[i];
    Tensor self = relu(conv_apply(bp.up_self, h0.h[i]));
    Tensor msg = relu(conv_apply(bp.up_msg, i == 0 ? zero : (*h1)[i - 1]));
    if (gated) msg = mul(gate_map(i == 0 ? zero : h0.h[i - 1], bp.up_gate), msg);
    (*h1)[i] = add(self, msg);
  }
  for (int i = n - 1; i >= 0; --i) {
    const GbdBranchParams& bp = p.branches[i];
    Tensor self = relu(conv_apply(bp.down_self, h0.h[i]));
    Tensor msg = relu(conv_apply(bp.down_msg, i == n - 1 ? zero : (*h2)[i + 1]));
    if (gated) msg = mul(gate_map(i == n - 1 ? zero : h0.h[i + 1], bp.down_gate), msg);
    (*h2)[i] = add(self, msg);
  }
}

}  // namespace

BranchFeatures gbd_v1_forward(const BranchFeatures& h0, const GbdParams& p, bool gated) {
  check_branches(h0, p);
  std::vector<Tensor> h1, h2;
  directional_chains(h0, p, gated, &h1, &h2);
  BranchFeatures out;
  out.h.reserve(h0.h.size());
  for (int i = 0; i < h0.size(); ++i)
    out.h.push_back(relu(conv_apply(p.branches[i].merge, concat_channels(h1[i], h2[i]))));
  return out;
}

BranchFeatures gbd_v2_forward(const BranchFeatures& h0, const GbdParams& p) {
  check_branches(h0, p);
  std::vector<Tensor> h1, h2;
  directional_chains(h0, p, /*gated=*/true, &h1, &h2);
  BranchFeatures out;
  out.h.reserve(h0.h.size());
  for (int i = 0; i < h0.size(); ++i) {
    Tensor merged = emax(h1[i], h2[i]);
    out.h.push_back(add(h0.h[i], scale(merged, p.beta)));
  }
  return out;
}

BranchFeatures gbd_forward(const BranchFeatures& h0, const GbdParams& p) {
  switch (p.version) {
    case GbdVersion::none: return h0;
    case GbdVersion::v1: return gbd_v1_forward(h0, p, false);
    case GbdVersion::v1_gated: return gbd_v1_forward(h0, p, true);
    case GbdVersion::v2: return gbd_v2_forward(h0, p);
  }
  return h0;
}

}  // namespace gbd
