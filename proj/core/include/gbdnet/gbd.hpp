#pragma once

#include <string>
#include <vector>

#include "gbdnet/param_store.hpp"
#include "gbdnet/roi_pool.hpp"

namespace gbd {

enum class GbdVersion { none, v1, v1_gated, v2 };

GbdVersion gbd_version_from_string(const std::string& s);
std::string to_string(GbdVersion v);

/// One branch's share of the message-passing parameters. "up" is the chain
/// running from the least padded branch toward the most padded one; "down"
/// runs the other way. Nothing is shared between branches.
struct GbdBranchParams {
  ConvParams up_self, up_msg;      // 3x3, C -> C
  ConvParams down_self, down_msg;  // 3x3, C -> C
  ConvParams up_gate, down_gate;   // 3x3, C -> C (gated variants only)
  ConvParams merge;                // 1x1, 2C -> C (v1 family only)
};

struct GbdParams {
  GbdVersion version = GbdVersion::v2;
  int channels = 0;
  double beta = 0.1;
  std::vector<GbdBranchParams> branches;
  bool gated() const { return version == GbdVersion::v1_gated || version == GbdVersion::v2; }
};

/// Registers all parameters for an n_branches-way layer under
/// "<prefix>.b<i>...". Gate convs exist only for gated variants, merge convs
/// only for the v1 family, so a store's name set identifies the version.
GbdParams init_gbd_params(ParamStore& store, const std::string& prefix, int channels,
                          int n_branches, double beta, GbdVersion version);

/// sigmoid(conv(h0_neighbor)); every entry strictly inside (0, 1).
Tensor gate_map(const Tensor& h0_neighbor, const ConvParams& g);

/// Both directional chains then per-branch merge of the two chains through a
/// 1x1 conv over their channel concatenation.
BranchFeatures gbd_v1_forward(const BranchFeatures& h0, const GbdParams& p, bool gated);

/// Gated chains, elementwise-max merge, then h3 = h0 + beta * merged.
BranchFeatures gbd_v2_forward(const BranchFeatures& h0, const GbdParams& p);

/// Dispatch on p.version; GbdVersion::none returns h0 untouched.
BranchFeatures gbd_forward(const BranchFeatures& h0, const GbdParams& p);

}  // namespace gbd
