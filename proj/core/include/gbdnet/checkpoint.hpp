#pragma once

#include <string>

#include "gbdnet/config.hpp"
#include "gbdnet/param_store.hpp"

namespace gbd {

/// Layout: "GBDC", u32 version (1), u32 tensor count; per tensor a u16 name
/// length, the name, u8 ndims, u32 dims, then raw little-endian f32 values
/// row-major; finally a u32-length-prefixed json config blob.
void save_checkpoint(const std::string& path, const ParamStore& store, const RunConfig& cfg);

struct LoadedCheckpoint {
  ParamStore params;
  RunConfig config;
};

/// Throws FormatError naming the byte offset for bad magic, version,
/// truncation, or trailing garbage.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace gbd
