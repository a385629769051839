#include "gbdnet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "gbdnet/error.hpp"

namespace gbd {

namespace {

constexpr char kMagic[4] = {'G', 'B', 'D', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::vector<std::uint8_t>* out, std::uint16_t v) {
  out->push_back(static_cast<std::uint8_t>(v & 0xff));
  out->push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>* out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

struct Reader {
  const std::vector<std::uint8_t>& data;
  size_t pos = 0;
  const std::string& path;

  void need(size_t n, const char* what) const {
    if (pos + n > data.size())
      throw FormatError(path + ": truncated reading " + what + " at offset " +
                        std::to_string(pos));
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return data[pos++];
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = static_cast<std::uint16_t>(data[pos] | (data[pos + 1] << 8));
    pos += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string bytes(size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(data.data() + pos), n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const ParamStore& store, const RunConfig& cfg) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  put_u32(&out, kVersion);
  put_u32(&out, static_cast<std::uint32_t>(store.all().size()));
  for (const auto& [name, t] : store.all()) {
    if (name.size() > 0xffff) throw FormatError("parameter name too long: " + name);
    put_u16(&out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(4);
    const Shape s = t.shape();
    put_u32(&out, static_cast<std::uint32_t>(s.n));
    put_u32(&out, static_cast<std::uint32_t>(s.c));
    put_u32(&out, static_cast<std::uint32_t>(s.h));
    put_u32(&out, static_cast<std::uint32_t>(s.w));
    for (double v : t.node()->vals()) put_f32(&out, static_cast<float>(v));
  }
  const std::string blob = config_to_json(cfg);
  put_u32(&out, static_cast<std::uint32_t>(blob.size()));
  out.insert(out.end(), blob.begin(), blob.end());

  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path);
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!f) throw FormatError("short write to " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path);
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  Reader r{data, 0, path};

  const std::string magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw FormatError(path + ": bad magic at offset 0");
  const std::uint32_t version = r.u32("version");
  if (version != kVersion)
    throw FormatError(path + ": unsupported version " + std::to_string(version) +
                      " at offset 4 (expected " + std::to_string(kVersion) + ")");
  const std::uint32_t count = r.u32("tensor count");

  LoadedCheckpoint ck;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = r.u16("name length");
    const std::string name = r.bytes(name_len, "name");
    const std::uint8_t ndims = r.u8("ndims");
    if (ndims != 4)
      throw FormatError(path + ": tensor " + name + " has " + std::to_string(ndims) +
                        " dims at offset " + std::to_string(r.pos - 1) + " (expected 4)");
    Shape s;
    s.n = static_cast<int>(r.u32("dim"));
    s.c = static_cast<int>(r.u32("dim"));
    s.h = static_cast<int>(r.u32("dim"));
    s.w = static_cast<int>(r.u32("dim"));
    if (s.numel() <= 0)
      throw FormatError(path + ": tensor " + name + " has empty shape " + s.str());
    std::vector<double> values(static_cast<size_t>(s.numel()));
    for (double& v : values) v = static_cast<double>(r.f32("values"));
    ck.params.put(name, Tensor::from_values(s, std::move(values)));
  }

  const std::uint32_t blob_len = r.u32("config length");
  const std::string blob = r.bytes(blob_len, "config");
  ck.config = config_from_json(blob);
  if (r.pos != data.size())
    throw FormatError(path + ": trailing bytes at offset " + std::to_string(r.pos));
  return ck;
}

}  // namespace gbd
