#include "gbdnet/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "gbdnet/error.hpp"

namespace gbd {

Image Image::filled(int w, int h, double r, double g, double b) {
  Image img;
  img.w = w;
  img.h = h;
  img.rgb.resize(static_cast<size_t>(3) * w * h);
  const double c[3] = {r, g, b};
  for (int p = 0; p < 3; ++p)
    std::fill(img.rgb.begin() + static_cast<std::int64_t>(p) * w * h,
              img.rgb.begin() + static_cast<std::int64_t>(p + 1) * w * h, c[p]);
  return img;
}

double& Image::at(int c, int y, int x) {
  return rgb[(static_cast<std::int64_t>(c) * h + y) * w + x];
}

double Image::at(int c, int y, int x) const {
  return rgb[(static_cast<std::int64_t>(c) * h + y) * w + x];
}

std::vector<std::uint8_t> encode_ppm(const Image& img) {
  std::string header = "P6\n" + std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + static_cast<size_t>(3) * img.w * img.h);
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        bytes.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
      }
  return bytes;
}

void save_ppm(const Image& img, const std::string& path) {
  const std::vector<std::uint8_t> bytes = encode_ppm(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path);
}

namespace {

// Skips whitespace and '#' comment lines between header tokens.
int next_ppm_int(std::istream& in, const std::string& path) {
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = in.get();
  }
  if (ch == EOF || !std::isdigit(ch)) throw FormatError("bad ppm header in " + path);
  int value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    ch = in.get();
  }
  if (ch != EOF) in.unget();
  return value;
}

}  // namespace

Image load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  char magic[2];
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6')
    throw FormatError(path + " is not a P6 ppm");
  const int w = next_ppm_int(in, path);
  const int h = next_ppm_int(in, path);
  const int maxval = next_ppm_int(in, path);
  if (w < 1 || h < 1 || maxval != 255)
    throw FormatError(path + " has unsupported ppm dimensions or depth");
  in.get();  // single whitespace after maxval
  std::vector<std::uint8_t> raw(static_cast<size_t>(3) * w * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw FormatError(path + " is truncated");
  Image img = Image::filled(w, h, 0, 0, 0);
  size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = raw[i++] / 255.0;
  return img;
}

Image flip_horizontal(const Image& img) {
  Image out = img;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x) out.at(c, y, x) = img.at(c, y, img.w - 1 - x);
  return out;
}

Image crop_resize(const Image& img, const CornerRect& region, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw DomainError("crop_resize: output must be nonempty");
  if (region.x2 <= region.x1 || region.y2 <= region.y1)
    throw DomainError("crop_resize: empty region");
  Image out = Image::filled(out_w, out_h, 0, 0, 0);
  const double sx = (region.x2 - region.x1) / out_w;
  const double sy = (region.y2 - region.y1) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double v = region.y1 + (y + 0.5) * sy;
    const double fy = std::floor(v);
    const int y0 = std::clamp(static_cast<int>(fy), 0, img.h - 1);
    const int y1 = std::clamp(static_cast<int>(fy) + 1, 0, img.h - 1);
    const double wy = v - fy;
    for (int x = 0; x < out_w; ++x) {
      const double u = region.x1 + (x + 0.5) * sx;
      const double fx = std::floor(u);
      const int x0 = std::clamp(static_cast<int>(fx), 0, img.w - 1);
      const int x1 = std::clamp(static_cast<int>(fx) + 1, 0, img.w - 1);
      const double wx = u - fx;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - wx) * img.at(c, y0, x0) + wx * img.at(c, y0, x1);
        const double bot = (1.0 - wx) * img.at(c, y1, x0) + wx * img.at(c, y1, x1);
        out.at(c, y, x) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

void draw_box(Image& img, const CornerRect& r, double red, double green, double blue) {
  const int x0 = std::clamp(static_cast<int>(std::lround(r.x1)), 0, img.w - 1);
  const int x1 = std::clamp(static_cast<int>(std::lround(r.x2)), 0, img.w - 1);
  const int y0 = std::clamp(static_cast<int>(std::lround(r.y1)), 0, img.h - 1);
  const int y1 = std::clamp(static_cast<int>(std::lround(r.y2)), 0, img.h - 1);
  auto put = [&](int y, int x) {
    img.at(0, y, x) = red;
    img.at(1, y, x) = green;
    img.at(2, y, x) = blue;
  };
  for (int x = x0; x <= x1; ++x) {
    put(y0, x);
    put(y1, x);
  }
  for (int y = y0; y <= y1; ++y) {
    put(y, x0);
    put(y, x1);
  }
}

Tensor image_to_tensor(const Image& img) {
  return Tensor::constant(Shape{1, 3, img.h, img.w}, img.rgb);
}

}  // namespace gbd
