#include "gbdnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "gbdnet/error.hpp"

namespace gbd {

namespace {

struct Rgb {
  double r, g, b;
};

constexpr Rgb kBackground{0.15, 0.15, 0.15};
constexpr Rgb kDisc{0.85, 0.45, 0.2};
constexpr Rgb kRing{0.3, 0.6, 0.9};
constexpr Rgb kSquare{0.25, 0.75, 0.35};
constexpr Rgb kCross{0.9, 0.85, 0.3};

// Outermost rendered pixel distance from the center, in max-norm units of
// the half-extent.
double extent_factor(int class_id) {
  switch (class_id) {
    case 1: return 1.9;
    case 2: return 2.4;
    default: return 1.0;
  }
}

// Hit-test one pixel center against one object; false leaves the pixel alone.
bool shade(const SceneObject& o, double px, double py, Rgb* out) {
  const double dx = px - o.cx;
  const double dy = py - o.cy;
  const double e = o.half;
  const double amax = std::max(std::abs(dx), std::abs(dy)) / e;
  const double a1 = (std::abs(dx) + std::abs(dy)) / e;
  switch (o.class_id) {
    case 1:
    case 2: {
      if (std::hypot(dx, dy) <= 0.8 * e) {
        *out = kDisc;
        return true;
      }
      if (o.class_id == 1 && amax >= 1.5 && amax <= 1.9) {
        *out = kRing;
        return true;
      }
      // Diagonal strips: present only where the 1-norm band survives the
      // max-norm window, i.e. away from the axes.
      if (o.class_id == 2 && a1 >= 2.9 && a1 <= 3.6 && amax >= 1.45 && amax <= 2.4) {
        *out = kRing;
        return true;
      }
      return false;
    }
    case 3:
      if (amax <= 0.9) {
        *out = kSquare;
        return true;
      }
      return false;
    case 4:
      if ((std::abs(dx) <= 0.35 * e && std::abs(dy) <= e) ||
          (std::abs(dy) <= 0.35 * e && std::abs(dx) <= e)) {
        *out = kCross;
        return true;
      }
      return false;
    default:
      throw DomainError("render_scene: unknown class " + std::to_string(o.class_id));
  }
}

}  // namespace

SyntheticScene render_scene(const std::vector<SceneObject>& objects, int w, int h) {
  SyntheticScene scene;
  scene.image = Image::filled(w, h, kBackground.r, kBackground.g, kBackground.b);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      Rgb c;
      for (const SceneObject& o : objects)
        if (shade(o, x, y, &c)) {
          scene.image.at(0, y, x) = c.r;
          scene.image.at(1, y, x) = c.g;
          scene.image.at(2, y, x) = c.b;
          break;
        }
    }
  for (const SceneObject& o : objects)
    scene.gts.push_back({0, o.class_id, Box{o.cx, o.cy, 2.0 * o.half, 2.0 * o.half}});
  return scene;
}

SyntheticScene gen_scene(Rng& rng, const SceneSpec& spec) {
  if (spec.min_objects < 1 || spec.max_objects < spec.min_objects)
    throw GenerationError("gen_scene: bad object count range");
  const int want = static_cast<int>(
      rng.uniform_int(spec.min_objects, spec.max_objects));
  std::vector<SceneObject> placed;
  for (int k = 0; k < want; ++k) {
    bool done = false;
    for (int attempt = 0; attempt < 60 && !done; ++attempt) {
      SceneObject o;
      // The ambiguous pair is drawn a little more often: their per-class AP
      // statistics need more instances to settle than the easy classes do.
      const double u = rng.uniform();
      o.class_id = u < 0.3 ? 1 : u < 0.6 ? 2 : u < 0.8 ? 3 : 4;
      // The ambiguous pair keeps one size and integer centers so that any
      // two of their 0.2-padded crops are pixel-identical.
      o.half = (o.class_id <= 2) ? 6.0 : static_cast<double>(rng.uniform_int(5, 7));
      // Far enough from the border that every rendered pixel fits, ring
      // included.
      const int lo = static_cast<int>(std::ceil(extent_factor(o.class_id) * o.half)) + 1;
      const int hix = spec.image_w - 1 - lo;
      const int hiy = spec.image_h - 1 - lo;
      if (hix < lo || hiy < lo) continue;
      o.cx = static_cast<double>(rng.uniform_int(lo, hix));
      o.cy = static_cast<double>(rng.uniform_int(lo, hiy));
      bool clear = true;
      for (const SceneObject& p : placed) {
        const double d = std::max(std::abs(o.cx - p.cx), std::abs(o.cy - p.cy));
        // Keep each object's largest context crop free of the other's pixels.
        const double need = std::max(2.7 * o.half + 2.0 + extent_factor(p.class_id) * p.half,
                                     2.7 * p.half + 2.0 + extent_factor(o.class_id) * o.half);
        if (d < need) {
          clear = false;
          break;
        }
      }
      if (clear) {
        placed.push_back(o);
        done = true;
      }
    }
  }
  if (placed.empty())
    throw GenerationError("gen_scene: could not place any object in " +
                          std::to_string(spec.image_w) + "x" + std::to_string(spec.image_h));
  return render_scene(placed, spec.image_w, spec.image_h);
}

Dataset gen_dataset(int num_scenes, std::uint64_t seed, const SceneSpec& spec) {
  if (num_scenes < 1) throw GenerationError("gen_dataset: need at least one scene");
  Dataset ds;
  ds.image_w = spec.image_w;
  ds.image_h = spec.image_h;
  ds.num_classes = kNumClasses;
  ds.scenes.reserve(static_cast<size_t>(num_scenes));
  for (int i = 0; i < num_scenes; ++i) {
    Rng rng(derive_seed(seed, "scene." + std::to_string(i)));
    SyntheticScene scene = gen_scene(rng, spec);
    for (GroundTruth& g : scene.gts) g.image_id = i;
    ds.scenes.push_back(std::move(scene));
  }
  return ds;
}

namespace {

nlohmann::json box_to_json(const Box& b) {
  const CornerRect r = to_corners(b);
  return nlohmann::json::array({r.x1, r.y1, r.x2, r.y2});
}

std::string scene_filename(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%04d.ppm", i);
  return buf;
}

}  // namespace

void write_dataset(const std::string& dir, const Dataset& ds, std::uint64_t seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (size_t i = 0; i < ds.scenes.size(); ++i)
    save_ppm(ds.scenes[i].image, (fs::path(dir) / scene_filename(static_cast<int>(i))).string());

  std::ofstream ann(fs::path(dir) / "annotations.jsonl");
  if (!ann) throw FormatError("cannot write annotations in " + dir);
  for (const SyntheticScene& scene : ds.scenes)
    for (const GroundTruth& g : scene.gts) {
      nlohmann::json line;
      line["image_id"] = g.image_id;
      line["class_id"] = g.class_id;
      line["box"] = box_to_json(g.box);
      ann << line.dump() << "\n";
    }

  nlohmann::json meta;
  meta["num_images"] = ds.scenes.size();
  meta["num_classes"] = ds.num_classes;
  meta["image_w"] = ds.image_w;
  meta["image_h"] = ds.image_h;
  meta["seed"] = seed;
  std::ofstream mf(fs::path(dir) / "meta.json");
  mf << meta.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "meta.json");
  if (!mf) throw FormatError("no meta.json in " + dir);
  nlohmann::json meta = nlohmann::json::parse(mf);
  Dataset ds;
  ds.image_w = meta.at("image_w").get<int>();
  ds.image_h = meta.at("image_h").get<int>();
  ds.num_classes = meta.at("num_classes").get<int>();
  const int n = meta.at("num_images").get<int>();
  ds.scenes.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i)
    ds.scenes[i].image = load_ppm((fs::path(dir) / scene_filename(i)).string());

  std::ifstream ann(fs::path(dir) / "annotations.jsonl");
  if (!ann) throw FormatError("no annotations.jsonl in " + dir);
  std::string line;
  while (std::getline(ann, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    GroundTruth g;
    g.image_id = j.at("image_id").get<int>();
    g.class_id = j.at("class_id").get<int>();
    const auto& b = j.at("box");
    g.box = to_center({b.at(0).get<double>(), b.at(1).get<double>(),
                       b.at(2).get<double>(), b.at(3).get<double>()});
    if (g.image_id < 0 || g.image_id >= n)
      throw FormatError("annotation references image " + std::to_string(g.image_id));
    ds.scenes[g.image_id].gts.push_back(g);
  }
  return ds;
}

}  // namespace gbd
