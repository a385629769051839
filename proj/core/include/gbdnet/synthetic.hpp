#pragma once

#include <string>
#include <vector>

#include "gbdnet/eval.hpp"
#include "gbdnet/image.hpp"
#include "gbdnet/rng.hpp"

namespace gbd {

/// Class catalogue:
///   1: disc inside a square ring
///   2: the same disc inside diagonal ring strips
///   3: filled square
///   4: plus sign
/// Classes 1 and 2 render the identical glyph inside 1.2x their box; only
/// ring pixels between 1.45x and 2.4x the box half-extent tell them apart,
/// so nothing inside the 0.2-padded crop can.
inline constexpr int kNumClasses = 4;

struct SceneObject {
  int class_id = 1;
  double cx = 0, cy = 0;  // pixel-center coordinates
  double half = 6;        // box half-extent; box is (cx, cy, 2*half, 2*half)
};

struct SyntheticScene {
  Image image;
  std::vector<GroundTruth> gts;  // image_id left 0 until placed in a dataset
};

/// Deterministic rasterization of the given objects on a flat background.
SyntheticScene render_scene(const std::vector<SceneObject>& objects, int w, int h);

struct SceneSpec {
  int image_w = 64;
  int image_h = 64;
  int min_objects = 1;
  int max_objects = 3;
};

/// Randomly places 1..max objects so that no object's pixels reach another's
/// crop regions. Throws GenerationError when even a single object cannot be
/// placed.
SyntheticScene gen_scene(Rng& rng, const SceneSpec& spec);

struct Dataset {
  int image_w = 0, image_h = 0;
  int num_classes = 0;
  std::vector<SyntheticScene> scenes;  // gts carry the scene index as image_id
};

/// scene_NNNN.ppm per image plus annotations.jsonl and meta.json.
void write_dataset(const std::string& dir, const Dataset& ds, std::uint64_t seed);

Dataset gen_dataset(int num_scenes, std::uint64_t seed, const SceneSpec& spec = {});

Dataset load_dataset(const std::string& dir);

}  // namespace gbd
