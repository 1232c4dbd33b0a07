#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vjdet/image.hpp"

namespace vjdet {

/// One annotated object window inside a source image.
struct PositiveEntry {
  std::string path;
  Rect box;
};

/// Training inputs: annotated positive windows plus images guaranteed free
/// of the object.
struct SampleManifest {
  std::vector<PositiveEntry> positives;
  std::vector<std::string> negatives;
};

/// Line format: "<path> <count> [<x> <y> <w> <h>]*". Every referenced file
/// must exist and every rect must fit its image; errors carry path and line
/// number.
std::vector<PositiveEntry> load_positive_manifest(const std::string& path);

/// Newline-separated list of image paths.
std::vector<std::string> load_negative_list(const std::string& path);

SampleManifest load_manifest(const std::string& positives_path, const std::string& negatives_path);

struct TruthBox {
  Rect box;
  bool ignore = false;
};

/// Ground truth boxes per image, keyed by the path as written.
struct GroundTruth {
  std::map<std::string, std::vector<TruthBox>> by_image;
};

/// Same line format as the positive manifest.
GroundTruth load_ground_truth(const std::string& path);

/// Area-average downscale / nearest-neighbor upscale; identity when the
/// size already matches.
GrayImage resize_image(const GrayImage& img, int out_w, int out_h);

/// Crops `box` (must lie inside img) and rescales to the base window.
GrayImage crop_to_window(const GrayImage& img, const Rect& box, int base_w, int base_h);

/// Loads and crops every manifest positive to the base window.
std::vector<GrayImage> load_positive_windows(const std::vector<PositiveEntry>& positives, int base_w, int base_h);

std::vector<GrayImage> load_images(const std::vector<std::string>& paths);

/// Synthetic stand-in task: light-background frames with dark squares at
/// recorded boxes, plus structure-free noise negatives. Deterministic for a
/// given seed.
struct SynthSpec {
  int positive_count = 500;
  int negative_frame_count = 1000;
  int scene_frame_count = 200;
  int frame_w = 160;
  int frame_h = 120;
  int window = 24;       // positive sample size; the dark square fills the central half
  int object_min = 24;   // smallest ground-truth box in scenes
  int object_max = 64;   // largest ground-truth box in scenes
  int max_objects_per_frame = 3;
  double noise_stddev = 6.0;
  int background = 200;
  int foreground = 40;
};

struct SynthData {
  std::vector<GrayImage> positives;        // window x window samples
  std::vector<GrayImage> negative_frames;  // frame_w x frame_h noise
  std::vector<GrayImage> scene_frames;     // frames with objects
  std::vector<std::string> scene_names;    // "scene_0000.pgm", ...
  GroundTruth truth;                       // boxes per scene name
};

SynthData synth_dataset(const SynthSpec& spec, std::uint64_t seed);

}  // namespace vjdet
