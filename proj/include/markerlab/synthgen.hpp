#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "markerlab/dictionary.hpp"
#include "markerlab/geometry.hpp"
#include "markerlab/imaging.hpp"
#include "markerlab/marker_render.hpp"
#include "markerlab/rng.hpp"

namespace markerlab {

/// Per-marker ground truth inside one scene.
struct SceneAnnotation {
    std::optional<int> id;  // absent for fakes
    Quad corners;           // CCW, inside the image
    BBox bbox;              // quad_bbox(corners)
    bool fake = false;
    FakeKind fake_kind = FakeKind::none;
};

/// One annotation-JSONL line: an image and its markers.
struct SceneRecord {
    std::string image;
    std::vector<SceneAnnotation> markers;
};

struct BackgroundItem {
    std::string path;
    double median_luma = 0.0;
};

/// Luma-binned background set. `items` is the luma-sorted prefix that
/// survived the equal-size split; bins hold indices into it.
struct BackgroundPool {
    std::vector<BackgroundItem> items;
    std::vector<std::vector<int>> bins;
};

struct SceneConfig {
    int frame_w = 640;
    int frame_h = 360;
    int min_real = 1;
    int max_real = 20;
    int min_fakes = 0;
    int max_fakes = 4;
    double min_local_luma = 0.05;  // re-roll darker placements (real markers)
    int placement_retries = 40;    // per marker slot
    int cell_px = 12;              // face raster resolution
    PoseRanges pose;
};

struct GenerateConfig {
    SceneConfig scene;
    int train_size = 2000;
    int val_size = 500;
    int n_bins = 10;
};

struct DatasetManifest {
    std::string split;
    std::uint64_t seed = 0;
    GenerateConfig config;
    std::string config_digest;
    std::vector<std::string> images;  // relative paths, annotation order
};

/// Wide-orients (rotating portrait inputs 90 deg CW) and center-crops to the
/// target size; nullopt when the rotated input is smaller than the target.
std::optional<Image> prepare_background(const Image& img, int target_w = 640,
                                        int target_h = 360);

/// Stable-sorts by (median_luma, input index) and splits into n_bins
/// equal-size contiguous groups, dropping up to n_bins-1 largest-luma
/// leftovers. Throws ValidationError with fewer than n_bins items.
BackgroundPool bin_backgrounds(std::vector<BackgroundItem> measured,
                               int n_bins = 10);

/// total/n_bins uniform draws without replacement per bin. `total` must be
/// divisible by the bin count. Returns indices into pool.items.
std::vector<int> sample_backgrounds(const BackgroundPool& pool, int total,
                                    Rng& rng);

/// Overlays 1..max_real dictionary markers (ids without replacement) plus
/// 0..max_fakes fakes onto the background. Placements are rejection-sampled
/// for non-overlap (face bboxes stay disjoint) and, for real markers, for a
/// local median background luma of at least min_local_luma so every
/// annotation stays decodable. Markers blend as rgb * background_luma,
/// alpha-composited by the projected coverage mask.
std::pair<Image, std::vector<SceneAnnotation>> compose_scene(
    const Image& background, const Dictionary& dict, Rng& rng,
    const SceneConfig& config);

struct GenerateResult {
    DatasetManifest train;
    DatasetManifest val;
};

/// Builds the train/val dataset under out_dir (<split>/images/*.png,
/// <split>/annotations.jsonl, <split>/manifest.json). Background images are
/// drawn round-robin across luma bins; the two splits never share one.
/// Image k derives its RNG from (seed, k), so reruns are byte-identical
/// and composition may run in parallel. `jobs` <= 1 runs serially.
GenerateResult generate_dataset(const std::string& background_dir,
                                const Dictionary& dict, std::uint64_t seed,
                                const std::string& out_dir,
                                const GenerateConfig& config = {},
                                int jobs = 1);

// --- serialization ---

std::vector<SceneRecord> read_annotations(const std::string& path);
void write_annotations(const std::vector<SceneRecord>& records,
                       const std::string& path);

DatasetManifest read_manifest(const std::string& dataset_dir);
void write_manifest(const DatasetManifest& manifest,
                    const std::string& dataset_dir);

std::string config_digest(const GenerateConfig& config);

}  // namespace markerlab
