#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "markerlab/geometry.hpp"
#include "markerlab/imaging.hpp"
#include "markerlab/rng.hpp"

namespace markerlab {

/// Multiplicative lighting field plus its sampled range.
struct LightField {
    GrayImage field;
    double lo = 1.0;
    double hi = 1.0;
};

/// Linear ramp along `angle`: value = lo + (hi-lo) * t where t is the
/// projection of the pixel position onto the angle direction, normalized
/// to [0,1] over the image extent (pixel-index coordinates).
LightField gradient_field(int w, int h, double angle, double lo, double hi);

/// Gradient with random angle in [0,2pi) and random lo <= hi in [0,2].
LightField random_gradient_field(int w, int h, Rng& rng);

/// Classic 2D gradient noise: hashed lattice gradients, quintic fade,
/// remapped from the raw range to [0,1]. Exactly 0.5 on lattice points
/// (pixel coordinates that are multiples of `cell`).
GrayImage perlin_field(int w, int h, int cell, std::uint64_t seed);

/// One smoothed half-plane step: 0 on one side of the line through
/// (px,py) with normal direction `angle`, 1 on the other, linear ramp of
/// width `ramp` px between (hard step when ramp == 0).
GrayImage halfplane_field(int w, int h, double px, double py, double angle,
                          double ramp);

/// Mean of 2..6 random half-plane steps. Values in [0,1].
GrayImage lines_field(int w, int h, Rng& rng);

/// One radial shadow: 1 outside radius, dims smoothly to (1-depth) at the
/// center. radius <= 0 yields a uniform field.
GrayImage disk_shadow_field(int w, int h, double cx, double cy, double radius,
                            double depth);

/// Product of 1..4 random disk shadows. Values in [0,1].
GrayImage circles_field(int w, int h, Rng& rng);

/// Per-channel multiply by the product of all fields, rounded and clamped.
/// Fields must match the image size.
Image apply_lighting(const Image& img, std::span<const GrayImage> fields);
Image apply_lighting(const Image& img, const GrayImage& field);

/// Adds one per-channel offset (drawn uniformly from {-20..20}) to every
/// pixel, clamped.
Image color_shift(const Image& img, Rng& rng);
Image color_shift_by(const Image& img, int dr, int dg, int db);

/// Separable Gaussian, kernel radius ceil(3*sigma), edge-clamped borders.
Image gaussian_blur(const Image& img, double sigma);

/// I.i.d. N(0, sigma^2) per channel, clamped.
Image gaussian_noise(const Image& img, double sigma, Rng& rng);

/// Crop-level geometric transform; flips apply before the rotation.
struct GeoTransform {
    int rotation_quarters = 0;  // clockwise
    bool flip_h = false;
    bool flip_v = false;
};

/// Transforms the crop and maps the corner labels by the same isometry
/// (pixel-index convention: a horizontal flip sends x to w-1-x). The output
/// corners are re-canonicalized CCW starting nearest the top-left, since a
/// mirror reverses orientation.
std::pair<Image, Quad> geo_augment_crop(const Image& crop,
                                        const std::array<Point2, 4>& corners,
                                        const GeoTransform& t);

struct AugmentOptions {
    int copies = 9;           // augmented variants per source image
    bool color_shift = true;
    bool noise = true;
    double blur_prob = 0.2;
    double blur_sigma_lo = 0.5;
    double blur_sigma_hi = 2.5;
    double noise_sigma_max = 12.0;
};

/// Offline detection-set augmentation: copies the source dataset into
/// `out_dir` and adds `copies` photometric variants per image (gradient
/// always; blur with probability blur_prob; color shift / noise per the
/// flags). Annotations are copied unchanged. Augmented files get an
/// `_augK` suffix. Returns the number of images written.
int augment_detection_set(const std::string& dataset_dir,
                          const std::string& out_dir, std::uint64_t seed,
                          const AugmentOptions& opts = {});

}  // namespace markerlab
