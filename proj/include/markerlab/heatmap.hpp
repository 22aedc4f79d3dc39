#pragma once

#include <utility>
#include <vector>

#include "markerlab/geometry.hpp"
#include "markerlab/imaging.hpp"

namespace markerlab {

/// Corner-probability map. 64x64 in the pipeline, but every operation here
/// accepts arbitrary sizes (the loss math is used on tiny fixtures too).
using Heatmap = GrayImage;

/// Renders one unnormalized isotropic Gaussian per corner - peak 1.0 at the
/// corner, covariance (10 * base_sigma2) * I - and combines them per pixel
/// by maximum, which keeps every per-corner peak at full amplitude.
/// Corners must lie in [0,w) x [0,h).
Heatmap encode_corners(const std::vector<Point2>& corners, int w = 64,
                       int h = 64, double base_sigma2 = 1.0);

/// weights = (Y - Ymin) / (Ymax - Ymin) * 9 + 1, elementwise; a constant
/// map gets all-ones weights.
GrayImage weight_map(const Heatmap& y);

/// Mean squared error weighted by weight_map(Y): emphasis up to 10x near
/// the encoded corners.
double weighted_mse(const Heatmap& y, const Heatmap& y_hat);

/// A 4-connected component of above-threshold pixels. `values` keeps the
/// heatmap restricted to members (the zero-masked blob of the centroid
/// formula); `score` is their mean.
struct Blob {
    std::vector<std::pair<int, int>> members;  // (row, col)
    std::vector<float> values;                 // parallel to members
    double score = 0.0;
    int area = 0;
    std::pair<int, int> top_left{0, 0};        // lexicographic min member
};

/// 4-connected components of {value >= value_threshold} with area inside
/// [min_area, max_area], sorted by score descending (ties: top-left member
/// ascending).
std::vector<Blob> extract_blobs(const Heatmap& h, double value_threshold,
                                double min_area, double max_area);

/// Value-weighted mean position: x from column indices, y from row indices.
/// Throws ValidationError on zero total mass.
Point2 blob_centroid(const Blob& b);

struct DecodeParams {
    double value_threshold = 0.5;
    double base_sigma2 = 1.0;   // must match the encoder for the area window
    double area_tolerance = 0.5;  // window = analytic area * (1 -+ tolerance)
    // Explicit window override; used instead of the analytic one when >= 0.
    double min_area = -1.0;
    double max_area = -1.0;
};

/// Expected pixel area of one encoded corner's threshold level set.
double analytic_blob_area(double value_threshold, double base_sigma2 = 1.0);

/// Extracts blobs, keeps the top four by score, and returns their
/// centroids. With exactly four corners the result is ordered CCW starting
/// nearest the top-left; with fewer the score order is kept (geometric
/// ordering is undefined below four).
std::vector<Point2> decode_corners(const Heatmap& h,
                                   const DecodeParams& params = {});

}  // namespace markerlab
