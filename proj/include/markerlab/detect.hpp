#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "markerlab/dictionary.hpp"
#include "markerlab/geometry.hpp"
#include "markerlab/imaging.hpp"

namespace markerlab {

struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;  // 1 = dark

    std::uint8_t at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
};

/// Pixel is dark iff value < local_mean(window) - offset. The window mean
/// is a box filter clamped against the image borders (partial windows
/// average only the in-image pixels).
BinaryMask adaptive_threshold(const GrayImage& g, int window, double offset);

/// Outer contours of dark 8-connected regions, simplified to polygons with
/// a tolerance of `simplify_frac` of the contour perimeter. Keeps convex
/// 4-vertex results with polygon area >= min_area, oriented CCW.
std::vector<Quad> find_quads(const BinaryMask& mask, double min_area = 100.0,
                             double simplify_frac = 0.02);

struct Detection {
    Quad quad;
    BBox bbox;
    double score = 0.0;  // 1 - hamming/36 (synthetic confidence)
    std::optional<int> id;
    std::optional<int> hamming;
};

struct DetectParams {
    int window = 15;
    double offset = 7.0 / 255.0;
    double min_area = 100.0;
    double simplify_frac = 0.02;
    double nms_iou = 0.5;
};

/// Classical baseline: luma -> adaptive threshold -> quad extraction ->
/// decode each quad, keep Hamming-accepted outcomes, suppress overlapping
/// boxes (IoU > nms_iou keeps the higher score).
std::vector<Detection> detect(const Image& img, const Dictionary& dict,
                              int max_hamming, const DetectParams& params = {});

}  // namespace markerlab
