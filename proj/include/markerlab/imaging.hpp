#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "markerlab/geometry.hpp"

namespace markerlab {

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0});

    std::uint8_t* px(int x, int y) {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
    }
    const std::uint8_t* px(int x, int y) const {
        return pixels.data() + 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
    }
    bool valid() const {
        return width >= 1 && height >= 1 &&
               pixels.size() == 3u * static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    }
};

/// Single-channel float raster. Luma images live in [0,1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f);

    float& at(int x, int y) {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
    float at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
    }
};

/// Rec.601 luma, (0.299 R + 0.587 G + 0.114 B) / 255, in [0,1].
GrayImage to_luma(const Image& img);
double luma_of(const std::uint8_t* rgb);

/// Exact median of the per-pixel luma multiset (even count: mean of the
/// two central values).
double median_luma(const Image& img);

/// Bilinear sample at continuous coords (pixel (x,y) center = (x+.5, y+.5)),
/// clamping to the edge outside the raster.
std::array<double, 3> sample_bilinear(const Image& img, double sx, double sy);
double sample_bilinear(const GrayImage& img, double sx, double sy);

/// Warps the region under `src` into an out_w x out_h image. The homography
/// maps src corner k to output rect corner k (CCW correspondence); output
/// pixels sample the source at H^-1 (u+.5, v+.5) with bilinear filtering.
Image warp_crop(const Image& img, const Quad& src, int out_w, int out_h);

/// Axis-aligned special case of warp_crop.
Image crop_resize(const Image& img, const BBox& b, int out_w, int out_h);

/// (v - min) / (max - min); a constant input maps to all zeros so that
/// downstream bit extraction sees "all dark" instead of dividing by zero.
GrayImage normalize_minmax(const GrayImage& g);

Image rotate90_cw(const Image& img);
Image flip_horizontal(const Image& img);
Image flip_vertical(const Image& img);

// --- file I/O ---

/// 8-bit RGB PNG. Non-RGB inputs are expanded/truncated to RGB on read.
Image read_png(const std::string& path);
void write_png(const Image& img, const std::string& path);

/// Raw float stream with ASCII header "GRAY <w> <h>\n", little-endian f32.
GrayImage read_gray(const std::string& path);
void write_gray(const GrayImage& g, const std::string& path);

}  // namespace markerlab
