#include "markerlab/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "markerlab/error.hpp"

namespace markerlab {

Image::Image(int w, int h, std::array<std::uint8_t, 3> fill)
    : width(w), height(h),
      pixels(3u * static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
    for (std::size_t i = 0; i < pixels.size(); i += 3) {
        pixels[i] = fill[0];
        pixels[i + 1] = fill[1];
        pixels[i + 2] = fill[2];
    }
}

GrayImage::GrayImage(int w, int h, float fill)
    : width(w), height(h),
      values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

double luma_of(const std::uint8_t* rgb) {
    return (0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]) / 255.0;
}

GrayImage to_luma(const Image& img) {
    GrayImage g(img.width, img.height);
    const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    for (std::size_t i = 0; i < n; ++i)
        g.values[i] = static_cast<float>(luma_of(&img.pixels[3 * i]));
    return g;
}

double median_luma(const Image& img) {
    const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = luma_of(&img.pixels[3 * i]);
    std::sort(v.begin(), v.end());
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

struct BilinearTaps {
    int x0, y0, x1, y1;
    double fx, fy;
};

inline BilinearTaps taps(double sx, double sy, int w, int h) {
    const double gx = sx - 0.5;
    const double gy = sy - 0.5;
    const double fx0 = std::floor(gx);
    const double fy0 = std::floor(gy);
    BilinearTaps t;
    t.fx = gx - fx0;
    t.fy = gy - fy0;
    t.x0 = clampi(static_cast<int>(fx0), 0, w - 1);
    t.y0 = clampi(static_cast<int>(fy0), 0, h - 1);
    t.x1 = clampi(static_cast<int>(fx0) + 1, 0, w - 1);
    t.y1 = clampi(static_cast<int>(fy0) + 1, 0, h - 1);
    return t;
}

}  // namespace

std::array<double, 3> sample_bilinear(const Image& img, double sx, double sy) {
    const BilinearTaps t = taps(sx, sy, img.width, img.height);
    const std::uint8_t* p00 = img.px(t.x0, t.y0);
    const std::uint8_t* p10 = img.px(t.x1, t.y0);
    const std::uint8_t* p01 = img.px(t.x0, t.y1);
    const std::uint8_t* p11 = img.px(t.x1, t.y1);
    std::array<double, 3> out;
    for (int c = 0; c < 3; ++c) {
        const double top = p00[c] * (1.0 - t.fx) + p10[c] * t.fx;
        const double bot = p01[c] * (1.0 - t.fx) + p11[c] * t.fx;
        out[static_cast<std::size_t>(c)] = top * (1.0 - t.fy) + bot * t.fy;
    }
    return out;
}

double sample_bilinear(const GrayImage& img, double sx, double sy) {
    const BilinearTaps t = taps(sx, sy, img.width, img.height);
    const double top = img.at(t.x0, t.y0) * (1.0 - t.fx) + img.at(t.x1, t.y0) * t.fx;
    const double bot = img.at(t.x0, t.y1) * (1.0 - t.fx) + img.at(t.x1, t.y1) * t.fx;
    return top * (1.0 - t.fy) + bot * t.fy;
}

Image warp_crop(const Image& img, const Quad& src, int out_w, int out_h) {
    if (!img.valid()) throw ValidationError("warp_crop: invalid source image");
    if (out_w < 1 || out_h < 1) throw ValidationError("warp_crop: bad output size");
    const Quad dst = rect_quad({0, 0, static_cast<double>(out_w), static_cast<double>(out_h)});
    const Homography inv = invert(homography_from_quad(src, dst));
    Image out(out_w, out_h);
    for (int v = 0; v < out_h; ++v) {
        for (int u = 0; u < out_w; ++u) {
            const Point2 s = apply_homography(inv, {u + 0.5, v + 0.5});
            const std::array<double, 3> c = sample_bilinear(img, s.x, s.y);
            std::uint8_t* po = out.px(u, v);
            for (int k = 0; k < 3; ++k)
                po[k] = static_cast<std::uint8_t>(
                    clampi(static_cast<int>(std::lround(c[static_cast<std::size_t>(k)])), 0, 255));
        }
    }
    return out;
}

Image crop_resize(const Image& img, const BBox& b, int out_w, int out_h) {
    if (b.w <= 0.0 || b.h <= 0.0) throw ValidationError("crop_resize: empty box");
    if (b.x2() <= 0.0 || b.y2() <= 0.0 || b.x >= img.width || b.y >= img.height)
        throw ValidationError("crop_resize: box does not intersect image");
    return warp_crop(img, rect_quad(b), out_w, out_h);
}

GrayImage normalize_minmax(const GrayImage& g) {
    if (g.values.empty()) return g;
    float lo = g.values[0], hi = g.values[0];
    for (float v : g.values) { lo = std::min(lo, v); hi = std::max(hi, v); }
    GrayImage out(g.width, g.height);
    if (hi <= lo) return out;  // constant input -> all zeros
    const float span = hi - lo;
    for (std::size_t i = 0; i < g.values.size(); ++i)
        out.values[i] = (g.values[i] - lo) / span;
    return out;
}

Image rotate90_cw(const Image& img) {
    Image out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            std::memcpy(out.px(img.height - 1 - y, x), img.px(x, y), 3);
    return out;
}

Image flip_horizontal(const Image& img) {
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            std::memcpy(out.px(img.width - 1 - x, y), img.px(x, y), 3);
    return out;
}

Image flip_vertical(const Image& img) {
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        std::memcpy(out.px(0, img.height - 1 - y), img.px(0, y),
                    3u * static_cast<std::size_t>(img.width));
    return out;
}

// --- PNG I/O (libpng) ---

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

Image read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("read_png: libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("read_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("read_png: decode failed for " + path);
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    // Normalize everything to 8-bit RGB.
    png_set_strip_16(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
        png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    Image img(static_cast<int>(png_get_image_width(png, info)),
              static_cast<int>(png_get_image_height(png, info)));
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) rows[static_cast<std::size_t>(y)] = img.px(0, y);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const Image& img, const std::string& path) {
    if (!img.valid()) throw ValidationError("write_png: invalid image");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("write_png: libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("write_png: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("write_png: encode failed for " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.px(0, y)));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// --- GRAY raw-float I/O ---

GrayImage read_gray(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("read_gray: cannot open " + path);
    char tag[5] = {0};
    int w = 0, h = 0;
    if (std::fscanf(fp.get(), "%4s %d %d", tag, &w, &h) != 3 ||
        std::strcmp(tag, "GRAY") != 0 || w < 1 || h < 1)
        throw ParseError("read_gray: bad header in " + path);
    if (std::fgetc(fp.get()) != '\n')
        throw ParseError("read_gray: bad header terminator in " + path);
    GrayImage g(w, h);
    const std::size_t n = g.values.size();
    if (std::fread(g.values.data(), sizeof(float), n, fp.get()) != n)
        throw ParseError("read_gray: truncated payload in " + path);
    if constexpr (std::endian::native == std::endian::big)
        throw IoError("read_gray: big-endian hosts unsupported");
    return g;
}

void write_gray(const GrayImage& g, const std::string& path) {
    if (g.width < 1 || g.height < 1 ||
        g.values.size() != static_cast<std::size_t>(g.width) * static_cast<std::size_t>(g.height))
        throw ValidationError("write_gray: invalid image");
    if constexpr (std::endian::native == std::endian::big)
        throw IoError("write_gray: big-endian hosts unsupported");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("write_gray: cannot open " + path);
    std::fprintf(fp.get(), "GRAY %d %d\n", g.width, g.height);
    if (std::fwrite(g.values.data(), sizeof(float), g.values.size(), fp.get()) != g.values.size())
        throw IoError("write_gray: short write to " + path);
}

}  // namespace markerlab
