#include "markerlab/augment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "markerlab/error.hpp"
#include "markerlab/synthgen.hpp"

namespace markerlab {

LightField gradient_field(int w, int h, double angle, double lo, double hi) {
    if (lo < 0.0 || hi < lo)
        throw ValidationError("gradient_field: need 0 <= lo <= hi");
    LightField out{GrayImage(w, h), lo, hi};
    const double dx = std::cos(angle), dy = std::sin(angle);
    // Projection range over the pixel-index corners of the image.
    double pmin = 0.0, pmax = 0.0;
    bool first = true;
    for (int cy : {0, h - 1})
        for (int cx : {0, w - 1}) {
            const double p = cx * dx + cy * dy;
            if (first) { pmin = pmax = p; first = false; }
            pmin = std::min(pmin, p);
            pmax = std::max(pmax, p);
        }
    const double span = pmax - pmin;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double t = span > 0.0 ? (x * dx + y * dy - pmin) / span : 0.0;
            out.field.at(x, y) = static_cast<float>(lo + (hi - lo) * t);
        }
    return out;
}

LightField random_gradient_field(int w, int h, Rng& rng) {
    const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    double a = rng.uniform(0.0, 2.0);
    double b = rng.uniform(0.0, 2.0);
    if (a > b) std::swap(a, b);
    return gradient_field(w, h, angle, a, b);
}

namespace {

std::uint64_t lattice_hash(std::uint64_t seed, int ix, int iy) {
    std::uint64_t z = seed;
    z ^= static_cast<std::uint64_t>(static_cast<std::int64_t>(ix)) * 0x9e3779b97f4a7c15ull;
    z ^= static_cast<std::uint64_t>(static_cast<std::int64_t>(iy)) * 0xc2b2ae3d27d4eb4full;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

void lattice_gradient(std::uint64_t seed, int ix, int iy, double& gx, double& gy) {
    const double a = static_cast<double>(lattice_hash(seed, ix, iy) >> 11) *
                     0x1.0p-53 * 2.0 * 3.14159265358979323846;
    gx = std::cos(a);
    gy = std::sin(a);
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double perlin_at(std::uint64_t seed, double x, double y) {
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    double n[4];
    int k = 0;
    for (int oy = 0; oy <= 1; ++oy)
        for (int ox = 0; ox <= 1; ++ox) {
            double gx, gy;
            lattice_gradient(seed, x0 + ox, y0 + oy, gx, gy);
            n[k++] = gx * (fx - ox) + gy * (fy - oy);
        }
    const double u = fade(fx), v = fade(fy);
    const double top = n[0] + u * (n[1] - n[0]);
    const double bot = n[2] + u * (n[3] - n[2]);
    return top + v * (bot - top);
}

}  // namespace

GrayImage perlin_field(int w, int h, int cell, std::uint64_t seed) {
    if (cell < 2) throw ValidationError("perlin_field: cell must be >= 2");
    GrayImage g(w, h);
    const double inv = 1.0 / cell;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            g.at(x, y) = static_cast<float>(0.5 * (perlin_at(seed, x * inv, y * inv) + 1.0));
    return g;
}

GrayImage halfplane_field(int w, int h, double px, double py, double angle,
                          double ramp) {
    GrayImage g(w, h);
    const double nx = std::cos(angle), ny = std::sin(angle);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double d = (x - px) * nx + (y - py) * ny;
            double v;
            if (ramp <= 0.0) v = d >= 0.0 ? 1.0 : 0.0;
            else v = std::clamp(0.5 + d / ramp, 0.0, 1.0);
            g.at(x, y) = static_cast<float>(v);
        }
    return g;
}

GrayImage lines_field(int w, int h, Rng& rng) {
    const int k = rng.uniform_int(2, 6);
    GrayImage acc(w, h, 0.0f);
    for (int i = 0; i < k; ++i) {
        const double px = rng.uniform(0.0, w);
        const double py = rng.uniform(0.0, h);
        const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        const double ramp = rng.uniform(2.0, 0.5 * std::max(w, h));
        const GrayImage step = halfplane_field(w, h, px, py, angle, ramp);
        for (std::size_t j = 0; j < acc.values.size(); ++j)
            acc.values[j] += step.values[j];
    }
    for (float& v : acc.values) v /= static_cast<float>(k);
    return acc;
}

GrayImage disk_shadow_field(int w, int h, double cx, double cy, double radius,
                            double depth) {
    GrayImage g(w, h, 1.0f);
    if (radius <= 0.0 || depth <= 0.0) return g;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double r = std::hypot(x - cx, y - cy);
            const double t = std::clamp(1.0 - r / radius, 0.0, 1.0);
            const double s = t * t * (3.0 - 2.0 * t);  // smoothstep
            g.at(x, y) = static_cast<float>(1.0 - depth * s);
        }
    return g;
}

GrayImage circles_field(int w, int h, Rng& rng) {
    const int k = rng.uniform_int(1, 4);
    GrayImage acc(w, h, 1.0f);
    const double dim = std::min(w, h);
    for (int i = 0; i < k; ++i) {
        const double cx = rng.uniform(0.0, w);
        const double cy = rng.uniform(0.0, h);
        const double radius = rng.uniform(dim / 8.0, dim / 1.5);
        const double depth = rng.uniform(0.3, 0.9);
        const GrayImage d = disk_shadow_field(w, h, cx, cy, radius, depth);
        for (std::size_t j = 0; j < acc.values.size(); ++j)
            acc.values[j] *= d.values[j];
    }
    return acc;
}

Image apply_lighting(const Image& img, std::span<const GrayImage> fields) {
    for (const GrayImage& f : fields)
        if (f.width != img.width || f.height != img.height)
            throw ValidationError("apply_lighting: field size mismatch");
    Image out(img.width, img.height);
    const std::size_t n = static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height);
    for (std::size_t i = 0; i < n; ++i) {
        double factor = 1.0;
        for (const GrayImage& f : fields) factor *= f.values[i];
        for (int c = 0; c < 3; ++c) {
            const double v = img.pixels[3 * i + static_cast<std::size_t>(c)] * factor;
            out.pixels[3 * i + static_cast<std::size_t>(c)] =
                static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
        }
    }
    return out;
}

Image apply_lighting(const Image& img, const GrayImage& field) {
    return apply_lighting(img, std::span<const GrayImage>(&field, 1));
}

Image color_shift(const Image& img, Rng& rng) {
    const int dr = rng.uniform_int(-20, 20);
    const int dg = rng.uniform_int(-20, 20);
    const int db = rng.uniform_int(-20, 20);
    return color_shift_by(img, dr, dg, db);
}

Image color_shift_by(const Image& img, int dr, int dg, int db) {
    Image out(img.width, img.height);
    const int d[3] = {dr, dg, db};
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        out.pixels[i] = static_cast<std::uint8_t>(
            std::clamp(static_cast<int>(img.pixels[i]) + d[i % 3], 0, 255));
    return out;
}

Image gaussian_blur(const Image& img, double sigma) {
    if (sigma < 0.0) throw ValidationError("gaussian_blur: sigma must be >= 0");
    if (sigma == 0.0) return img;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (double& v : kernel) v /= sum;

    const int w = img.width, h = img.height;
    std::vector<double> tmp(3u * static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    // Horizontal pass, edge-clamped.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int xx = std::clamp(x + i, 0, w - 1);
                    acc += kernel[static_cast<std::size_t>(i + radius)] *
                           img.px(xx, y)[c];
                }
                tmp[3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) + static_cast<std::size_t>(c)] = acc;
            }
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int yy = std::clamp(y + i, 0, h - 1);
                    acc += kernel[static_cast<std::size_t>(i + radius)] *
                           tmp[3 * (static_cast<std::size_t>(yy) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)) + static_cast<std::size_t>(c)];
                }
                out.px(x, y)[c] = static_cast<std::uint8_t>(
                    std::clamp<long>(std::lround(acc), 0, 255));
            }
    return out;
}

Image gaussian_noise(const Image& img, double sigma, Rng& rng) {
    if (sigma < 0.0) throw ValidationError("gaussian_noise: sigma must be >= 0");
    if (sigma == 0.0) return img;
    Image out(img.width, img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const double v = img.pixels[i] + rng.normal(0.0, sigma);
        out.pixels[i] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
    }
    return out;
}

std::pair<Image, Quad> geo_augment_crop(const Image& crop,
                                        const std::array<Point2, 4>& corners,
                                        const GeoTransform& t) {
    Image img = crop;
    std::array<Point2, 4> pts = corners;

    if (t.flip_h) {
        img = flip_horizontal(img);
        for (Point2& p : pts) p.x = img.width - 1 - p.x;
    }
    if (t.flip_v) {
        img = flip_vertical(img);
        for (Point2& p : pts) p.y = img.height - 1 - p.y;
    }
    const int rot = ((t.rotation_quarters % 4) + 4) % 4;
    for (int k = 0; k < rot; ++k) {
        const int old_h = img.height;
        img = rotate90_cw(img);
        for (Point2& p : pts) p = {old_h - 1 - p.y, p.x};
    }
    return {std::move(img), canonical_ccw(pts)};
}

int augment_detection_set(const std::string& dataset_dir,
                          const std::string& out_dir, std::uint64_t seed,
                          const AugmentOptions& opts) {
    namespace fs = std::filesystem;
    const DatasetManifest manifest = read_manifest(dataset_dir);
    const std::vector<SceneRecord> records = read_annotations(
        (fs::path(dataset_dir) / "annotations.jsonl").string());
    if (records.size() != manifest.images.size())
        throw ValidationError("augment: manifest / annotations image count mismatch");

    fs::create_directories(fs::path(out_dir) / "images");
    Rng root(seed);

    DatasetManifest out_manifest = manifest;
    out_manifest.seed = seed;
    out_manifest.images.clear();
    std::vector<SceneRecord> out_records;

    int written = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const SceneRecord& rec = records[i];
        const Image img = read_png((fs::path(dataset_dir) / rec.image).string());
        write_png(img, (fs::path(out_dir) / rec.image).string());
        out_manifest.images.push_back(rec.image);
        out_records.push_back(rec);
        ++written;

        Rng rng = root.child(i);
        const fs::path rel(rec.image);
        const std::string stem = (rel.parent_path() / rel.stem()).string();
        for (int k = 1; k <= opts.copies; ++k) {
            Image aug = apply_lighting(img, random_gradient_field(img.width, img.height, rng).field);
            if (rng.bernoulli(opts.blur_prob))
                aug = gaussian_blur(aug, rng.uniform(opts.blur_sigma_lo, opts.blur_sigma_hi));
            if (opts.color_shift) aug = color_shift(aug, rng);
            if (opts.noise) {
                // sigma in (0, max]: zero would be a no-op draw
                const double sigma = (1.0 - rng.uniform()) * opts.noise_sigma_max;
                aug = gaussian_noise(aug, sigma, rng);
            }
            const std::string name = stem + "_aug" + std::to_string(k) + ".png";
            write_png(aug, (fs::path(out_dir) / name).string());
            SceneRecord aug_rec = rec;
            aug_rec.image = name;
            out_manifest.images.push_back(name);
            out_records.push_back(std::move(aug_rec));
            ++written;
        }
    }

    write_annotations(out_records, (fs::path(out_dir) / "annotations.jsonl").string());
    write_manifest(out_manifest, out_dir);
    return written;
}

}  // namespace markerlab
