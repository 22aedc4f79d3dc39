#include "markerlab/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "markerlab/error.hpp"

namespace markerlab {

Heatmap encode_corners(const std::vector<Point2>& corners, int w, int h,
                       double base_sigma2) {
    if (base_sigma2 <= 0.0)
        throw ValidationError("encode_corners: base_sigma2 must be > 0");
    for (const Point2& c : corners)
        if (c.x < 0.0 || c.y < 0.0 || c.x >= w || c.y >= h)
            throw ValidationError("encode_corners: corner out of bounds");
    Heatmap map(w, h, 0.0f);
    const double inv_two_sigma2 = 1.0 / (2.0 * 10.0 * base_sigma2);
    for (const Point2& c : corners)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const double d2 = (j - c.x) * (j - c.x) + (i - c.y) * (i - c.y);
                const float v = static_cast<float>(std::exp(-d2 * inv_two_sigma2));
                map.at(j, i) = std::max(map.at(j, i), v);
            }
    return map;
}

GrayImage weight_map(const Heatmap& y) {
    GrayImage w(y.width, y.height, 1.0f);
    if (y.values.empty()) return w;
    float lo = y.values[0], hi = y.values[0];
    for (float v : y.values) { lo = std::min(lo, v); hi = std::max(hi, v); }
    if (hi <= lo) return w;  // constant map: all weights 1
    const float span = hi - lo;
    for (std::size_t i = 0; i < y.values.size(); ++i)
        w.values[i] = (y.values[i] - lo) / span * 9.0f + 1.0f;
    return w;
}

double weighted_mse(const Heatmap& y, const Heatmap& y_hat) {
    if (y.width != y_hat.width || y.height != y_hat.height)
        throw ValidationError("weighted_mse: shape mismatch");
    const GrayImage w = weight_map(y);
    double sum = 0.0;
    for (std::size_t i = 0; i < y.values.size(); ++i) {
        const double d = static_cast<double>(y_hat.values[i]) - static_cast<double>(y.values[i]);
        sum += d * d * static_cast<double>(w.values[i]);
    }
    return sum / (static_cast<double>(y.width) * static_cast<double>(y.height));
}

std::vector<Blob> extract_blobs(const Heatmap& h, double value_threshold,
                                double min_area, double max_area) {
    if (value_threshold <= 0.0 || value_threshold >= 1.0)
        throw ValidationError("extract_blobs: threshold must be in (0,1)");
    const int w = h.width, hh = h.height;
    std::vector<char> visited(static_cast<std::size_t>(w) * static_cast<std::size_t>(hh), 0);
    const float thr = static_cast<float>(value_threshold);

    std::vector<Blob> blobs;
    std::vector<std::pair<int, int>> stack;
    for (int i = 0; i < hh; ++i) {
        for (int j = 0; j < w; ++j) {
            const std::size_t idx = static_cast<std::size_t>(i) * static_cast<std::size_t>(w) + static_cast<std::size_t>(j);
            if (visited[idx] || h.at(j, i) < thr) continue;
            Blob b;
            b.top_left = {i, j};
            stack.clear();
            stack.emplace_back(i, j);
            visited[idx] = 1;
            while (!stack.empty()) {
                const auto [ci, cj] = stack.back();
                stack.pop_back();
                b.members.emplace_back(ci, cj);
                b.values.push_back(h.at(cj, ci));
                if (std::pair{ci, cj} < b.top_left) b.top_left = {ci, cj};
                constexpr int di[4] = {-1, 1, 0, 0};
                constexpr int dj[4] = {0, 0, -1, 1};
                for (int k = 0; k < 4; ++k) {
                    const int ni = ci + di[k], nj = cj + dj[k];
                    if (ni < 0 || nj < 0 || ni >= hh || nj >= w) continue;
                    const std::size_t nidx = static_cast<std::size_t>(ni) * static_cast<std::size_t>(w) + static_cast<std::size_t>(nj);
                    if (visited[nidx] || h.at(nj, ni) < thr) continue;
                    visited[nidx] = 1;
                    stack.emplace_back(ni, nj);
                }
            }
            b.area = static_cast<int>(b.members.size());
            if (b.area < min_area || b.area > max_area) continue;
            double sum = 0.0;
            for (float v : b.values) sum += v;
            b.score = sum / b.area;
            blobs.push_back(std::move(b));
        }
    }
    std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.top_left < b.top_left;
    });
    return blobs;
}

Point2 blob_centroid(const Blob& b) {
    double mass = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t k = 0; k < b.members.size(); ++k) {
        const double v = b.values[k];
        mass += v;
        sy += b.members[k].first * v;
        sx += b.members[k].second * v;
    }
    if (mass <= 0.0) throw ValidationError("blob_centroid: zero total mass");
    return {sx / mass, sy / mass};
}

double analytic_blob_area(double value_threshold, double base_sigma2) {
    // Level set of exp(-d^2 / (2*10*s2)) >= t is a disk of radius
    // sqrt(-2*10*s2*ln t).
    return 3.14159265358979323846 * (-2.0 * 10.0 * base_sigma2 * std::log(value_threshold));
}

std::vector<Point2> decode_corners(const Heatmap& h, const DecodeParams& params) {
    double lo = params.min_area, hi = params.max_area;
    if (lo < 0.0 || hi < 0.0) {
        const double area = analytic_blob_area(params.value_threshold, params.base_sigma2);
        lo = area * (1.0 - params.area_tolerance);
        hi = area * (1.0 + params.area_tolerance);
    }
    std::vector<Blob> blobs = extract_blobs(h, params.value_threshold, lo, hi);
    if (blobs.size() > 4) blobs.resize(4);
    std::vector<Point2> pts;
    pts.reserve(blobs.size());
    for (const Blob& b : blobs) pts.push_back(blob_centroid(b));
    if (pts.size() == 4) {
        const Quad q = canonical_ccw({pts[0], pts[1], pts[2], pts[3]});
        pts.assign(q.corners.begin(), q.corners.end());
    }
    return pts;
}

}  // namespace markerlab
