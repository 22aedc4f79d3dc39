#include "markerlab/detect.hpp"

#include <algorithm>
#include <cmath>

#include "markerlab/decode.hpp"
#include "markerlab/error.hpp"

namespace markerlab {

BinaryMask adaptive_threshold(const GrayImage& g, int window, double offset) {
    if (window < 3 || window % 2 == 0)
        throw ValidationError("adaptive_threshold: window must be odd and >= 3");
    const int w = g.width, h = g.height;
    // Summed-area table, (w+1) x (h+1).
    std::vector<double> sat(static_cast<std::size_t>(w + 1) * static_cast<std::size_t>(h + 1), 0.0);
    auto sat_at = [&](int x, int y) -> double& {
        return sat[static_cast<std::size_t>(y) * static_cast<std::size_t>(w + 1) + static_cast<std::size_t>(x)];
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            sat_at(x + 1, y + 1) = g.at(x, y) + sat_at(x, y + 1) + sat_at(x + 1, y) - sat_at(x, y);

    BinaryMask mask{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0)};
    const int r = window / 2;
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
            const double sum = sat_at(x1 + 1, y1 + 1) - sat_at(x0, y1 + 1) -
                               sat_at(x1 + 1, y0) + sat_at(x0, y0);
            const double mean = sum / ((x1 - x0 + 1) * (y1 - y0 + 1));
            if (g.at(x, y) < mean - offset)
                mask.values[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = 1;
        }
    }
    return mask;
}

namespace {

// Moore neighborhood, clockwise on screen starting East.
constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};

bool dark(const BinaryMask& m, int x, int y) {
    return x >= 0 && y >= 0 && x < m.width && y < m.height && m.at(x, y) != 0;
}

// Moore boundary trace from the component's top-left-most pixel, entered
// from the West. Returns the closed outer contour in trace order.
std::vector<Point2> trace_contour(const BinaryMask& m, int sx, int sy) {
    std::vector<Point2> contour;
    contour.push_back({static_cast<double>(sx), static_cast<double>(sy)});

    int px = sx, py = sy;
    int back = 4;  // direction index pointing at the backtrack pixel (West)
    const int start_back = back;
    const std::size_t step_cap =
        8u * static_cast<std::size_t>(m.width) * static_cast<std::size_t>(m.height) + 64;

    for (std::size_t step = 0; step < step_cap; ++step) {
        int found = -1;
        // Scan clockwise starting just after the backtrack direction.
        for (int k = 1; k <= 8; ++k) {
            const int d = (back + k) % 8;
            if (dark(m, px + kDx[d], py + kDy[d])) { found = d; break; }
        }
        if (found < 0) return contour;  // isolated pixel
        const int nx = px + kDx[found], ny = py + kDy[found];
        // New backtrack: the previously scanned (non-dark) position, seen
        // from the new pixel.
        const int prev = (found + 7) % 8;
        const int bx = px + kDx[prev], by = py + kDy[prev];
        px = nx; py = ny;
        // Direction from new pixel to backtrack pixel.
        back = 0;
        for (int d = 0; d < 8; ++d)
            if (px + kDx[d] == bx && py + kDy[d] == by) { back = d; break; }
        if (px == sx && py == sy && back == start_back) break;  // Jacob's criterion
        contour.push_back({static_cast<double>(px), static_cast<double>(py)});
    }
    return contour;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    if (len2 <= 0.0) return distance(p, a);
    const double t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
    return distance(p, {a.x + t * vx, a.y + t * vy});
}

void dp_simplify(const std::vector<Point2>& pts, std::size_t lo, std::size_t hi,
                 double eps, std::vector<std::size_t>& keep) {
    // Keeps interior points of (lo, hi) that stick out beyond eps.
    if (hi <= lo + 1) return;
    double dmax = 0.0;
    std::size_t imax = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
        const double d = point_segment_distance(pts[i], pts[lo], pts[hi]);
        if (d > dmax) { dmax = d; imax = i; }
    }
    if (dmax > eps) {
        dp_simplify(pts, lo, imax, eps, keep);
        keep.push_back(imax);
        dp_simplify(pts, imax, hi, eps, keep);
    }
}

std::vector<Point2> simplify_closed(const std::vector<Point2>& contour, double eps) {
    const std::size_t n = contour.size();
    if (n < 4) return {};
    // Split at an approximate diameter (two-sweep farthest pair).
    std::size_t a = 0, b = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = distance(contour[0], contour[i]);
        if (d > best) { best = d; b = i; }
    }
    best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = distance(contour[b], contour[i]);
        if (d > best) { best = d; a = i; }
    }
    if (a == b) return {};
    if (a > b) std::swap(a, b);

    // Rotate so the chain starts at `a`; the split point becomes b - a.
    std::vector<Point2> rot(n);
    for (std::size_t i = 0; i < n; ++i) rot[i] = contour[(a + i) % n];
    const std::size_t mid = b - a;

    std::vector<std::size_t> keep;
    keep.push_back(0);
    dp_simplify(rot, 0, mid, eps, keep);
    keep.push_back(mid);
    // Second half wraps to the (virtual) closing point == rot[0].
    std::vector<Point2> half2(rot.begin() + static_cast<std::ptrdiff_t>(mid), rot.end());
    half2.push_back(rot[0]);
    std::vector<std::size_t> keep2;
    dp_simplify(half2, 0, half2.size() - 1, eps, keep2);
    for (std::size_t k : keep2) keep.push_back(mid + k);

    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    std::vector<Point2> out;
    out.reserve(keep.size());
    for (std::size_t k : keep) out.push_back(rot[k]);
    return out;
}

double polygon_area_abs(const std::vector<Point2>& poly) {
    double s = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point2& p = poly[i];
        const Point2& q = poly[(i + 1) % poly.size()];
        s += p.x * q.y - q.x * p.y;
    }
    return std::abs(0.5 * s);
}

}  // namespace

std::vector<Quad> find_quads(const BinaryMask& mask, double min_area,
                             double simplify_frac) {
    const int w = mask.width, h = mask.height;
    std::vector<int> label(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), -1);
    auto label_at = [&](int x, int y) -> int& {
        return label[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
    };

    std::vector<Quad> quads;
    std::vector<std::pair<int, int>> stack;
    int next_label = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (mask.at(x, y) == 0 || label_at(x, y) >= 0) continue;
            // New component; BFS label it. The scan order guarantees (x,y)
            // is its top-left-most pixel, the Moore trace start.
            const int id = next_label++;
            std::size_t size = 0;
            stack.clear();
            stack.emplace_back(x, y);
            label_at(x, y) = id;
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                ++size;
                for (int d = 0; d < 8; ++d) {
                    const int nx = cx + kDx[d], ny = cy + kDy[d];
                    if (!dark(mask, nx, ny) || label_at(nx, ny) >= 0) continue;
                    label_at(nx, ny) = id;
                    stack.emplace_back(nx, ny);
                }
            }
            if (static_cast<double>(size) < min_area / 4.0) continue;  // cheap pre-filter

            const std::vector<Point2> contour = trace_contour(mask, x, y);
            if (contour.size() < 4) continue;
            double perimeter = 0.0;
            for (std::size_t i = 0; i < contour.size(); ++i)
                perimeter += distance(contour[i], contour[(i + 1) % contour.size()]);
            const std::vector<Point2> poly =
                simplify_closed(contour, simplify_frac * perimeter);
            if (poly.size() != 4) continue;
            if (polygon_area_abs(poly) < min_area) continue;
            Quad q{{poly[0], poly[1], poly[2], poly[3]}};
            if (!q.is_convex()) continue;
            if (!q.is_ccw())
                q = Quad{{poly[0], poly[3], poly[2], poly[1]}};
            quads.push_back(q);
        }
    }
    return quads;
}

std::vector<Detection> detect(const Image& img, const Dictionary& dict,
                              int max_hamming, const DetectParams& params) {
    const GrayImage luma = to_luma(img);
    const BinaryMask mask = adaptive_threshold(luma, params.window, params.offset);
    const std::vector<Quad> quads =
        find_quads(mask, params.min_area, params.simplify_frac);

    std::vector<Detection> candidates;
    for (const Quad& q : quads) {
        DecodeOutcome outcome;
        try {
            outcome = decode_at(img, q, dict, max_hamming);
        } catch (const GeometryError&) {
            continue;
        }
        if (!outcome.accepted) continue;
        Detection d;
        d.quad = q;
        d.bbox = quad_bbox(q);
        d.hamming = outcome.match.distance;
        d.id = outcome.match.id;
        d.score = 1.0 - static_cast<double>(outcome.match.distance) / BitGrid::kBits;
        candidates.push_back(std::move(d));
    }

    // NMS on bbox IoU, higher score wins; stable for equal scores.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    std::vector<Detection> kept;
    for (const Detection& c : candidates) {
        bool suppressed = false;
        for (const Detection& k : kept)
            if (iou(c.bbox, k.bbox) > params.nms_iou) { suppressed = true; break; }
        if (!suppressed) kept.push_back(c);
    }
    return kept;
}

}  // namespace markerlab
