#include "markerlab/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "markerlab/error.hpp"

namespace markerlab {

double distance(Point2 a, Point2 b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

double Quad::signed_area() const {
    // Shoelace with the sign flipped so CCW-on-screen (y down) is positive.
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
        const Point2& p = corners[static_cast<std::size_t>(i)];
        const Point2& q = corners[static_cast<std::size_t>((i + 1) % 4)];
        s += p.x * q.y - q.x * p.y;
    }
    return -0.5 * s;
}

bool Quad::is_convex() const {
    // All turns must share a sign (zero cross = collinear = degenerate).
    int sign = 0;
    for (int i = 0; i < 4; ++i) {
        const Point2 a = corners[static_cast<std::size_t>(i)];
        const Point2 b = corners[static_cast<std::size_t>((i + 1) % 4)];
        const Point2 c = corners[static_cast<std::size_t>((i + 2) % 4)];
        const double cross =
            (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
        if (cross == 0.0) return false;
        const int s = cross > 0.0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return true;
}

Point2 Quad::centroid() const {
    Point2 c;
    for (const Point2& p : corners) { c.x += p.x; c.y += p.y; }
    return {c.x / 4.0, c.y / 4.0};
}

Quad canonical_ccw(const std::array<Point2, 4>& pts) {
    Point2 c{0, 0};
    for (const Point2& p : pts) { c.x += p.x; c.y += p.y; }
    c.x /= 4.0; c.y /= 4.0;

    std::array<int, 4> idx{0, 1, 2, 3};
    // Descending atan2 == counterclockwise when y points down.
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double aa = std::atan2(pts[static_cast<std::size_t>(a)].y - c.y,
                                     pts[static_cast<std::size_t>(a)].x - c.x);
        const double ab = std::atan2(pts[static_cast<std::size_t>(b)].y - c.y,
                                     pts[static_cast<std::size_t>(b)].x - c.x);
        if (aa != ab) return aa > ab;
        return a < b;
    });

    // Rotate the cycle so it starts at the corner nearest the origin.
    int start = 0;
    double best = std::numeric_limits<double>::max();
    for (int k = 0; k < 4; ++k) {
        const Point2& p = pts[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
        const double d2 = p.x * p.x + p.y * p.y;
        if (d2 < best) { best = d2; start = k; }
    }
    Quad q;
    for (int k = 0; k < 4; ++k)
        q[static_cast<std::size_t>(k)] =
            pts[static_cast<std::size_t>(idx[static_cast<std::size_t>((start + k) % 4)])];
    return q;
}

BBox quad_bbox(const Quad& q) {
    double x0 = q[0].x, x1 = q[0].x, y0 = q[0].y, y1 = q[0].y;
    for (const Point2& p : q.corners) {
        x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
    }
    return {x0, y0, x1 - x0, y1 - y0};
}

BBox expand_bbox(const BBox& b, double margin, double bound_w, double bound_h) {
    if (margin < 0.0) throw ValidationError("expand_bbox: margin must be >= 0");
    BBox e{b.x - margin * b.w, b.y - margin * b.h,
           b.w * (1.0 + 2.0 * margin), b.h * (1.0 + 2.0 * margin)};
    if (bound_w > 0.0 && bound_h > 0.0) {
        const double x0 = std::max(0.0, e.x);
        const double y0 = std::max(0.0, e.y);
        const double x1 = std::min(bound_w, e.x2());
        const double y1 = std::min(bound_h, e.y2());
        if (x1 <= x0 || y1 <= y0)
            throw ValidationError("expand_bbox: box empty after clamping");
        e = {x0, y0, x1 - x0, y1 - y0};
    }
    return e;
}

double iou(const BBox& a, const BBox& b) {
    const double ix0 = std::max(a.x, b.x);
    const double iy0 = std::max(a.y, b.y);
    const double ix1 = std::min(a.x2(), b.x2());
    const double iy1 = std::min(a.y2(), b.y2());
    if (ix1 <= ix0 || iy1 <= iy0) return 0.0;
    const double inter = (ix1 - ix0) * (iy1 - iy0);
    return inter / (a.area() + b.area() - inter);
}

namespace {

bool three_collinear(const Quad& q) {
    for (int i = 0; i < 4; ++i) {
        const Point2 a = q[static_cast<std::size_t>(i)];
        const Point2 b = q[static_cast<std::size_t>((i + 1) % 4)];
        const Point2 c = q[static_cast<std::size_t>((i + 2) % 4)];
        const double cross =
            (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        const double scale = std::max({std::abs(b.x - a.x), std::abs(b.y - a.y),
                                       std::abs(c.x - a.x), std::abs(c.y - a.y),
                                       1.0});
        if (std::abs(cross) < 1e-9 * scale * scale) return true;
    }
    return false;
}

struct Normalizer {
    // Similarity transform: centroid to origin, mean distance sqrt(2).
    Homography t;
    static Normalizer build(const Quad& q) {
        Point2 c = q.centroid();
        double mean = 0.0;
        for (const Point2& p : q.corners) mean += distance(p, c);
        mean /= 4.0;
        const double s = mean > 1e-12 ? std::sqrt(2.0) / mean : 1.0;
        Normalizer n;
        n.t.m = {s, 0, -s * c.x, 0, s, -s * c.y, 0, 0, 1};
        return n;
    }
};

}  // namespace

Homography homography_from_quad(const Quad& src, const Quad& dst) {
    if (three_collinear(src) || three_collinear(dst))
        throw GeometryError("homography_from_quad: degenerate quad (collinear corners)");

    const Normalizer ns = Normalizer::build(src);
    const Normalizer nd = Normalizer::build(dst);

    Eigen::Matrix<double, 8, 9> a;
    for (int k = 0; k < 4; ++k) {
        const Point2 s = apply_homography(ns.t, src[static_cast<std::size_t>(k)]);
        const Point2 d = apply_homography(nd.t, dst[static_cast<std::size_t>(k)]);
        a.row(2 * k) << -s.x, -s.y, -1, 0, 0, 0, d.x * s.x, d.x * s.y, d.x;
        a.row(2 * k + 1) << 0, 0, 0, -s.x, -s.y, -1, d.y * s.x, d.y * s.y, d.y;
    }

    Eigen::JacobiSVD<Eigen::Matrix<double, 8, 9>> svd(a, Eigen::ComputeFullV);
    if (svd.singularValues()(6) < 1e-9 * svd.singularValues()(0))
        throw GeometryError("homography_from_quad: rank-deficient system");
    const Eigen::Matrix<double, 9, 1> h = svd.matrixV().col(8);

    Homography hn;
    for (int i = 0; i < 9; ++i) hn.m[static_cast<std::size_t>(i)] = h(i);

    // Denormalize: H = T_dst^-1 * Hn * T_src.
    Homography out = compose(compose(invert(nd.t), hn), ns.t);
    if (std::abs(out.m[8]) > 1e-12) {
        const double inv = 1.0 / out.m[8];
        for (double& v : out.m) v *= inv;
    }

    for (int k = 0; k < 4; ++k) {
        const Point2 p = apply_homography(out, src[static_cast<std::size_t>(k)]);
        if (distance(p, dst[static_cast<std::size_t>(k)]) > 1e-6)
            throw GeometryError("homography_from_quad: reprojection residual above 1e-6 px");
    }
    return out;
}

Point2 apply_homography(const Homography& h, Point2 p) {
    const double w = h.m[6] * p.x + h.m[7] * p.y + h.m[8];
    if (std::abs(w) < 1e-12)
        throw GeometryError("apply_homography: point maps to infinity");
    return {(h.m[0] * p.x + h.m[1] * p.y + h.m[2]) / w,
            (h.m[3] * p.x + h.m[4] * p.y + h.m[5]) / w};
}

Homography invert(const Homography& h) {
    const std::array<double, 9>& m = h.m;
    std::array<double, 9> adj{
        m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8], m[1] * m[5] - m[2] * m[4],
        m[5] * m[6] - m[3] * m[8], m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
        m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7], m[0] * m[4] - m[1] * m[3]};
    const double det = m[0] * adj[0] + m[1] * adj[3] + m[2] * adj[6];
    if (std::abs(det) < 1e-15)
        throw GeometryError("invert: singular homography");
    Homography out;
    for (int i = 0; i < 9; ++i)
        out.m[static_cast<std::size_t>(i)] = adj[static_cast<std::size_t>(i)] / det;
    if (std::abs(out.m[8]) > 1e-12) {
        const double inv = 1.0 / out.m[8];
        for (double& v : out.m) v *= inv;
    }
    return out;
}

Homography compose(const Homography& a, const Homography& b) {
    Homography out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k)
                s += a.m[static_cast<std::size_t>(3 * r + k)] *
                     b.m[static_cast<std::size_t>(3 * k + c)];
            out.m[static_cast<std::size_t>(3 * r + c)] = s;
        }
    return out;
}

Quad rect_quad(const BBox& b) {
    return Quad{{Point2{b.x, b.y}, Point2{b.x, b.y2()},
                 Point2{b.x2(), b.y2()}, Point2{b.x2(), b.y}}};
}

}  // namespace markerlab
