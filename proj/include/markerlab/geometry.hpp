#pragma once

#include <array>
#include <cstddef>

namespace markerlab {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }
double distance(Point2 a, Point2 b);

/// Four sub-pixel corners in counterclockwise order.
///
/// Orientation is measured in screen coordinates (x right, y down):
/// signed_area() is positive for counterclockwise quads under that
/// convention. Corner 0 is not semantically special; rotation-invariant
/// consumers (the decoder) try all four cyclic starts.
struct Quad {
    std::array<Point2, 4> corners{};

    Point2& operator[](std::size_t i) { return corners[i]; }
    const Point2& operator[](std::size_t i) const { return corners[i]; }

    /// Positive for CCW order on screen (y down), negative for CW.
    double signed_area() const;
    bool is_ccw() const { return signed_area() > 0.0; }
    bool is_convex() const;
    Point2 centroid() const;
};

/// Reorders four points counterclockwise (screen coords), starting from the
/// corner nearest the top-left origin. Used to canonicalize corner labels.
Quad canonical_ccw(const std::array<Point2, 4>& pts);

/// Axis-aligned box, top-left anchored, real-valued extents.
struct BBox {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;

    double area() const { return w * h; }
    double x2() const { return x + w; }
    double y2() const { return y + h; }
};

BBox quad_bbox(const Quad& q);

/// Grows the box by `margin` of its own width/height on every side, then
/// clamps against [0,bound_w) x [0,bound_h). Pass bound <= 0 to skip the
/// clamp. Throws ValidationError when the clamped box is empty.
BBox expand_bbox(const BBox& b, double margin, double bound_w = -1.0,
                 double bound_h = -1.0);

/// Intersection-over-union; 0 for disjoint boxes.
double iou(const BBox& a, const BBox& b);

/// 3x3 projective transform, row-major, normalized so m[8] == 1 whenever
/// the bottom-right element is nonzero.
struct Homography {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return {}; }
    static Homography translation(double tx, double ty) {
        return {{1, 0, tx, 0, 1, ty, 0, 0, 1}};
    }
};

/// Direct linear transform from four point correspondences, with
/// Hartley-style coordinate normalization for conditioning.
/// Throws GeometryError for degenerate (rank-deficient) configurations.
Homography homography_from_quad(const Quad& src, const Quad& dst);

/// Throws GeometryError when the point maps to infinity (|w'| < 1e-12).
Point2 apply_homography(const Homography& h, Point2 p);

Homography invert(const Homography& h);
Homography compose(const Homography& a, const Homography& b);  // a after b

/// Quad spanning a box: (x,y),(x,y+h),(x+w,y+h),(x+w,y) - CCW on screen.
Quad rect_quad(const BBox& b);

}  // namespace markerlab
