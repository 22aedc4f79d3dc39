#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "markerlab/error.hpp"
#include "markerlab/geometry.hpp"
#include "markerlab/rng.hpp"

using namespace markerlab;

namespace {

Quad random_quad(Rng& rng, double lo, double hi) {
    // Perturbed convex quad inside [lo,hi]^2, CCW on screen.
    const double cx = rng.uniform(lo + 20, hi - 20);
    const double cy = rng.uniform(lo + 20, hi - 20);
    const double r = rng.uniform(8.0, 18.0);
    Quad q;
    const double base[4] = {225.0, 135.0, 45.0, 315.0};  // TL BL BR TR, y down
    for (int k = 0; k < 4; ++k) {
        const double a = (base[k] + rng.uniform(-20.0, 20.0)) * 3.14159265358979 / 180.0;
        const double rr = r * rng.uniform(0.8, 1.25);
        q[static_cast<std::size_t>(k)] = {cx + rr * std::cos(a), cy - rr * std::sin(a)};
    }
    return q;
}

}  // namespace

TEST_CASE("quad orientation convention") {
    // TL BL BR TR is counterclockwise on screen (y down) -> positive area.
    const Quad ccw{{Point2{0, 0}, Point2{0, 1}, Point2{1, 1}, Point2{1, 0}}};
    CHECK(ccw.signed_area() == doctest::Approx(1.0));
    CHECK(ccw.is_ccw());
    CHECK(ccw.is_convex());
    const Quad cw{{Point2{0, 0}, Point2{1, 0}, Point2{1, 1}, Point2{0, 1}}};
    CHECK(cw.signed_area() == doctest::Approx(-1.0));
    CHECK_FALSE(cw.is_ccw());
}

TEST_CASE("canonical_ccw starts nearest the origin and is CCW") {
    const std::array<Point2, 4> pts{Point2{50, 50}, Point2{10, 10}, Point2{50, 10},
                                    Point2{10, 50}};
    const Quad q = canonical_ccw(pts);
    CHECK(q[0].x == doctest::Approx(10));
    CHECK(q[0].y == doctest::Approx(10));
    CHECK(q[1].x == doctest::Approx(10));
    CHECK(q[1].y == doctest::Approx(50));
    CHECK(q[2].x == doctest::Approx(50));
    CHECK(q[2].y == doctest::Approx(50));
    CHECK(q[3].x == doctest::Approx(50));
    CHECK(q[3].y == doctest::Approx(10));
    CHECK(q.is_ccw());
}

TEST_CASE("quad_bbox basics and oracle") {
    const Quad sq{{Point2{0, 0}, Point2{0, 10}, Point2{10, 10}, Point2{10, 0}}};
    const BBox b = quad_bbox(sq);
    CHECK(b.x == 0);
    CHECK(b.y == 0);
    CHECK(b.w == 10);
    CHECK(b.h == 10);

    // 45-degree rotated unit square centered at origin: bbox side sqrt(2).
    const double h = std::sqrt(2.0) / 2.0;
    const Quad rot{{Point2{-h, 0}, Point2{0, h}, Point2{h, 0}, Point2{0, -h}}};
    const BBox rb = quad_bbox(rot);
    CHECK(rb.w == doctest::Approx(std::sqrt(2.0)));
    CHECK(rb.h == doctest::Approx(std::sqrt(2.0)));

    Rng rng(3);
    for (int t = 0; t < 200; ++t) {
        const Quad q = random_quad(rng, 0, 200);
        const BBox bb = quad_bbox(q);
        double x0 = 1e9, x1 = -1e9, y0 = 1e9, y1 = -1e9;
        for (const Point2& p : q.corners) {
            x0 = std::min(x0, p.x); x1 = std::max(x1, p.x);
            y0 = std::min(y0, p.y); y1 = std::max(y1, p.y);
        }
        CHECK(bb.x == x0);
        CHECK(bb.y == y0);
        CHECK(bb.w == x1 - x0);
        CHECK(bb.h == y1 - y0);
        // Containment invariant.
        for (const Point2& p : q.corners) {
            CHECK(p.x >= bb.x);
            CHECK(p.x <= bb.x2());
            CHECK(p.y >= bb.y);
            CHECK(p.y <= bb.y2());
        }
    }
}

TEST_CASE("expand_bbox arithmetic, clamping, identity") {
    const BBox b{10, 20, 100, 50};
    const BBox e = expand_bbox(b, 0.2);
    CHECK(e.x == doctest::Approx(-10));
    CHECK(e.y == doctest::Approx(10));
    CHECK(e.w == doctest::Approx(140));
    CHECK(e.h == doctest::Approx(70));

    const BBox c = expand_bbox(b, 0.2, 640, 360);
    CHECK(c.x == doctest::Approx(0));
    CHECK(c.y == doctest::Approx(10));
    CHECK(c.w == doctest::Approx(130));
    CHECK(c.h == doctest::Approx(70));

    const BBox same = expand_bbox(b, 0.0);
    CHECK(same.x == b.x);
    CHECK(same.w == b.w);

    CHECK_THROWS_AS(expand_bbox({-500, -500, 10, 10}, 0.0, 100, 100), ValidationError);
}

TEST_CASE("iou basics") {
    const BBox a{0, 0, 2, 2};
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou(a, {10, 10, 2, 2}) == 0.0);
    CHECK(iou(a, {1, 0, 2, 2}) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("iou symmetry and scale invariance") {
    Rng rng(5);
    for (int t = 0; t < 500; ++t) {
        const BBox a{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 30),
                     rng.uniform(1, 30)};
        const BBox b{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(1, 30),
                     rng.uniform(1, 30)};
        CHECK(iou(a, b) == doctest::Approx(iou(b, a)).epsilon(1e-12));
        const double s = rng.uniform(0.1, 8.0);
        const BBox as{a.x * s, a.y * s, a.w * s, a.h * s};
        const BBox bs{b.x * s, b.y * s, b.w * s, b.h * s};
        CHECK(iou(as, bs) == doctest::Approx(iou(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("homography: identity and translation special cases") {
    const Quad unit = rect_quad({0, 0, 1, 1});
    const Homography ident = homography_from_quad(unit, unit);
    for (double x : {0.0, 0.3, 1.0})
        for (double y : {0.0, 0.7, 1.0}) {
            const Point2 p = apply_homography(ident, {x, y});
            CHECK(p.x == doctest::Approx(x).epsilon(1e-9));
            CHECK(p.y == doctest::Approx(y).epsilon(1e-9));
        }

    Quad shifted = unit;
    for (Point2& p : shifted.corners) { p.x += 5; p.y += 3; }
    const Homography t = homography_from_quad(unit, shifted);
    const Point2 p = apply_homography(t, {0.25, 0.5});
    CHECK(p.x == doctest::Approx(5.25).epsilon(1e-9));
    CHECK(p.y == doctest::Approx(3.5).epsilon(1e-9));
}

TEST_CASE("apply_homography examples") {
    const Homography ident = Homography::identity();
    const Point2 p = apply_homography(ident, {3, 4});
    CHECK(p.x == 3);
    CHECK(p.y == 4);

    const Point2 q = apply_homography(Homography::translation(1, 2), {0, 0});
    CHECK(q.x == 1);
    CHECK(q.y == 2);

    Homography scale;
    scale.m = {2, 0, 0, 0, 2, 0, 0, 0, 1};
    const Point2 r = apply_homography(scale, {1, 1});
    CHECK(r.x == 2);
    CHECK(r.y == 2);

    Homography inf;
    inf.m = {1, 0, 0, 0, 1, 0, 1, 0, 0};  // w' = x
    CHECK_THROWS_AS(apply_homography(inf, {0, 1}), GeometryError);
}

TEST_CASE("homography: perspective reprojection residual") {
    const Quad src{{Point2{0, 0}, Point2{0, 100}, Point2{100, 100}, Point2{100, 0}}};
    const Quad dst{{Point2{12, 7}, Point2{3, 96}, Point2{118, 110}, Point2{92, -4}}};
    const Homography h = homography_from_quad(src, dst);
    for (int k = 0; k < 4; ++k) {
        const Point2 p = apply_homography(h, src[static_cast<std::size_t>(k)]);
        CHECK(distance(p, dst[static_cast<std::size_t>(k)]) < 1e-6);
    }
}

TEST_CASE("homography: degenerate quad rejected") {
    const Quad collinear{{Point2{0, 0}, Point2{1, 1}, Point2{2, 2}, Point2{5, 0}}};
    const Quad ok = rect_quad({0, 0, 1, 1});
    CHECK_THROWS_AS(homography_from_quad(collinear, ok), GeometryError);
    CHECK_THROWS_AS(homography_from_quad(ok, collinear), GeometryError);
}

TEST_CASE("homography round trip property") {
    Rng rng(17);
    for (int t = 0; t < 500; ++t) {
        const Quad a = random_quad(rng, 0, 300);
        const Quad b = random_quad(rng, 0, 300);
        if (!a.is_convex() || !b.is_convex()) continue;
        const Homography ab = homography_from_quad(a, b);
        const Homography ba = homography_from_quad(b, a);
        for (int k = 0; k < 4; ++k) {
            const Point2 p = apply_homography(
                ba, apply_homography(ab, a[static_cast<std::size_t>(k)]));
            CHECK(distance(p, a[static_cast<std::size_t>(k)]) < 1e-6);
        }
    }
}

TEST_CASE("invert is a true inverse") {
    Rng rng(19);
    for (int t = 0; t < 100; ++t) {
        const Quad a = random_quad(rng, 0, 300);
        const Quad b = random_quad(rng, 0, 300);
        if (!a.is_convex() || !b.is_convex()) continue;
        const Homography h = homography_from_quad(a, b);
        const Homography hi = invert(h);
        for (int k = 0; k < 4; ++k) {
            const Point2 p = apply_homography(
                hi, b[static_cast<std::size_t>(k)]);
            CHECK(distance(p, a[static_cast<std::size_t>(k)]) < 1e-6);
        }
    }
}
