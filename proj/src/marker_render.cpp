#include "markerlab/marker_render.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "markerlab/augment.hpp"

namespace markerlab {

const char* fake_kind_name(FakeKind k) {
    switch (k) {
        case FakeKind::none: return "none";
        case FakeKind::full_black: return "full_black";
        case FakeKind::inverted: return "inverted";
        case FakeKind::colored: return "colored";
        case FakeKind::noise_pattern: return "noise_pattern";
    }
    return "none";
}

FakeKind fake_kind_from_name(const std::string& name) {
    if (name == "full_black") return FakeKind::full_black;
    if (name == "inverted") return FakeKind::inverted;
    if (name == "colored") return FakeKind::colored;
    if (name == "noise_pattern") return FakeKind::noise_pattern;
    if (name == "none") return FakeKind::none;
    throw ParseError("unknown fake kind: " + name);
}

namespace {

void fill_cell(Image& img, int cell_px, int cell_x, int cell_y,
               std::array<std::uint8_t, 3> rgb) {
    for (int y = cell_y * cell_px; y < (cell_y + 1) * cell_px; ++y)
        for (int x = cell_x * cell_px; x < (cell_x + 1) * cell_px; ++x) {
            std::uint8_t* p = img.px(x, y);
            p[0] = rgb[0]; p[1] = rgb[1]; p[2] = rgb[2];
        }
}

Image render_cells(BitGrid code, int cell_px, std::array<std::uint8_t, 3> black,
                   std::array<std::uint8_t, 3> white) {
    const int n = MarkerFace::kCells;
    Image img(n * cell_px, n * cell_px, white);  // quiet ring
    for (int cy = 1; cy < n - 1; ++cy)
        for (int cx = 1; cx < n - 1; ++cx) {
            const bool payload = cy >= 2 && cy <= 7 && cx >= 2 && cx <= 7;
            const bool on = payload && code.get(cy - 2, cx - 2) == 1;
            fill_cell(img, cell_px, cx, cy, on ? white : black);
        }
    return img;
}

std::array<std::uint8_t, 3> random_saturated_rgb(Rng& rng) {
    // Random hue at full saturation, value in [0.7, 1].
    const double h = rng.uniform(0.0, 6.0);
    const double v = rng.uniform(0.7, 1.0);
    const int i = static_cast<int>(h) % 6;
    const double f = h - std::floor(h);
    const double q = v * (1.0 - f);
    const double t = v * f;
    double r = 0, g = 0, b = 0;
    switch (i) {
        case 0: r = v; g = t; b = 0; break;
        case 1: r = q; g = v; b = 0; break;
        case 2: r = 0; g = v; b = t; break;
        case 3: r = 0; g = q; b = v; break;
        case 4: r = t; g = 0; b = v; break;
        case 5: r = v; g = 0; b = q; break;
    }
    return {static_cast<std::uint8_t>(std::lround(r * 255)),
            static_cast<std::uint8_t>(std::lround(g * 255)),
            static_cast<std::uint8_t>(std::lround(b * 255))};
}

BitGrid random_code(Rng& rng) {
    return BitGrid{rng.next_u64() & ((1ull << BitGrid::kBits) - 1)};
}

}  // namespace

MarkerFace render_marker(BitGrid code, int cell_px) {
    if (cell_px < 1) throw ValidationError("render_marker: cell_px must be >= 1");
    MarkerFace face;
    face.image = render_cells(code, cell_px, {0, 0, 0}, {255, 255, 255});
    face.payload = code;
    face.cell_px = cell_px;
    return face;
}

MarkerFace make_fake_marker(FakeKind kind, int cell_px, Rng& rng) {
    if (kind == FakeKind::none)
        throw ValidationError("make_fake_marker: kind must not be none");
    if (cell_px < 1) throw ValidationError("make_fake_marker: cell_px must be >= 1");
    MarkerFace face;
    face.fake_kind = kind;
    face.cell_px = cell_px;
    switch (kind) {
        case FakeKind::full_black:
            face.image = render_cells(BitGrid{0}, cell_px, {0, 0, 0}, {255, 255, 255});
            break;
        case FakeKind::inverted: {
            face.image = render_cells(random_code(rng), cell_px, {0, 0, 0}, {255, 255, 255});
            for (std::uint8_t& v : face.image.pixels) v = static_cast<std::uint8_t>(255 - v);
            break;
        }
        case FakeKind::colored: {
            const std::array<std::uint8_t, 3> a = random_saturated_rgb(rng);
            const std::array<std::uint8_t, 3> b = random_saturated_rgb(rng);
            face.image = render_cells(random_code(rng), cell_px, a, b);
            break;
        }
        case FakeKind::noise_pattern: {
            face.image = render_cells(BitGrid{0}, cell_px, {0, 0, 0}, {255, 255, 255});
            // Payload area: thresholded Perlin with random line strokes on top.
            const int p0 = 2 * cell_px, p1 = 8 * cell_px;
            const int side = p1 - p0;
            const GrayImage noise =
                perlin_field(side, side, std::max(2, side / 3), rng.next_u64());
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x) {
                    const std::uint8_t v = noise.at(x, y) > 0.5f ? 255 : 0;
                    std::uint8_t* p = face.image.px(p0 + x, p0 + y);
                    p[0] = p[1] = p[2] = v;
                }
            const int strokes = rng.uniform_int(2, 5);
            for (int s = 0; s < strokes; ++s) {
                const Point2 a{rng.uniform(0.0, side), rng.uniform(0.0, side)};
                const Point2 b{rng.uniform(0.0, side), rng.uniform(0.0, side)};
                const std::uint8_t v = rng.bernoulli(0.5) ? 255 : 0;
                const double thick = rng.uniform(1.0, 2.5);
                const int steps = static_cast<int>(distance(a, b)) + 1;
                for (int t = 0; t <= steps; ++t) {
                    const double u = steps > 0 ? static_cast<double>(t) / steps : 0.0;
                    const int cx = static_cast<int>(a.x + (b.x - a.x) * u);
                    const int cy = static_cast<int>(a.y + (b.y - a.y) * u);
                    const int r = static_cast<int>(thick);
                    for (int dy = -r; dy <= r; ++dy)
                        for (int dx = -r; dx <= r; ++dx) {
                            const int x = cx + dx, y = cy + dy;
                            if (x < 0 || y < 0 || x >= side || y >= side) continue;
                            std::uint8_t* p = face.image.px(p0 + x, p0 + y);
                            p[0] = p[1] = p[2] = v;
                        }
                }
            }
            break;
        }
        case FakeKind::none: break;
    }
    return face;
}

namespace {

struct Mat3 {
    std::array<double, 9> m;
    std::array<double, 3> apply(const std::array<double, 3>& v) const {
        return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2],
                m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
                m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
    }
    Mat3 mul(const Mat3& o) const {
        Mat3 r{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k)
                    s += m[static_cast<std::size_t>(3 * i + k)] *
                         o.m[static_cast<std::size_t>(3 * k + j)];
                r.m[static_cast<std::size_t>(3 * i + j)] = s;
            }
        return r;
    }
};

Mat3 rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{1, 0, 0, 0, c, -s, 0, s, c}};
}
Mat3 rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{c, 0, s, 0, 1, 0, -s, 0, c}};
}
Mat3 rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{c, -s, 0, s, c, 0, 0, 0, 1}};
}

Mat3 rot_axis(double ax, double ay, double az, double angle) {
    // Rodrigues rotation about a unit axis.
    const double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    return {{t * ax * ax + c,      t * ax * ay - s * az, t * ax * az + s * ay,
             t * ax * ay + s * az, t * ay * ay + c,      t * ay * az - s * ax,
             t * ax * az - s * ay, t * ay * az + s * ax, t * az * az + c}};
}

Mat3 pose_rotation(const PoseSample& p) {
    return rot_z(p.roll).mul(rot_y(p.yaw)).mul(rot_x(p.pitch));
}

// Local marker plane: annotated square side 1, y down to match screen.
constexpr std::array<std::array<double, 2>, 4> kAnnotLocal{
    {{-0.5, -0.5}, {-0.5, 0.5}, {0.5, 0.5}, {0.5, -0.5}}};  // TL BL BR TR

Point2 project_point(const Mat3& rot, const PoseSample& pose, double lx, double ly) {
    const double depth = pose.focal / pose.scale;
    const std::array<double, 3> p = rot.apply({lx, ly, 0.0});
    const double pz = p[2] + depth;
    if (pz < 1e-9)
        throw GeometryError("project_marker: marker behind the camera");
    return {pose.center.x + pose.focal * p[0] / pz,
            pose.center.y + pose.focal * p[1] / pz};
}

Quad project_square(const Mat3& rot, const PoseSample& pose, double half_side) {
    Quad q;
    for (int k = 0; k < 4; ++k)
        q[static_cast<std::size_t>(k)] =
            project_point(rot, pose, kAnnotLocal[static_cast<std::size_t>(k)][0] * 2 * half_side,
                          kAnnotLocal[static_cast<std::size_t>(k)][1] * 2 * half_side);
    return q;
}

bool point_in_convex_ccw(const Quad& q, double px, double py) {
    // CCW on screen (y down): interior points lie right of each edge,
    // i.e. cross <= 0 under the standard formula.
    for (int i = 0; i < 4; ++i) {
        const Point2 a = q[static_cast<std::size_t>(i)];
        const Point2 b = q[static_cast<std::size_t>((i + 1) % 4)];
        const double cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
        if (cross > 0.0) return false;
    }
    return true;
}

}  // namespace

Quad project_corners(const PoseSample& pose) {
    return project_square(pose_rotation(pose), pose, 0.5);
}

ProjectedMarker project_marker(const MarkerFace& face, const PoseSample& pose,
                               int frame_w, int frame_h) {
    const Mat3 rot = pose_rotation(pose);
    const double face_half = 0.5 * MarkerFace::kCells / MarkerFace::kAnnotCells;

    ProjectedMarker out;
    out.corners = project_square(rot, pose, 0.5);
    out.face_quad = project_square(rot, pose, face_half);
    if (!out.corners.is_ccw() || !out.corners.is_convex())
        throw GeometryError("project_marker: degenerate projection");

    const BBox fb = quad_bbox(out.face_quad);
    if (fb.x < 0.0 || fb.y < 0.0 || fb.x2() > frame_w || fb.y2() > frame_h)
        throw PlacementError("project_marker: face leaves the frame");

    out.x0 = static_cast<int>(std::floor(fb.x));
    out.y0 = static_cast<int>(std::floor(fb.y));
    const int pw = static_cast<int>(std::ceil(fb.x2())) - out.x0;
    const int ph = static_cast<int>(std::ceil(fb.y2())) - out.y0;
    out.patch = Image(pw, ph);
    out.alpha = GrayImage(pw, ph, 0.0f);

    // Face raster -> frame homography, inverted for backward sampling.
    const double fs = face.side();
    const Quad face_rect = rect_quad({0, 0, fs, fs});
    const Homography frame_to_face =
        invert(homography_from_quad(face_rect, out.face_quad));

    // 3x3 subsample coverage; color from the pixel-center back-projection.
    for (int y = 0; y < ph; ++y) {
        for (int x = 0; x < pw; ++x) {
            const double fx = out.x0 + x + 0.5;
            const double fy = out.y0 + y + 0.5;
            int hits = 0;
            for (int sy = 0; sy < 3; ++sy)
                for (int sx = 0; sx < 3; ++sx) {
                    const double qx = out.x0 + x + (sx + 0.5) / 3.0;
                    const double qy = out.y0 + y + (sy + 0.5) / 3.0;
                    if (point_in_convex_ccw(out.face_quad, qx, qy)) ++hits;
                }
            if (hits == 0) continue;
            out.alpha.at(x, y) = static_cast<float>(hits) / 9.0f;
            const Point2 s = apply_homography(frame_to_face, {fx, fy});
            const std::array<double, 3> c = sample_bilinear(face.image, s.x, s.y);
            std::uint8_t* p = out.patch.px(x, y);
            for (int k = 0; k < 3; ++k)
                p[k] = static_cast<std::uint8_t>(std::clamp(
                    static_cast<int>(std::lround(c[static_cast<std::size_t>(k)])), 0, 255));
        }
    }
    return out;
}

PoseSample sample_pose(Rng& rng, int frame_w, int frame_h, const PoseRanges& ranges) {
    constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
    for (int attempt = 0; attempt < ranges.max_retries; ++attempt) {
        const double view = rng.uniform(ranges.min_view_deg, ranges.max_view_deg) * kDegToRad;
        const double azimuth = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        const double spin = rng.uniform(0.0, 2.0 * 3.14159265358979323846);

        // Tilt the marker plane about an in-plane axis, after an in-plane spin.
        const Mat3 r = rot_axis(std::cos(azimuth), std::sin(azimuth), 0.0, view)
                           .mul(rot_z(spin));

        PoseSample pose;
        pose.yaw = std::asin(std::clamp(-r.m[6], -1.0, 1.0));
        pose.pitch = std::atan2(r.m[7], r.m[8]);
        pose.roll = std::atan2(r.m[3], r.m[0]);
        pose.scale = rng.uniform(ranges.min_side_px, ranges.max_side_px);
        pose.focal = rng.uniform(ranges.min_focal_px, ranges.max_focal_px);
        pose.center = {0, 0};

        const double face_half = 0.5 * MarkerFace::kCells / MarkerFace::kAnnotCells;
        Quad fq;
        try {
            fq = project_square(pose_rotation(pose), pose, face_half);
        } catch (const GeometryError&) {
            continue;
        }
        const BBox fb = quad_bbox(fq);
        const double cx_lo = -fb.x, cx_hi = frame_w - fb.x2();
        const double cy_lo = -fb.y, cy_hi = frame_h - fb.y2();
        if (cx_hi < cx_lo || cy_hi < cy_lo) continue;  // too large for the frame
        pose.center = {rng.uniform(cx_lo, cx_hi), rng.uniform(cy_lo, cy_hi)};

        const Quad annot = project_corners(pose);
        if (!annot.is_ccw() || !annot.is_convex()) continue;
        return pose;
    }
    throw PlacementError("sample_pose: no in-frame pose after " +
                         std::to_string(ranges.max_retries) + " attempts");
}

}  // namespace markerlab
