#pragma once

#include <optional>
#include <string>

#include "markerlab/dictionary.hpp"
#include "markerlab/error.hpp"
#include "markerlab/geometry.hpp"
#include "markerlab/imaging.hpp"
#include "markerlab/rng.hpp"

namespace markerlab {

/// Could not place a marker within the retry budget.
struct PlacementError : Error {
    using Error::Error;
};

enum class FakeKind { none, full_black, inverted, colored, noise_pattern };

const char* fake_kind_name(FakeKind k);
FakeKind fake_kind_from_name(const std::string& name);

/// A rendered marker face: 10x10 cells - outermost ring white (quiet zone),
/// next ring black, inner 6x6 payload. The annotated corner square is the
/// black-ring outer boundary, i.e. the 8x8-cell block the payload sits in.
struct MarkerFace {
    Image image;                    // square, side = 10 * cell_px
    std::optional<BitGrid> payload; // absent for fakes
    FakeKind fake_kind = FakeKind::none;
    int cell_px = 0;

    static constexpr int kCells = 10;       // full face, per side
    static constexpr int kAnnotCells = 8;   // black ring + payload
    int side() const { return kCells * cell_px; }
};

MarkerFace render_marker(BitGrid code, int cell_px);

/// Negative training exemplars (fakes). All kinds keep the 10x10 cell
/// geometry; `payload` stays absent.
MarkerFace make_fake_marker(FakeKind kind, int cell_px, Rng& rng);

/// Camera-relative pose. The rotation is R = Rz(roll) * Ry(yaw) * Rx(pitch)
/// in a camera frame with x right, y down, z forward; `scale` is the
/// on-image side of the annotated square at fronto-parallel distance.
struct PoseSample {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
    double scale = 100.0;
    double focal = 800.0;
    Point2 center{0, 0};
};

struct PoseRanges {
    double min_view_deg = 0.0;
    double max_view_deg = 65.0;
    double min_side_px = 24.0;
    double max_side_px = 120.0;
    double min_focal_px = 400.0;
    double max_focal_px = 1200.0;
    int max_retries = 100;
};

/// Marker warped into frame coordinates. `patch`/`alpha` cover only the
/// pixel bbox of the projected face; (x0,y0) anchors them in the frame.
/// `alpha` is the per-pixel coverage of the face quad in [0,1].
struct ProjectedMarker {
    Image patch;
    GrayImage alpha;
    int x0 = 0;
    int y0 = 0;
    Quad corners;    // annotated square (black-ring outer boundary), CCW
    Quad face_quad;  // full face incl. quiet ring, CCW
};

/// Projects the face with a pinhole model. Throws PlacementError when the
/// face leaves the frame and GeometryError when the projection degenerates
/// (quad flips orientation or loses convexity).
ProjectedMarker project_marker(const MarkerFace& face, const PoseSample& pose,
                               int frame_w, int frame_h);

/// Corners of the annotated square under `pose` without rasterizing.
Quad project_corners(const PoseSample& pose);

/// Rejection-samples poses until the projected face lies fully inside the
/// frame and the annotated quad is convex and CCW. The view angle (marker
/// normal vs. optical axis) is uniform in [min_view, max_view].
PoseSample sample_pose(Rng& rng, int frame_w, int frame_h,
                       const PoseRanges& ranges = {});

}  // namespace markerlab
