#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "markerlab/geometry.hpp"

namespace markerlab {

struct PRPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

/// Precision-recall sweep; recalls are non-decreasing along the points.
struct PRCurve {
    std::vector<PRPoint> points;
    double auc = 0.0;
};

struct GtMarker {
    BBox bbox;
    Quad corners;
    bool fake = false;
    std::optional<int> id;
};

struct EvalDetection {
    BBox bbox;
    std::vector<Point2> corners;
    double score = 0.0;
    std::optional<int> id;
    std::optional<int> hamming;
};

/// One image's detections plus its ground truth.
struct ImageEvalRecord {
    std::vector<EvalDetection> detections;
    std::vector<GtMarker> ground_truth;
};

struct Matching {
    std::vector<int> det_to_gt;  // -1 = unmatched (false positive)
    int tp = 0;
    int fp = 0;
    int real_gt = 0;  // non-fake ground-truth count
};

/// Greedy: detections in score-descending order (ties by input order) claim
/// the unclaimed non-fake GT with the highest IoU >= iou_thr. Fakes are
/// never matchable, so hits on them count as false positives.
Matching match_detections(const std::vector<EvalDetection>& dets,
                          const std::vector<GtMarker>& gts,
                          double iou_thr = 0.5);

/// Threshold sweep over every distinct detection score, matching recomputed
/// per threshold. AUC integrates precision over recall by trapezoids, with
/// an initial rectangle up to the first point. Throws ValidationError when
/// there is no real ground truth. No detections: empty curve, AUC 0.
PRCurve pr_curve(const std::vector<ImageEvalRecord>& images,
                 double iou_thr = 0.5);

/// Distance from each predicted corner to its nearest GT corner (GT corners
/// may be reused).
std::vector<double> corner_error(const std::vector<Point2>& predicted,
                                 const Quad& gt);

/// Per-GT-marker evaluation record.
struct MarkerRecord {
    bool matched = false;
    std::vector<double> corner_distances;  // one per predicted corner
    std::optional<int> predicted_id;
    int gt_id = -1;
};

struct MarkerStats {
    double matched_bb = 0.0;        // % matched with 4 predicted corners
    double corners_filtered = 0.0;  // % with all 4 corners within filter_px
    double corners_plus_id = 0.0;   // subset of the above with correct id
    double only_id = 0.0;           // % correct id but < 4 surviving corners
    double corner_error_mean = 0.0; // over surviving corners only
    double corner_error_std = 0.0;
};

/// Percentages are over all records (= all ground-truth markers). A corner
/// survives when its distance is <= filter_px.
MarkerStats marker_stats(const std::vector<MarkerRecord>& records,
                         double filter_px = 5.0);

struct DecoderOutcome {
    int min_hamming = 0;
    bool id_correct = false;
};

/// Decoder PR over Hamming thresholds 0..9: recall(t) = |{d <= t}| /
/// gt_count, precision(t) = |{d <= t and correct}| / |{d <= t}|. Thresholds
/// with an empty denominator are skipped.
PRCurve decoder_pr(const std::vector<DecoderOutcome>& outcomes, int gt_count);

// --- serialization / reporting ---

struct DetectionRecord {
    std::string image;
    std::vector<EvalDetection> detections;
};

std::vector<DetectionRecord> read_detections(const std::string& path);
void write_detections(const std::vector<DetectionRecord>& records,
                      const std::string& path);

/// CSV rows: threshold,precision,recall
void write_pr_csv(const PRCurve& curve, const std::string& path);
PRCurve read_pr_csv(const std::string& path);

/// Self-contained SVG line chart of one or more PR curves.
std::string render_pr_svg(
    const std::vector<std::pair<std::string, PRCurve>>& curves,
    const std::string& title);

}  // namespace markerlab
