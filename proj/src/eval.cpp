#include "markerlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "markerlab/error.hpp"

namespace markerlab {

using nlohmann::json;

Matching match_detections(const std::vector<EvalDetection>& dets,
                          const std::vector<GtMarker>& gts, double iou_thr) {
    Matching m;
    m.det_to_gt.assign(dets.size(), -1);
    for (const GtMarker& g : gts)
        if (!g.fake) ++m.real_gt;

    std::vector<std::size_t> order(dets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].score > dets[b].score;
    });

    std::vector<char> claimed(gts.size(), 0);
    for (std::size_t di : order) {
        int best_gt = -1;
        double best_v = -1.0;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            if (claimed[gi] || gts[gi].fake) continue;
            const double v = iou(dets[di].bbox, gts[gi].bbox);
            if (v < iou_thr) continue;
            if (v > best_v) {  // ties keep the first (lowest gt index)
                best_v = v;
                best_gt = static_cast<int>(gi);
            }
        }
        if (best_gt >= 0) {
            claimed[static_cast<std::size_t>(best_gt)] = 1;
            m.det_to_gt[di] = best_gt;
            ++m.tp;
        } else {
            ++m.fp;
        }
    }
    return m;
}

namespace {

double curve_auc(const std::vector<PRPoint>& pts) {
    if (pts.empty()) return 0.0;
    double auc = pts.front().recall * pts.front().precision;  // initial rectangle
    for (std::size_t i = 1; i < pts.size(); ++i)
        auc += (pts[i].recall - pts[i - 1].recall) *
               0.5 * (pts[i].precision + pts[i - 1].precision);
    return auc;
}

}  // namespace

PRCurve pr_curve(const std::vector<ImageEvalRecord>& images, double iou_thr) {
    int total_gt = 0;
    std::set<double, std::greater<double>> thresholds;
    for (const ImageEvalRecord& rec : images) {
        for (const GtMarker& g : rec.ground_truth)
            if (!g.fake) ++total_gt;
        for (const EvalDetection& d : rec.detections) thresholds.insert(d.score);
    }
    if (total_gt == 0)
        throw ValidationError("pr_curve: no real ground-truth markers (recall undefined)");

    PRCurve curve;
    for (double t : thresholds) {  // descending scores
        int tp = 0, fp = 0;
        for (const ImageEvalRecord& rec : images) {
            std::vector<EvalDetection> kept;
            for (const EvalDetection& d : rec.detections)
                if (d.score >= t) kept.push_back(d);
            const Matching m = match_detections(kept, rec.ground_truth, iou_thr);
            tp += m.tp;
            fp += m.fp;
        }
        if (tp + fp == 0) continue;
        curve.points.push_back({t, static_cast<double>(tp) / (tp + fp),
                                static_cast<double>(tp) / total_gt});
    }
    curve.auc = curve_auc(curve.points);
    return curve;
}

std::vector<double> corner_error(const std::vector<Point2>& predicted,
                                 const Quad& gt) {
    std::vector<double> out;
    out.reserve(predicted.size());
    for (const Point2& p : predicted) {
        double best = distance(p, gt[0]);
        for (std::size_t k = 1; k < 4; ++k)
            best = std::min(best, distance(p, gt[k]));
        out.push_back(best);
    }
    return out;
}

MarkerStats marker_stats(const std::vector<MarkerRecord>& records,
                         double filter_px) {
    MarkerStats s;
    if (records.empty()) return s;
    const double n = static_cast<double>(records.size());
    int matched_bb = 0, filtered = 0, filtered_id = 0, only_id = 0;
    double err_sum = 0.0, err_sq = 0.0;
    std::size_t err_count = 0;
    for (const MarkerRecord& r : records) {
        if (!r.matched) continue;
        const bool four_pred = r.corner_distances.size() == 4;
        int surviving = 0;
        for (double d : r.corner_distances)
            if (d <= filter_px) {
                ++surviving;
                err_sum += d;
                err_sq += d * d;
                ++err_count;
            }
        const bool all_four_close = four_pred && surviving == 4;
        const bool id_ok = r.predicted_id && *r.predicted_id == r.gt_id;
        if (four_pred) ++matched_bb;
        if (all_four_close) ++filtered;
        if (all_four_close && id_ok) ++filtered_id;
        if (!all_four_close && id_ok) ++only_id;
    }
    s.matched_bb = 100.0 * matched_bb / n;
    s.corners_filtered = 100.0 * filtered / n;
    s.corners_plus_id = 100.0 * filtered_id / n;
    s.only_id = 100.0 * only_id / n;
    if (err_count > 0) {
        s.corner_error_mean = err_sum / static_cast<double>(err_count);
        const double var =
            err_sq / static_cast<double>(err_count) - s.corner_error_mean * s.corner_error_mean;
        s.corner_error_std = std::sqrt(std::max(0.0, var));
    }
    return s;
}

PRCurve decoder_pr(const std::vector<DecoderOutcome>& outcomes, int gt_count) {
    if (gt_count <= 0)
        throw ValidationError("decoder_pr: gt_count must be positive");
    PRCurve curve;
    for (int t = 0; t <= 9; ++t) {
        int kept = 0, correct = 0;
        for (const DecoderOutcome& o : outcomes)
            if (o.min_hamming <= t) {
                ++kept;
                if (o.id_correct) ++correct;
            }
        if (kept == 0) continue;  // precision undefined at this threshold
        curve.points.push_back({static_cast<double>(t),
                                static_cast<double>(correct) / kept,
                                static_cast<double>(kept) / gt_count});
    }
    curve.auc = curve_auc(curve.points);
    return curve;
}

// --- serialization ---

std::vector<DetectionRecord> read_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_detections: cannot open " + path);
    std::vector<DetectionRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        DetectionRecord rec;
        rec.image = j.at("image").get<std::string>();
        for (const json& d : j.at("detections")) {
            EvalDetection det;
            const auto& b = d.at("bbox");
            det.bbox = {b.at(0).get<double>(), b.at(1).get<double>(),
                        b.at(2).get<double>(), b.at(3).get<double>()};
            for (const json& c : d.at("corners"))
                det.corners.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
            det.score = d.at("score").get<double>();
            if (!d.at("id").is_null()) det.id = d.at("id").get<int>();
            if (!d.at("hamming").is_null()) det.hamming = d.at("hamming").get<int>();
            rec.detections.push_back(std::move(det));
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void write_detections(const std::vector<DetectionRecord>& records,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_detections: cannot open " + path);
    for (const DetectionRecord& rec : records) {
        json dets = json::array();
        for (const EvalDetection& d : rec.detections) {
            json corners = json::array();
            for (const Point2& p : d.corners) corners.push_back({p.x, p.y});
            dets.push_back({{"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
                            {"corners", corners},
                            {"score", d.score},
                            {"id", d.id ? json(*d.id) : json(nullptr)},
                            {"hamming", d.hamming ? json(*d.hamming) : json(nullptr)}});
        }
        out << json{{"image", rec.image}, {"detections", dets}}.dump() << "\n";
    }
}

void write_pr_csv(const PRCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_pr_csv: cannot open " + path);
    out << "threshold,precision,recall\n";
    out.precision(17);
    for (const PRPoint& p : curve.points)
        out << p.threshold << "," << p.precision << "," << p.recall << "\n";
}

PRCurve read_pr_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_pr_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("threshold,", 0) != 0)
        throw ParseError("read_pr_csv: missing header in " + path);
    PRCurve curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        PRPoint p;
        char c1 = 0, c2 = 0;
        if (!(ss >> p.threshold >> c1 >> p.precision >> c2 >> p.recall) ||
            c1 != ',' || c2 != ',')
            throw ParseError("read_pr_csv: bad row in " + path + ": " + line);
        curve.points.push_back(p);
    }
    curve.auc = curve_auc(curve.points);
    return curve;
}

std::string render_pr_svg(
    const std::vector<std::pair<std::string, PRCurve>>& curves,
    const std::string& title) {
    constexpr int kW = 560, kH = 420;
    constexpr double kLeft = 60, kRight = 20, kTop = 40, kBottom = 50;
    const double plot_w = kW - kLeft - kRight;
    const double plot_h = kH - kTop - kBottom;
    const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    auto sx = [&](double recall) { return kLeft + recall * plot_w; };
    auto sy = [&](double precision) { return kTop + (1.0 - precision) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
        << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
    svg << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

    // Axes, grid, ticks at 0, .25, .5, .75, 1.
    for (int i = 0; i <= 4; ++i) {
        const double v = i * 0.25;
        svg << "<line x1=\"" << sx(v) << "\" y1=\"" << kTop << "\" x2=\"" << sx(v)
            << "\" y2=\"" << kTop + plot_h << "\" stroke=\"#dddddd\"/>\n";
        svg << "<line x1=\"" << kLeft << "\" y1=\"" << sy(v) << "\" x2=\""
            << kLeft + plot_w << "\" y2=\"" << sy(v) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << sx(v) << "\" y=\"" << kTop + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << v << "</text>\n";
        svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << sy(v) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << v << "</text>\n";
    }
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
        << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kH - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
           "Recall</text>\n";
    svg << "<text x=\"16\" y=\"" << kTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
           "transform=\"rotate(-90 16 " << kTop + plot_h / 2 << ")\">Precision</text>\n";

    int ci = 0;
    for (const auto& [name, curve] : curves) {
        const char* color = palette[ci % 5];
        std::ostringstream pts;
        for (const PRPoint& p : curve.points)
            pts << sx(p.recall) << "," << sy(p.precision) << " ";
        svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\""
            << color << "\" stroke-width=\"1.5\"/>\n";
        for (const PRPoint& p : curve.points)
            svg << "<circle cx=\"" << sx(p.recall) << "\" cy=\"" << sy(p.precision)
                << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
        svg << "<text x=\"" << kLeft + 10 << "\" y=\"" << kTop + 16 + 16 * ci
            << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color
            << "\">" << name << " (AUC " << curve.auc << ")</text>\n";
        ++ci;
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace markerlab
