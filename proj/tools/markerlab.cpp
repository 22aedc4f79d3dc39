// markerlab - synthetic ArUco scene generation, heatmap corner codec,
// baseline detection and evaluation, as one reproducible CLI.

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include <json.hpp>

#include "markerlab/augment.hpp"
#include "markerlab/decode.hpp"
#include "markerlab/detect.hpp"
#include "markerlab/dictionary.hpp"
#include "markerlab/error.hpp"
#include "markerlab/eval.hpp"
#include "markerlab/heatmap.hpp"
#include "markerlab/imaging.hpp"
#include "markerlab/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace markerlab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

struct CommonArgs {
    std::string dict_path = "data/aruco_6x6_250.txt";
    int jobs = 1;
};

// Runs fn(k) for k in [0,count) across `jobs` workers. Work items must be
// independent; output ordering is the caller's job (index-addressed slots).
template <typename Fn>
void parallel_for(int count, int jobs, Fn&& fn) {
    if (jobs <= 1) {
        for (int k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::future<void>> futs;
    for (int t = 0; t < std::min(jobs, count); ++t)
        futs.push_back(std::async(std::launch::async, [&] {
            for (int k = next.fetch_add(1); k < count; k = next.fetch_add(1)) fn(k);
        }));
    for (auto& f : futs) f.get();
}

int cmd_gen(const CommonArgs& common, const std::string& backgrounds,
            const std::string& out_dir, std::uint64_t seed,
            const GenerateConfig& config) {
    const Dictionary dict = load_dictionary(common.dict_path);
    const GenerateResult result = generate_dataset(backgrounds, dict, seed, out_dir,
                                                   config, common.jobs);
    std::cout << "gen: wrote " << result.train.images.size() << " train + "
              << result.val.images.size() << " val images to " << out_dir
              << " (config digest " << result.train.config_digest << ")\n";
    return kExitOk;
}

int cmd_augment(const std::string& in_dir, const std::string& out_dir,
                std::uint64_t seed, const AugmentOptions& opts) {
    const int written = augment_detection_set(in_dir, out_dir, seed, opts);
    std::cout << "augment: wrote " << written << " images to " << out_dir << "\n";
    return kExitOk;
}

int cmd_crops(const CommonArgs& common, const std::string& dataset_dir,
              const std::string& out_dir, double margin, int crop_size,
              bool include_fakes) {
    const std::vector<SceneRecord> records =
        read_annotations((fs::path(dataset_dir) / "annotations.jsonl").string());
    fs::create_directories(fs::path(out_dir) / "crops");
    std::ofstream index((fs::path(out_dir) / "crops.jsonl").string());
    if (!index) throw IoError("crops: cannot open output index");

    int n = 0;
    for (const SceneRecord& rec : records) {
        const Image img = read_png((fs::path(dataset_dir) / rec.image).string());
        for (std::size_t mi = 0; mi < rec.markers.size(); ++mi) {
            const SceneAnnotation& m = rec.markers[mi];
            if (m.fake && !include_fakes) continue;
            const BBox box = expand_bbox(m.bbox, margin, img.width, img.height);
            const Image crop = crop_resize(img, box, crop_size, crop_size);
            json corners = json::array();
            for (const Point2& p : m.corners.corners)
                corners.push_back({(p.x - box.x) / box.w * crop_size,
                                   (p.y - box.y) / box.h * crop_size});
            char name[48];
            std::snprintf(name, sizeof name, "crops/crop_%06d.png", n);
            write_png(crop, (fs::path(out_dir) / name).string());
            index << json{{"crop", name},
                          {"image", rec.image},
                          {"id", m.id ? json(*m.id) : json(nullptr)},
                          {"fake", m.fake},
                          {"corners", corners}}
                         .dump()
                  << "\n";
            ++n;
        }
    }
    (void)common;
    std::cout << "crops: wrote " << n << " crops to " << out_dir << "\n";
    return kExitOk;
}

int cmd_heatmaps_encode(const std::string& crops_index, const std::string& out_dir,
                        double base_sigma2) {
    std::ifstream in(crops_index);
    if (!in) throw IoError("heatmaps encode: cannot open " + crops_index);
    fs::create_directories(fs::path(out_dir) / "heatmaps");
    std::ofstream index((fs::path(out_dir) / "heatmaps.jsonl").string());
    if (!index) throw IoError("heatmaps encode: cannot open output index");

    std::string line;
    int n = 0, lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(crops_index + ":" + std::to_string(lineno) + ": " + e.what());
        }
        std::vector<Point2> corners;
        for (const json& c : j.at("corners"))
            corners.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
        const Heatmap map = encode_corners(corners, 64, 64, base_sigma2);
        char name[48];
        std::snprintf(name, sizeof name, "heatmaps/hm_%06d.gray", n);
        write_gray(map, (fs::path(out_dir) / name).string());
        j["heatmap"] = name;
        index << j.dump() << "\n";
        ++n;
    }
    std::cout << "heatmaps encode: wrote " << n << " heatmaps to " << out_dir << "\n";
    return kExitOk;
}

int cmd_heatmaps_decode(const std::string& heatmap_index, const std::string& out_path,
                        const DecodeParams& params) {
    std::ifstream in(heatmap_index);
    if (!in) throw IoError("heatmaps decode: cannot open " + heatmap_index);
    std::ofstream out(out_path);
    if (!out) throw IoError("heatmaps decode: cannot open " + out_path);
    const fs::path base = fs::path(heatmap_index).parent_path();

    std::string line;
    int n = 0, lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(heatmap_index + ":" + std::to_string(lineno) + ": " + e.what());
        }
        const std::string file = j.at("heatmap").get<std::string>();
        const Heatmap map = read_gray((base / file).string());
        const std::vector<Point2> corners = decode_corners(map, params);
        json pts = json::array();
        for (const Point2& p : corners) pts.push_back({p.x, p.y});
        out << json{{"heatmap", file}, {"corners", pts}}.dump() << "\n";
        ++n;
    }
    std::cout << "heatmaps decode: decoded " << n << " heatmaps to " << out_path << "\n";
    return kExitOk;
}

int cmd_detect(const CommonArgs& common, const std::string& image_dir,
               const std::string& out_path, int max_hamming,
               const DetectParams& params) {
    const Dictionary dict = load_dictionary(common.dict_path);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(image_dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            files.push_back(e.path().filename().string());
    std::sort(files.begin(), files.end());

    std::vector<DetectionRecord> records(files.size());
    parallel_for(static_cast<int>(files.size()), common.jobs, [&](int k) {
        const std::string& f = files[static_cast<std::size_t>(k)];
        const Image img = read_png((fs::path(image_dir) / f).string());
        DetectionRecord rec;
        rec.image = f;
        for (const Detection& d : detect(img, dict, max_hamming, params)) {
            EvalDetection ed;
            ed.bbox = d.bbox;
            ed.corners.assign(d.quad.corners.begin(), d.quad.corners.end());
            ed.score = d.score;
            ed.id = d.id;
            ed.hamming = d.hamming;
            rec.detections.push_back(std::move(ed));
        }
        records[static_cast<std::size_t>(k)] = std::move(rec);
    });
    write_detections(records, out_path);
    std::cout << "detect: processed " << files.size() << " images -> " << out_path << "\n";
    return kExitOk;
}

int cmd_eval(const std::string& detections_path, const std::string& annotations_path,
             const std::string& out_dir, double iou_thr, double filter_px) {
    const std::vector<DetectionRecord> dets = read_detections(detections_path);
    const std::vector<SceneRecord> gt = read_annotations(annotations_path);
    std::map<std::string, const SceneRecord*> gt_by_image;
    for (const SceneRecord& r : gt) gt_by_image[r.image] = &r;

    std::vector<ImageEvalRecord> images;
    std::vector<MarkerRecord> marker_records;
    std::vector<DecoderOutcome> outcomes;
    int real_gt = 0;
    for (const DetectionRecord& d : dets) {
        const auto it = gt_by_image.find(d.image);
        if (it == gt_by_image.end())
            throw ValidationError("eval: no ground truth for image " + d.image);
        ImageEvalRecord rec;
        rec.detections = d.detections;
        for (const SceneAnnotation& a : it->second->markers) {
            GtMarker g;
            g.bbox = a.bbox;
            g.corners = a.corners;
            g.fake = a.fake;
            g.id = a.id;
            rec.ground_truth.push_back(g);
        }

        // Per-marker records + decoder outcomes from the full matching.
        const Matching m = match_detections(rec.detections, rec.ground_truth, iou_thr);
        std::vector<int> gt_to_det(rec.ground_truth.size(), -1);
        for (std::size_t di = 0; di < m.det_to_gt.size(); ++di)
            if (m.det_to_gt[di] >= 0)
                gt_to_det[static_cast<std::size_t>(m.det_to_gt[di])] = static_cast<int>(di);
        for (std::size_t gi = 0; gi < rec.ground_truth.size(); ++gi) {
            const GtMarker& g = rec.ground_truth[gi];
            if (g.fake) continue;
            ++real_gt;
            MarkerRecord mr;
            mr.gt_id = g.id.value_or(-1);
            if (gt_to_det[gi] >= 0) {
                const EvalDetection& det =
                    rec.detections[static_cast<std::size_t>(gt_to_det[gi])];
                mr.matched = true;
                mr.corner_distances = corner_error(det.corners, g.corners);
                mr.predicted_id = det.id;
                if (det.hamming)
                    outcomes.push_back({*det.hamming, det.id && *det.id == mr.gt_id});
            }
            marker_records.push_back(std::move(mr));
        }
        images.push_back(std::move(rec));
    }

    const PRCurve detector = pr_curve(images, iou_thr);
    const MarkerStats stats = marker_stats(marker_records, filter_px);

    fs::create_directories(out_dir);
    write_pr_csv(detector, (fs::path(out_dir) / "detector_pr.csv").string());
    json summary{{"detector_auc", detector.auc},
                 {"gt_markers", real_gt},
                 {"marker_stats",
                  {{"matched_bb", stats.matched_bb},
                   {"corners_filtered", stats.corners_filtered},
                   {"corners_plus_id", stats.corners_plus_id},
                   {"only_id", stats.only_id},
                   {"corner_error_mean", stats.corner_error_mean},
                   {"corner_error_std", stats.corner_error_std}}}};
    if (!outcomes.empty()) {
        const PRCurve decoder = decoder_pr(outcomes, real_gt);
        write_pr_csv(decoder, (fs::path(out_dir) / "decoder_pr.csv").string());
        summary["decoder_auc"] = decoder.auc;
    }
    std::ofstream sf((fs::path(out_dir) / "summary.json").string());
    if (!sf) throw IoError("eval: cannot write summary.json");
    sf << summary.dump(2) << "\n";
    std::cout << "eval: detector AUC " << detector.auc << ", summary in " << out_dir << "\n";
    return kExitOk;
}

int cmd_plot(const std::vector<std::string>& csv_paths, const std::string& out_path,
             const std::string& title) {
    std::vector<std::pair<std::string, PRCurve>> curves;
    for (const std::string& p : csv_paths)
        curves.emplace_back(fs::path(p).stem().string(), read_pr_csv(p));
    std::ofstream out(out_path);
    if (!out) throw IoError("plot: cannot open " + out_path);
    out << render_pr_svg(curves, title);
    std::cout << "plot: wrote " << out_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ArUco synthetic-scene toolkit: generation, augmentation, "
                 "heatmap corner codec, baseline detection, evaluation"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Key/value config file; flags override it");

    CommonArgs common;
    app.add_option("--dict", common.dict_path, "Dictionary file")
        ->capture_default_str();
    app.add_option("--jobs", common.jobs, "Worker threads")->capture_default_str();

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    gen->fallthrough();
    std::string gen_backgrounds, gen_out;
    std::uint64_t gen_seed = 0;
    GenerateConfig gen_config;
    gen->add_option("--backgrounds", gen_backgrounds, "Background image directory")
        ->required();
    gen->add_option("--out", gen_out, "Output dataset directory")->required();
    gen->add_option("--seed", gen_seed, "Master seed (mandatory for reproducibility)")
        ->required();
    gen->add_option("--train-size", gen_config.train_size)->capture_default_str();
    gen->add_option("--val-size", gen_config.val_size)->capture_default_str();
    gen->add_option("--max-real", gen_config.scene.max_real)->capture_default_str();
    gen->add_option("--max-fakes", gen_config.scene.max_fakes)->capture_default_str();
    gen->add_option("--max-view-deg", gen_config.scene.pose.max_view_deg)
        ->capture_default_str();

    // augment
    auto* aug = app.add_subcommand("augment", "Photometric 10x detection-set augmentation");
    aug->fallthrough();
    std::string aug_in, aug_out;
    std::uint64_t aug_seed = 0;
    AugmentOptions aug_opts;
    aug->add_option("--in", aug_in, "Input dataset split directory")->required();
    aug->add_option("--out", aug_out, "Output directory")->required();
    aug->add_option("--seed", aug_seed, "Master seed")->required();
    aug->add_option("--copies", aug_opts.copies, "Augmented copies per image")
        ->capture_default_str();
    aug->add_flag("--no-color-shift{false}", aug_opts.color_shift, "Disable color shift");
    aug->add_flag("--no-noise{false}", aug_opts.noise, "Disable Gaussian noise");

    // crops
    auto* crops = app.add_subcommand("crops", "Cut 64x64 marker crops from a dataset");
    crops->fallthrough();
    std::string crops_dataset, crops_out;
    double crops_margin = 0.2;
    int crops_size = 64;
    bool crops_fakes = false;
    crops->add_option("--dataset", crops_dataset, "Dataset split directory")->required();
    crops->add_option("--out", crops_out, "Output directory")->required();
    crops->add_option("--margin", crops_margin, "Bbox expansion margin")
        ->capture_default_str();
    crops->add_option("--size", crops_size, "Crop side in pixels")->capture_default_str();
    crops->add_flag("--include-fakes", crops_fakes, "Also crop fake markers");

    // heatmaps
    auto* hm = app.add_subcommand("heatmaps", "Heatmap corner codec (encode/decode)");
    hm->fallthrough();
    hm->require_subcommand(1);
    auto* hm_enc = hm->add_subcommand("encode", "Corners JSONL -> GRAY heatmaps");
    hm_enc->fallthrough();
    std::string hm_enc_in, hm_enc_out;
    double hm_sigma2 = 1.0;
    hm_enc->add_option("--crops", hm_enc_in, "crops.jsonl with 64x64 corner coords")
        ->required();
    hm_enc->add_option("--out", hm_enc_out, "Output directory")->required();
    hm_enc->add_option("--base-sigma2", hm_sigma2)->capture_default_str();
    auto* hm_dec = hm->add_subcommand("decode", "GRAY heatmaps -> corners JSONL");
    hm_dec->fallthrough();
    std::string hm_dec_in, hm_dec_out;
    DecodeParams hm_params;
    hm_dec->add_option("--heatmaps", hm_dec_in, "heatmaps.jsonl index")->required();
    hm_dec->add_option("--out", hm_dec_out, "Output corners JSONL")->required();
    hm_dec->add_option("--threshold", hm_params.value_threshold)->capture_default_str();
    hm_dec->add_option("--base-sigma2", hm_params.base_sigma2)->capture_default_str();

    // detect
    auto* det = app.add_subcommand("detect", "Classical baseline detector");
    det->fallthrough();
    std::string det_images, det_out;
    int det_hamming = 2;
    DetectParams det_params;
    det->add_option("--images", det_images, "Image directory")->required();
    det->add_option("--out", det_out, "Output detections JSONL")->required();
    det->add_option("--max-hamming", det_hamming)->capture_default_str();
    det->add_option("--window", det_params.window)->capture_default_str();
    det->add_option("--offset", det_params.offset)->capture_default_str();
    det->add_option("--min-area", det_params.min_area)->capture_default_str();

    // eval
    auto* ev = app.add_subcommand("eval", "Metrics from detections + ground truth");
    ev->fallthrough();
    std::string ev_dets, ev_gt, ev_out;
    double ev_iou = 0.5, ev_filter = 5.0;
    ev->add_option("--detections", ev_dets, "Detections JSONL")->required();
    ev->add_option("--annotations", ev_gt, "Ground-truth annotations JSONL")->required();
    ev->add_option("--out", ev_out, "Output directory")->required();
    ev->add_option("--iou", ev_iou)->capture_default_str();
    ev->add_option("--filter-px", ev_filter)->capture_default_str();

    // plot
    auto* plot = app.add_subcommand("plot", "Render PR CSV curves to SVG");
    plot->fallthrough();
    std::vector<std::string> plot_csvs;
    std::string plot_out, plot_title = "Precision-Recall";
    plot->add_option("--csv", plot_csvs, "Input CSV files")->required();
    plot->add_option("--out", plot_out, "Output SVG")->required();
    plot->add_option("--title", plot_title)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(common, gen_backgrounds, gen_out, gen_seed, gen_config);
        if (aug->parsed()) return cmd_augment(aug_in, aug_out, aug_seed, aug_opts);
        if (crops->parsed())
            return cmd_crops(common, crops_dataset, crops_out, crops_margin, crops_size, crops_fakes);
        if (hm->parsed()) {
            if (hm_enc->parsed()) return cmd_heatmaps_encode(hm_enc_in, hm_enc_out, hm_sigma2);
            return cmd_heatmaps_decode(hm_dec_in, hm_dec_out, hm_params);
        }
        if (det->parsed()) return cmd_detect(common, det_images, det_out, det_hamming, det_params);
        if (ev->parsed()) return cmd_eval(ev_dets, ev_gt, ev_out, ev_iou, ev_filter);
        if (plot->parsed()) return cmd_plot(plot_csvs, plot_out, plot_title);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ParseError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
