#include "markerlab/synthgen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <unordered_map>

#include <json.hpp>

#include "markerlab/error.hpp"

namespace markerlab {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<Image> prepare_background(const Image& img, int target_w,
                                        int target_h) {
    Image work = img.height > img.width ? rotate90_cw(img) : img;
    if (work.width < target_w || work.height < target_h) return std::nullopt;
    const int x0 = (work.width - target_w) / 2;
    const int y0 = (work.height - target_h) / 2;
    Image out(target_w, target_h);
    for (int y = 0; y < target_h; ++y)
        std::copy_n(work.px(x0, y0 + y), 3u * static_cast<std::size_t>(target_w),
                    out.px(0, y));
    return out;
}

BackgroundPool bin_backgrounds(std::vector<BackgroundItem> measured, int n_bins) {
    if (n_bins < 1) throw ValidationError("bin_backgrounds: n_bins must be >= 1");
    if (static_cast<int>(measured.size()) < n_bins)
        throw ValidationError("bin_backgrounds: need at least " +
                              std::to_string(n_bins) + " images, got " +
                              std::to_string(measured.size()));
    std::vector<int> order(measured.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double la = measured[static_cast<std::size_t>(a)].median_luma;
        const double lb = measured[static_cast<std::size_t>(b)].median_luma;
        if (la != lb) return la < lb;
        return a < b;  // stable tie-break on input index
    });

    const int per_bin = static_cast<int>(measured.size()) / n_bins;
    BackgroundPool pool;
    pool.items.reserve(static_cast<std::size_t>(per_bin) * static_cast<std::size_t>(n_bins));
    // Leftovers drop from the top (largest-luma) side.
    for (int i = 0; i < per_bin * n_bins; ++i)
        pool.items.push_back(measured[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
    pool.bins.resize(static_cast<std::size_t>(n_bins));
    for (int b = 0; b < n_bins; ++b) {
        pool.bins[static_cast<std::size_t>(b)].resize(static_cast<std::size_t>(per_bin));
        for (int k = 0; k < per_bin; ++k)
            pool.bins[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)] = b * per_bin + k;
    }
    return pool;
}

std::vector<int> sample_backgrounds(const BackgroundPool& pool, int total,
                                    Rng& rng) {
    const int n_bins = static_cast<int>(pool.bins.size());
    if (n_bins == 0) throw ValidationError("sample_backgrounds: empty pool");
    if (total % n_bins != 0)
        throw ValidationError("sample_backgrounds: total " + std::to_string(total) +
                              " not divisible by " + std::to_string(n_bins) + " bins");
    const int per_bin = total / n_bins;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(total));
    for (const std::vector<int>& bin : pool.bins) {
        if (per_bin > static_cast<int>(bin.size()))
            throw ValidationError("sample_backgrounds: bin exhausted (need " +
                                  std::to_string(per_bin) + " of " +
                                  std::to_string(bin.size()) + ")");
        std::vector<int> shuffled = bin;
        rng.shuffle(shuffled);
        out.insert(out.end(), shuffled.begin(), shuffled.begin() + per_bin);
    }
    return out;
}

namespace {

double local_median_luma(const GrayImage& luma, const BBox& region) {
    const int x0 = std::max(0, static_cast<int>(std::floor(region.x)));
    const int y0 = std::max(0, static_cast<int>(std::floor(region.y)));
    const int x1 = std::min(luma.width, static_cast<int>(std::ceil(region.x2())));
    const int y1 = std::min(luma.height, static_cast<int>(std::ceil(region.y2())));
    std::vector<float> vals;
    vals.reserve(static_cast<std::size_t>(std::max(0, x1 - x0)) *
                 static_cast<std::size_t>(std::max(0, y1 - y0)));
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) vals.push_back(luma.at(x, y));
    if (vals.empty()) return 0.0;
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    if (n % 2 == 1) return vals[n / 2];
    return 0.5 * (static_cast<double>(vals[n / 2 - 1]) + static_cast<double>(vals[n / 2]));
}

void blend_marker(Image& canvas, const GrayImage& bg_luma,
                  const ProjectedMarker& proj) {
    for (int y = 0; y < proj.patch.height; ++y) {
        for (int x = 0; x < proj.patch.width; ++x) {
            const float a = proj.alpha.at(x, y);
            if (a <= 0.0f) continue;
            const int fx = proj.x0 + x, fy = proj.y0 + y;
            const double lum = bg_luma.at(fx, fy);
            std::uint8_t* dst = canvas.px(fx, fy);
            const std::uint8_t* src = proj.patch.px(x, y);
            for (int c = 0; c < 3; ++c) {
                const double lit = src[c] * lum;  // luma projection
                const double v = dst[c] * (1.0 - a) + lit * a;
                dst[c] = static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
            }
        }
    }
}

}  // namespace

std::pair<Image, std::vector<SceneAnnotation>> compose_scene(
    const Image& background, const Dictionary& dict, Rng& rng,
    const SceneConfig& config) {
    if (background.width != config.frame_w || background.height != config.frame_h)
        throw ValidationError("compose_scene: background size mismatch");

    Image canvas = background;
    const GrayImage bg_luma = to_luma(background);
    std::vector<SceneAnnotation> annotations;
    std::vector<BBox> occupied;  // face bboxes of placed markers

    const int n_real = rng.uniform_int(config.min_real, config.max_real);
    const int n_fake = rng.uniform_int(config.min_fakes, config.max_fakes);
    const std::vector<int> ids =
        rng.sample_without_replacement(static_cast<int>(dict.size()), n_real);

    constexpr FakeKind kFakeKinds[] = {FakeKind::full_black, FakeKind::inverted,
                                       FakeKind::colored, FakeKind::noise_pattern};

    const int total = n_real + n_fake;
    for (int slot = 0; slot < total; ++slot) {
        const bool fake = slot >= n_real;
        MarkerFace face =
            fake ? make_fake_marker(kFakeKinds[rng.uniform_int(0, 3)], config.cell_px, rng)
                 : render_marker(dict.entry(ids[static_cast<std::size_t>(slot)]).code,
                                 config.cell_px);

        bool placed = false;
        for (int attempt = 0; attempt < config.placement_retries && !placed; ++attempt) {
            PoseSample pose;
            try {
                pose = sample_pose(rng, config.frame_w, config.frame_h, config.pose);
            } catch (const PlacementError&) {
                break;  // frame cannot host this marker at all
            }
            ProjectedMarker proj;
            try {
                proj = project_marker(face, pose, config.frame_w, config.frame_h);
            } catch (const Error&) {
                continue;
            }
            const BBox fb = quad_bbox(proj.face_quad);
            bool overlaps = false;
            for (const BBox& o : occupied)
                if (iou(fb, o) > 0.0) { overlaps = true; break; }
            if (overlaps) continue;
            if (!fake &&
                local_median_luma(bg_luma, quad_bbox(proj.corners)) < config.min_local_luma)
                continue;  // too dark to stay decodable: re-roll placement

            blend_marker(canvas, bg_luma, proj);
            occupied.push_back(fb);
            SceneAnnotation ann;
            ann.corners = proj.corners;
            ann.bbox = quad_bbox(proj.corners);
            ann.fake = fake;
            if (fake) ann.fake_kind = face.fake_kind;
            else ann.id = ids[static_cast<std::size_t>(slot)];
            annotations.push_back(ann);
            placed = true;
        }
        // Unplaced slots drop silently; the scene stays valid.
    }
    return {std::move(canvas), std::move(annotations)};
}

// --- serialization ---

namespace {

json annotation_to_json(const SceneAnnotation& a) {
    json corners = json::array();
    for (const Point2& p : a.corners.corners)
        corners.push_back({p.x, p.y});
    return json{{"id", a.id ? json(*a.id) : json(nullptr)},
                {"fake", a.fake},
                {"fake_kind", a.fake ? json(fake_kind_name(a.fake_kind)) : json(nullptr)},
                {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
                {"corners", corners}};
}

SceneAnnotation annotation_from_json(const json& j) {
    SceneAnnotation a;
    if (!j.at("id").is_null()) a.id = j.at("id").get<int>();
    a.fake = j.at("fake").get<bool>();
    if (!j.at("fake_kind").is_null())
        a.fake_kind = fake_kind_from_name(j.at("fake_kind").get<std::string>());
    const auto& b = j.at("bbox");
    a.bbox = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
              b.at(3).get<double>()};
    const auto& c = j.at("corners");
    if (c.size() != 4) throw ParseError("annotation: corners must have 4 points");
    for (std::size_t k = 0; k < 4; ++k)
        a.corners[k] = {c.at(k).at(0).get<double>(), c.at(k).at(1).get<double>()};
    return a;
}

json config_to_json(const GenerateConfig& c) {
    return json{{"frame_w", c.scene.frame_w},
                {"frame_h", c.scene.frame_h},
                {"min_real", c.scene.min_real},
                {"max_real", c.scene.max_real},
                {"min_fakes", c.scene.min_fakes},
                {"max_fakes", c.scene.max_fakes},
                {"min_local_luma", c.scene.min_local_luma},
                {"placement_retries", c.scene.placement_retries},
                {"cell_px", c.scene.cell_px},
                {"min_view_deg", c.scene.pose.min_view_deg},
                {"max_view_deg", c.scene.pose.max_view_deg},
                {"min_side_px", c.scene.pose.min_side_px},
                {"max_side_px", c.scene.pose.max_side_px},
                {"min_focal_px", c.scene.pose.min_focal_px},
                {"max_focal_px", c.scene.pose.max_focal_px},
                {"train_size", c.train_size},
                {"val_size", c.val_size},
                {"n_bins", c.n_bins}};
}

GenerateConfig config_from_json(const json& j) {
    GenerateConfig c;
    c.scene.frame_w = j.at("frame_w").get<int>();
    c.scene.frame_h = j.at("frame_h").get<int>();
    c.scene.min_real = j.at("min_real").get<int>();
    c.scene.max_real = j.at("max_real").get<int>();
    c.scene.min_fakes = j.at("min_fakes").get<int>();
    c.scene.max_fakes = j.at("max_fakes").get<int>();
    c.scene.min_local_luma = j.at("min_local_luma").get<double>();
    c.scene.placement_retries = j.at("placement_retries").get<int>();
    c.scene.cell_px = j.at("cell_px").get<int>();
    c.scene.pose.min_view_deg = j.at("min_view_deg").get<double>();
    c.scene.pose.max_view_deg = j.at("max_view_deg").get<double>();
    c.scene.pose.min_side_px = j.at("min_side_px").get<double>();
    c.scene.pose.max_side_px = j.at("max_side_px").get<double>();
    c.scene.pose.min_focal_px = j.at("min_focal_px").get<double>();
    c.scene.pose.max_focal_px = j.at("max_focal_px").get<double>();
    c.train_size = j.at("train_size").get<int>();
    c.val_size = j.at("val_size").get<int>();
    c.n_bins = j.at("n_bins").get<int>();
    return c;
}

}  // namespace

std::string config_digest(const GenerateConfig& config) {
    const std::string s = config_to_json(config).dump();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(s.data(), s.size())));
    return buf;
}

std::vector<SceneRecord> read_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_annotations: cannot open " + path);
    std::vector<SceneRecord> out;
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
        SceneRecord rec;
        rec.image = j.at("image").get<std::string>();
        for (const json& m : j.at("markers"))
            rec.markers.push_back(annotation_from_json(m));
        out.push_back(std::move(rec));
    }
    return out;
}

void write_annotations(const std::vector<SceneRecord>& records,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_annotations: cannot open " + path);
    for (const SceneRecord& rec : records) {
        json markers = json::array();
        for (const SceneAnnotation& a : rec.markers)
            markers.push_back(annotation_to_json(a));
        out << json{{"image", rec.image}, {"markers", markers}}.dump() << "\n";
    }
}

DatasetManifest read_manifest(const std::string& dataset_dir) {
    const std::string path = (fs::path(dataset_dir) / "manifest.json").string();
    std::ifstream in(path);
    if (!in) throw IoError("read_manifest: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    DatasetManifest m;
    m.split = j.at("split").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = config_from_json(j.at("config"));
    m.config_digest = j.at("config_digest").get<std::string>();
    m.images = j.at("images").get<std::vector<std::string>>();
    return m;
}

void write_manifest(const DatasetManifest& manifest, const std::string& dataset_dir) {
    const std::string path = (fs::path(dataset_dir) / "manifest.json").string();
    std::ofstream out(path);
    if (!out) throw IoError("write_manifest: cannot open " + path);
    out << json{{"split", manifest.split},
                {"seed", manifest.seed},
                {"config", config_to_json(manifest.config)},
                {"config_digest", manifest.config_digest},
                {"images", manifest.images}}
               .dump(2)
        << "\n";
}

namespace {

struct ComposedScene {
    Image image;
    std::vector<SceneAnnotation> annotations;
};

}  // namespace

GenerateResult generate_dataset(const std::string& background_dir,
                                const Dictionary& dict, std::uint64_t seed,
                                const std::string& out_dir,
                                const GenerateConfig& config, int jobs) {
    // Collect candidate backgrounds in sorted-name order for determinism.
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(background_dir)) {
        if (!e.is_regular_file()) continue;
        const std::string ext = e.path().extension().string();
        if (ext == ".png" || ext == ".PNG") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw ValidationError("generate_dataset: no .png backgrounds in " + background_dir);

    std::vector<BackgroundItem> measured;
    std::vector<Image> prepared;
    for (const std::string& f : files) {
        std::optional<Image> bg =
            prepare_background(read_png(f), config.scene.frame_w, config.scene.frame_h);
        if (!bg) continue;  // too small: filtered, not an error
        measured.push_back({f, median_luma(*bg)});
        prepared.push_back(std::move(*bg));
    }

    const BackgroundPool pool = bin_backgrounds(measured, config.n_bins);
    const int total = config.train_size + config.val_size;
    if (static_cast<int>(pool.items.size()) < total)
        throw ValidationError("generate_dataset: need " + std::to_string(total) +
                              " binned backgrounds, have " +
                              std::to_string(pool.items.size()));

    // Round-robin across bins, without replacement: equal per-bin use
    // whenever total is a bin multiple, and train/val stay disjoint.
    Rng root(seed);
    std::vector<std::vector<int>> bins = pool.bins;
    for (std::vector<int>& b : bins) root.shuffle(b);
    std::vector<int> picks;
    picks.reserve(static_cast<std::size_t>(total));
    std::vector<std::size_t> cursor(bins.size(), 0);
    for (int k = 0; k < total; ++k) {
        const std::size_t b = static_cast<std::size_t>(k) % bins.size();
        if (cursor[b] >= bins[b].size())
            throw ValidationError("generate_dataset: bin exhausted");
        picks.push_back(bins[b][cursor[b]++]);
    }

    // Map pool item -> prepared image index (pool.items is a reordering of
    // `measured`, which parallels `prepared`).
    std::vector<int> pool_to_prepared(pool.items.size());
    {
        std::unordered_map<std::string, int> by_path;
        for (std::size_t i = 0; i < measured.size(); ++i)
            by_path[measured[i].path] = static_cast<int>(i);
        for (std::size_t i = 0; i < pool.items.size(); ++i)
            pool_to_prepared[i] = by_path.at(pool.items[i].path);
    }

    GenerateResult result;
    for (const bool is_train : {true, false}) {
        const std::string split = is_train ? "train" : "val";
        const int count = is_train ? config.train_size : config.val_size;
        const int offset = is_train ? 0 : config.train_size;

        const fs::path split_dir = fs::path(out_dir) / split;
        fs::create_directories(split_dir / "images");

        std::vector<ComposedScene> scenes(static_cast<std::size_t>(count));
        auto compose_one = [&](int k) {
            const int pick = picks[static_cast<std::size_t>(offset + k)];
            const Image& bg =
                prepared[static_cast<std::size_t>(pool_to_prepared[static_cast<std::size_t>(pick)])];
            Rng rng = root.child(static_cast<std::uint64_t>(offset + k));
            auto [img, anns] = compose_scene(bg, dict, rng, config.scene);
            scenes[static_cast<std::size_t>(k)] = {std::move(img), std::move(anns)};
        };
        if (jobs > 1) {
            std::vector<std::future<void>> futs;
            std::atomic<int> next{0};
            for (int t = 0; t < jobs; ++t)
                futs.push_back(std::async(std::launch::async, [&] {
                    for (int k = next.fetch_add(1); k < count; k = next.fetch_add(1))
                        compose_one(k);
                }));
            for (auto& f : futs) f.get();
        } else {
            for (int k = 0; k < count; ++k) compose_one(k);
        }

        DatasetManifest manifest;
        manifest.split = split;
        manifest.seed = seed;
        manifest.config = config;
        manifest.config_digest = config_digest(config);
        std::vector<SceneRecord> records;
        for (int k = 0; k < count; ++k) {
            char name[32];
            std::snprintf(name, sizeof name, "images/img_%05d.png", k);
            write_png(scenes[static_cast<std::size_t>(k)].image, (split_dir / name).string());
            manifest.images.emplace_back(name);
            records.push_back({name, std::move(scenes[static_cast<std::size_t>(k)].annotations)});
        }
        write_annotations(records, (split_dir / "annotations.jsonl").string());
        write_manifest(manifest, split_dir.string());
        (is_train ? result.train : result.val) = std::move(manifest);
    }
    return result;
}

}  // namespace markerlab
