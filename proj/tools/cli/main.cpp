#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "semirend/annotations.hpp"
#include "semirend/evaluation.hpp"
#include "semirend/grid_io.hpp"
#include "semirend/image_io.hpp"
#include "semirend/pipeline.hpp"
#include "semirend/rng.hpp"
#include "semirend/stats.hpp"
#include "semirend/synthetic.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace semirend;
using namespace semirend::cli;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

constexpr const char* kDatasetIndex = "dataset.json";
constexpr const char* kGroundTruth = "ground_truth.json";

// ---- dataset directory written by `synth`

struct DatasetEntry {
    std::string image_id;
    DefectClass class_id = DefectClass::thin_bridge;
    std::string split;
    fs::path coarse;
    fs::path features;
};

struct DatasetDir {
    fs::path root;
    json config;
    std::vector<DatasetEntry> entries;
    std::map<std::string, MaskInstance> ground_truth;  // by image id
};

std::string stem_of(const std::string& image_id) { return fs::path(image_id).stem().string(); }

DatasetDir load_dataset(const fs::path& root) {
    const fs::path index = root / kDatasetIndex;
    if (!fs::exists(index)) throw UsageError(root.string() + " is not a dataset directory (no " + kDatasetIndex + ")");
    const json doc = read_json_file(index.string());
    DatasetDir ds;
    ds.root = root;
    ds.config = doc.value("config", json::object());
    const std::string where = index.string();
    if (!doc.contains("samples") || !doc.at("samples").is_array()) throw ParseError(where + "/samples", "expected an array");
    for (std::size_t k = 0; k < doc.at("samples").size(); ++k) {
        const json& s = doc.at("samples")[k];
        const std::string at = where + "/samples/" + std::to_string(k);
        DatasetEntry e;
        try {
            e.image_id = s.at("image_id").get<std::string>();
            const auto cls = parse_class(s.at("class").get<std::string>());
            if (!cls) throw ParseError(at + "/class", "unknown defect class");
            e.class_id = *cls;
            e.split = s.at("split").get<std::string>();
            e.coarse = root / s.at("coarse").get<std::string>();
            e.features = root / s.at("features").get<std::string>();
        } catch (const json::exception& ex) {
            throw ParseError(at, ex.what());
        }
        ds.entries.push_back(std::move(e));
    }
    for (MaskInstance& inst : load_predictions((root / kGroundTruth).string())) {
        const std::string id = inst.image_id;
        ds.ground_truth.emplace(id, std::move(inst));
    }
    return ds;
}

std::vector<const DatasetEntry*> select_split(const DatasetDir& ds, const std::string& split) {
    std::vector<const DatasetEntry*> out;
    for (const DatasetEntry& e : ds.entries) {
        if (split == "all" || e.split == split) out.push_back(&e);
    }
    return out;
}

std::size_t dataset_coarse_steps(const DatasetDir& ds) { return ds.config.value("coarse_steps", std::size_t{3}); }

// Ground truth from a dataset directory, a VIA project or a predictions file.
std::vector<MaskInstance> load_ground_truth(const fs::path& path, const std::string& class_key, bool strict,
                                            std::vector<std::string>& warnings) {
    if (fs::is_directory(path)) return load_predictions((path / kGroundTruth).string(), strict, &warnings);
    const json doc = read_json_file(path.string());
    if (doc.is_array()) return predictions_from_json(doc, path.string(), strict, &warnings);
    ViaOptions opt;
    opt.class_key = class_key;
    opt.strict = strict;
    opt.image_dir = path.parent_path().string();
    AnnotationSet set = parse_via(doc, opt, path.string());
    warnings.insert(warnings.end(), set.warnings.begin(), set.warnings.end());
    return std::move(set.instances);
}

// ---- option plumbing

std::string env_name(const std::string& flag) {
    std::string out = "SEMIREND_";
    for (char ch : flag) out += ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
}

// Tuning flags may also come from SEMIREND_<FLAG>; paths never do.
template <typename T>
CLI::Option* tuning(CLI::App* app, const std::string& flag, T& value, const std::string& help) {
    return app->add_option("--" + flag, value, help)->envname(env_name(flag))->capture_default_str();
}

json option_snapshot(const CLI::App* app) {
    json out = json::object();
    for (const CLI::Option* opt : app->get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "h") continue;
        if (opt->count() > 0) {
            const auto& r = opt->results();
            out[name] = r.size() == 1 ? json(r.front()) : json(r);
        } else if (opt->get_type_size_max() == 0) {
            out[name] = false;
        } else {
            out[name] = opt->get_default_str();
        }
    }
    return out;
}

RunManifest start_manifest(const CLI::App* sub, int argc, char** argv, std::uint64_t seed) {
    RunManifest m;
    m.command = sub->get_name();
    m.argv.assign(argv, argv + argc);
    m.config = option_snapshot(sub);
    m.seed = seed;
    return m;
}

// ---- synth

struct SynthOptions {
    fs::path out;
    std::size_t total = 116;
    std::size_t image_size = 480;
    std::size_t pitch = 24;
    std::size_t line_width = 12;
    double noise = 0.05;
    std::size_t coarse_steps = 3;
    double label_smoothing = 0.05;
    double coarse_noise = 0.0;
    std::uint64_t seed = 0;
    bool force = false;
};

void cmd_synth(const SynthOptions& o, RunManifest manifest) {
    SynthConfig cfg;
    cfg.image_size = o.image_size;
    cfg.line_pitch = o.pitch;
    cfg.line_width = o.line_width;
    cfg.noise_sigma = o.noise;
    cfg.coarse_steps = o.coarse_steps;
    cfg.label_smoothing = o.label_smoothing;
    cfg.coarse_noise = o.coarse_noise;
    cfg.class_counts = proportional_class_counts(o.total);
    cfg.rng_seed = o.seed;
    cfg.validate();

    StagedOutput out(o.out, o.force);
    const SyntheticDataset ds = generate_synthetic(cfg);

    json samples = json::array();
    json counts = json::object();
    for (const SyntheticSample& s : ds.samples) {
        const std::string stem = stem_of(s.image_id);
        const std::string image = "images/" + s.image_id;
        const std::string coarse = "coarse/" + stem + ".srgd";
        const std::string features = "features/" + stem + ".srgd";
        fs::create_directories((out / "images"));
        fs::create_directories((out / "coarse"));
        fs::create_directories((out / "features"));
        write_image(s.image, (out / image).string());
        save_grid(s.coarse_logits, (out / coarse).string());
        save_grid(s.features, (out / features).string());
        const std::string split(split_name(s.split));
        const std::string cls(class_id(s.class_id));
        samples.push_back({{"image_id", s.image_id},
                           {"class", cls},
                           {"split", split},
                           {"image", image},
                           {"coarse", coarse},
                           {"features", features}});
        json& bucket = counts[split];
        bucket[cls] = (bucket.contains(cls) ? bucket[cls].get<int>() : 0) + 1;
    }
    json splits = json::object();
    for (Split sp : {Split::train, Split::val, Split::test}) {
        json ids = json::array();
        for (const SyntheticSample* s : ds.split(sp)) ids.push_back(s->image_id);
        splits[std::string(split_name(sp))] = ids;
    }
    const json config = {{"image_size", cfg.image_size},     {"line_pitch", cfg.line_pitch},
                         {"line_width", cfg.line_width},     {"noise_sigma", cfg.noise_sigma},
                         {"coarse_steps", cfg.coarse_steps}, {"label_smoothing", cfg.label_smoothing},
                         {"coarse_noise", cfg.coarse_noise}, {"rng_seed", cfg.rng_seed},
                         {"total", o.total}};
    write_json(out / kDatasetIndex,
               {{"version", 1}, {"config", config}, {"samples", samples}, {"splits", splits}, {"counts", counts}});
    const AnnotationSet ann = ds.annotations();
    write_json(out / "annotations.json", export_via(ann));
    save_predictions(out / kGroundTruth, ann.instances);
    manifest.write(out);
    out.commit();
    std::printf("wrote %zu images to %s (train %zu, val %zu, test %zu)\n", ds.samples.size(), o.out.c_str(),
                ds.split(Split::train).size(), ds.split(Split::val).size(), ds.split(Split::test).size());
}

// ---- train-head

struct TrainHeadOptions {
    fs::path data;
    fs::path out;
    std::string split = "train";
    double lr = 0.00025;
    std::size_t batch = 2;
    std::size_t steps = 5000;
    std::vector<std::size_t> hidden{64, 64, 64};
    std::size_t points_per_instance = 196;
    double oversample = 3.0;
    double importance = 0.75;
    std::size_t trajectory_rounds = 0;
    std::optional<std::size_t> subdivision_steps;
    std::optional<std::size_t> points;
    std::uint64_t seed = 0;
    bool force = false;
};

RenderConfig render_config(std::size_t steps, const std::optional<std::size_t>& points) {
    RenderConfig rc;
    rc.subdivision_steps = steps;
    rc.points_per_step = points;
    return rc;
}

struct LoadedInstance {
    Grid2D coarse;
    Grid2D features;
    DenseMask gt;
};

LoadedInstance load_instance(const DatasetDir& ds, const DatasetEntry& e) {
    const auto it = ds.ground_truth.find(e.image_id);
    if (it == ds.ground_truth.end()) throw ParseError(e.image_id, "no ground truth for this image");
    return {load_grid(e.coarse.string()), load_grid(e.features.string()), rle_decode(it->second.mask)};
}

void cmd_train_head(const TrainHeadOptions& o, RunManifest manifest) {
    const DatasetDir ds = load_dataset(o.data);
    manifest.add_input("data", o.data);
    StagedOutput out(o.out, o.force);

    std::vector<LoadedInstance> loaded;
    for (const DatasetEntry* e : select_split(ds, o.split)) loaded.push_back(load_instance(ds, *e));
    std::vector<TrainingInstance> instances;
    for (const LoadedInstance& l : loaded) instances.push_back({&l.coarse, &l.features, &l.gt});

    HeadTrainingConfig cfg;
    cfg.layout.hidden = o.hidden;
    if (!loaded.empty()) {
        cfg.layout.coarse_dim = loaded.front().coarse.channels();
        cfg.layout.fine_dim = loaded.front().features.channels();
    }
    cfg.points_per_instance = o.points_per_instance;
    cfg.oversample_factor = o.oversample;
    cfg.importance_ratio = o.importance;
    cfg.train.learning_rate = o.lr;
    cfg.train.batch_size = o.batch;
    cfg.train.steps = o.steps;
    cfg.train.rng_seed = mix_seed(o.seed ^ 0x747261696e6572ULL);
    cfg.trajectory_rounds = o.trajectory_rounds;
    cfg.render = render_config(o.subdivision_steps.value_or(dataset_coarse_steps(ds)), o.points);
    cfg.rng_seed = o.seed;
    try {
        cfg.train.validate();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }

    std::string csv = "step,loss\n";
    const HeadTrainingResult r = train_point_head(instances, cfg, [&](std::size_t step, double loss) {
        char line[64];
        std::snprintf(line, sizeof line, "%zu,%.17g\n", step, loss);
        csv += line;
    });
    save_point_head(r.head, (out / "head.srph").string());
    write_text(out / "loss.csv", csv);
    write_json(out / "training.json", {{"instances", instances.size()},
                                       {"training_points", r.training_points},
                                       {"steps", r.losses.size()},
                                       {"initial_probe_loss", r.initial_probe_loss},
                                       {"final_probe_loss", r.final_probe_loss}});
    manifest.write(out);
    out.commit();
    std::printf("trained on %zu instances, %zu points: probe loss %.6f -> %.6f\n", instances.size(),
                r.training_points, r.initial_probe_loss, r.final_probe_loss);
}

// ---- refine

struct RefineOptions {
    fs::path data;
    fs::path head;
    fs::path out;
    std::string split = "test";
    std::optional<std::size_t> subdivision_steps;
    std::optional<std::size_t> points;
    double threshold = 0.5;
    bool force = false;
};

void cmd_refine(const RefineOptions& o, RunManifest manifest) {
    const DatasetDir ds = load_dataset(o.data);
    const PointHeadParams head = load_point_head(o.head.string());
    manifest.add_input("data", o.data);
    manifest.add_input("head", o.head);
    RenderConfig rc = render_config(o.subdivision_steps.value_or(dataset_coarse_steps(ds)), o.points);
    rc.binarize_threshold = o.threshold;
    if (!(o.threshold > 0.0 && o.threshold < 1.0)) throw UsageError("--threshold must lie in (0, 1)");
    StagedOutput out(o.out, o.force);

    std::vector<MaskInstance> preds;
    for (const DatasetEntry* e : select_split(ds, o.split)) {
        const Grid2D coarse = load_grid(e->coarse.string());
        const Grid2D features = load_grid(e->features.string());
        if (head.layout().coarse_dim != coarse.channels() || head.layout().fine_dim != features.channels()) {
            throw ConfigError("head expects " + std::to_string(head.layout().coarse_dim) + "+" +
                              std::to_string(head.layout().fine_dim) + " inputs but " + e->image_id + " provides " +
                              std::to_string(coarse.channels()) + "+" + std::to_string(features.channels()));
        }
        const std::size_t f = std::size_t{1} << rc.subdivision_steps;
        if (coarse.height() * f != features.height() || coarse.width() * f != features.width()) {
            throw ConfigError(e->image_id + ": coarse grid " + std::to_string(coarse.height()) + "x" +
                              std::to_string(coarse.width()) + " refined " + std::to_string(rc.subdivision_steps) +
                              " times does not match features " + std::to_string(features.height()) + "x" +
                              std::to_string(features.width()));
        }
        const Grid2D logits = refine(coarse, features, head, rc);
        const DenseMask mask = binarize(logits, o.threshold);
        // Mask score: mean foreground probability over the predicted mask.
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t k = 0; k < mask.pixels.size(); ++k) {
            if (!mask.pixels[k]) continue;
            sum += 1.0 / (1.0 + std::exp(-logits.values()[k]));
            ++n;
        }
        preds.push_back(make_instance(e->image_id, e->class_id, n ? sum / static_cast<double>(n) : 0.0, rle_encode(mask)));
    }
    save_predictions((out / "predictions.json").string(), preds);
    manifest.write(out);
    out.commit();
    std::printf("refined %zu instances into %s\n", preds.size(), (o.out / "predictions.json").c_str());
}

// ---- eval

struct EvalOptions {
    fs::path pred;
    fs::path gt;
    fs::path out;
    std::string mode = "both";
    std::optional<std::size_t> max_dets;
    bool skip_unknown = false;
    std::string class_key = "class";
    bool force = false;
};

void cmd_eval(const EvalOptions& o, RunManifest manifest) {
    std::vector<EvalMode> modes;
    if (o.mode == "both") {
        modes = {EvalMode::bbox, EvalMode::segmentation};
    } else if (const auto m = parse_mode(o.mode)) {
        modes = {*m};
    } else {
        throw UsageError("--mode must be bbox, segm or both");
    }
    std::vector<std::string> warnings;
    const std::vector<MaskInstance> preds = load_predictions(o.pred.string(), !o.skip_unknown, &warnings);
    const std::vector<MaskInstance> gts = load_ground_truth(o.gt, o.class_key, !o.skip_unknown, warnings);
    manifest.add_input("pred", o.pred);
    manifest.add_input("gt", fs::is_directory(o.gt) ? o.gt / kGroundTruth : o.gt);
    StagedOutput out(o.out, o.force);

    json reports = json::object();
    std::optional<ReportSummary> bbox, segm;
    for (EvalMode mode : modes) {
        EvalConfig ec;
        ec.mode = mode;
        ec.max_detections = o.max_dets;
        ec.strict = !o.skip_unknown;
        const APReport r = evaluate(preds, gts, ec);
        const json j = report_to_json(r);
        const std::string name(mode_name(mode));
        reports[name] = j;
        (mode == EvalMode::bbox ? bbox : segm) = summary_from_json(j, name);
        warnings.insert(warnings.end(), r.warnings.begin(), r.warnings.end());
    }
    const std::string tables = format_class_table(bbox ? &*bbox : nullptr, segm ? &*segm : nullptr) + "\n" +
                               format_threshold_table(bbox ? &*bbox : nullptr, segm ? &*segm : nullptr);
    write_json(out / "report.json", {{"version", 1}, {"reports", reports}, {"warnings", warnings}});
    write_text(out / "tables.txt", tables);
    manifest.write(out);
    out.commit();
    for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::fputs(tables.c_str(), stdout);
}

// ---- stats

struct StatsOptions {
    fs::path pred;
    fs::path out;
    double min_score = 0.5;
    bool skip_unknown = false;
    bool force = false;
};

void cmd_stats(const StatsOptions& o, RunManifest manifest) {
    std::vector<std::string> warnings;
    const fs::path file = fs::is_directory(o.pred) ? o.pred / kGroundTruth : o.pred;
    std::vector<MaskInstance> kept;
    for (MaskInstance& inst : load_predictions(file.string(), !o.skip_unknown, &warnings)) {
        if (inst.score >= o.min_score) kept.push_back(std::move(inst));
    }
    if (kept.empty()) throw InvalidInput("no instances with score >= " + std::to_string(o.min_score));
    manifest.add_input("pred", file);
    StagedOutput out(o.out, o.force);
    const std::vector<AreaStats> stats = area_statistics(kept);
    const std::string table = format_stats_table(stats);
    write_json(out / "stats.json", stats_to_json(stats));
    write_json(out / "boxplot.json", boxplot_to_json(boxplot_series(stats)));
    write_text(out / "stats.txt", table);
    manifest.write(out);
    out.commit();
    for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::fputs(table.c_str(), stdout);
}

// ---- report

struct ReportOptions {
    fs::path baseline;
    fs::path improved;
    std::optional<fs::path> out;
    bool force = false;
};

struct ModeSummaries {
    std::optional<ReportSummary> bbox;
    std::optional<ReportSummary> segm;
};

// Accepts the file `eval` writes ({"reports": {"bbox": ..., "segm": ...}})
// or a single report object carrying "mode".
ModeSummaries read_report(const fs::path& path) {
    const json doc = read_json_file(path.string());
    const std::string where = path.string();
    ModeSummaries s;
    if (doc.is_object() && doc.contains("reports")) {
        const json& r = doc.at("reports");
        if (!r.is_object()) throw ParseError(where + "/reports", "expected an object");
        if (r.contains("bbox")) s.bbox = summary_from_json(r.at("bbox"), where + "/reports/bbox");
        if (r.contains("segm")) s.segm = summary_from_json(r.at("segm"), where + "/reports/segm");
    } else if (doc.is_object() && doc.contains("mode") && doc.at("mode").is_string()) {
        const auto mode = parse_mode(doc.at("mode").get<std::string>());
        if (!mode) throw ParseError(where + "/mode", "expected bbox or segm");
        (*mode == EvalMode::bbox ? s.bbox : s.segm) = summary_from_json(doc, where);
    } else {
        throw ParseError(where, "expected an evaluation report");
    }
    return s;
}

void cmd_report(const ReportOptions& o, RunManifest manifest) {
    const ModeSummaries base = read_report(o.baseline);
    const ModeSummaries next = read_report(o.improved);
    std::vector<std::string> warnings;
    const auto ptr = [](const std::optional<ReportSummary>& s) { return s ? &*s : nullptr; };
    const std::string table =
        format_comparison(ptr(base.bbox), ptr(base.segm), ptr(next.bbox), ptr(next.segm), warnings);
    for (const std::string& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::fputs(table.c_str(), stdout);
    if (!o.out) return;
    manifest.add_input("baseline", o.baseline);
    manifest.add_input("improved", o.improved);
    StagedOutput out(*o.out, o.force);
    write_text(out / "comparison.txt", table);
    write_json(out / "warnings.json", warnings);
    manifest.write(out);
    out.commit();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point-based segmentation refinement, COCO-style evaluation and mask statistics"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file; flags take precedence");
    app.set_version_flag("--version", SEMIREND_VERSION);

    SynthOptions synth;
    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic line-space defect dataset");
    synth_cmd->add_option("--out", synth.out, "Output dataset directory")->required();
    tuning(synth_cmd, "total", synth.total, "Number of images, spread in reference proportions");
    tuning(synth_cmd, "image-size", synth.image_size, "Image side length in pixels");
    tuning(synth_cmd, "pitch", synth.pitch, "Line pitch in pixels");
    tuning(synth_cmd, "line-width", synth.line_width, "Line width in pixels");
    tuning(synth_cmd, "noise", synth.noise, "Gaussian noise sigma on the [0, 1] intensity scale");
    tuning(synth_cmd, "coarse-steps", synth.coarse_steps, "Coarse logits are image-size / 2^steps per side");
    tuning(synth_cmd, "label-smoothing", synth.label_smoothing, "Label smoothing of the coarse logits");
    tuning(synth_cmd, "coarse-noise", synth.coarse_noise, "Gaussian noise sigma added to coarse logits");
    tuning(synth_cmd, "seed", synth.seed, "Random seed");
    synth_cmd->add_flag("--force", synth.force, "Replace a non-empty output directory");

    TrainHeadOptions th;
    CLI::App* th_cmd = app.add_subcommand("train-head", "Train a point head on a synthetic dataset");
    th_cmd->add_option("--data", th.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    th_cmd->add_option("--out", th.out, "Output directory")->required();
    tuning(th_cmd, "split", th.split, "Split to train on (train, val, test or all)");
    tuning(th_cmd, "lr", th.lr, "SGD learning rate");
    tuning(th_cmd, "batch", th.batch, "Mini-batch size");
    tuning(th_cmd, "steps", th.steps, "SGD steps per round");
    tuning(th_cmd, "hidden", th.hidden, "Hidden layer widths")->delimiter(',');
    tuning(th_cmd, "points-per-instance", th.points_per_instance, "Training points sampled per instance");
    tuning(th_cmd, "oversample", th.oversample, "Candidate oversampling factor k");
    tuning(th_cmd, "importance", th.importance, "Fraction of points chosen by uncertainty");
    tuning(th_cmd, "trajectory-rounds", th.trajectory_rounds, "Extra rounds on points visited by refine");
    tuning(th_cmd, "subdivision-steps", th.subdivision_steps, "Subdivision steps (default: dataset coarse steps)");
    tuning(th_cmd, "points", th.points, "Points per subdivision step (default: width^2 / 16)");
    tuning(th_cmd, "seed", th.seed, "Random seed");
    th_cmd->add_flag("--force", th.force, "Replace a non-empty output directory");

    RefineOptions rf;
    CLI::App* rf_cmd = app.add_subcommand("refine", "Refine coarse masks with a trained point head");
    rf_cmd->add_option("--data", rf.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    rf_cmd->add_option("--head", rf.head, "Point head file")->required()->check(CLI::ExistingFile);
    rf_cmd->add_option("--out", rf.out, "Output directory")->required();
    tuning(rf_cmd, "split", rf.split, "Split to refine (train, val, test or all)");
    tuning(rf_cmd, "subdivision-steps", rf.subdivision_steps, "Subdivision steps (default: dataset coarse steps)");
    tuning(rf_cmd, "points", rf.points, "Points per subdivision step, 0 = bilinear baseline (default: width^2 / 16)");
    tuning(rf_cmd, "threshold", rf.threshold, "Foreground probability threshold");
    rf_cmd->add_flag("--force", rf.force, "Replace a non-empty output directory");

    EvalOptions ev;
    CLI::App* ev_cmd = app.add_subcommand("eval", "COCO-style AP of predictions against ground truth");
    ev_cmd->add_option("--pred", ev.pred, "Predictions JSON")->required()->check(CLI::ExistingFile);
    ev_cmd->add_option("--gt", ev.gt, "Dataset directory, VIA project or predictions-format JSON")
        ->required()
        ->check(CLI::ExistingPath);
    ev_cmd->add_option("--out", ev.out, "Output directory")->required();
    tuning(ev_cmd, "mode", ev.mode, "bbox, segm or both")->check(CLI::IsMember({"bbox", "segm", "both"}));
    tuning(ev_cmd, "max-dets", ev.max_dets, "Detections kept per image and class (default: all)");
    tuning(ev_cmd, "class-key", ev.class_key, "VIA region attribute holding the class name");
    ev_cmd->add_flag("--skip-unknown", ev.skip_unknown, "Skip unknown classes with a warning instead of failing");
    ev_cmd->add_flag("--force", ev.force, "Replace a non-empty output directory");

    StatsOptions st;
    CLI::App* st_cmd = app.add_subcommand("stats", "Per-class mask area statistics");
    st_cmd->add_option("--pred", st.pred, "Predictions JSON or dataset directory")->required()->check(CLI::ExistingPath);
    st_cmd->add_option("--out", st.out, "Output directory")->required();
    tuning(st_cmd, "min-score", st.min_score, "Ignore instances scoring below this");
    st_cmd->add_flag("--skip-unknown", st.skip_unknown, "Skip unknown classes with a warning instead of failing");
    st_cmd->add_flag("--force", st.force, "Replace a non-empty output directory");

    ReportOptions rp;
    CLI::App* rp_cmd = app.add_subcommand("report", "Compare two evaluation reports");
    rp_cmd->add_option("--baseline", rp.baseline, "Baseline report.json")->required()->check(CLI::ExistingFile);
    rp_cmd->add_option("--improved", rp.improved, "Improved report.json")->required()->check(CLI::ExistingFile);
    rp_cmd->add_option("--out", rp.out, "Optional output directory");
    rp_cmd->add_flag("--force", rp.force, "Replace a non-empty output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version requests exit 0; every other parse failure is a usage error.
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*synth_cmd) cmd_synth(synth, start_manifest(synth_cmd, argc, argv, synth.seed));
        if (*th_cmd) cmd_train_head(th, start_manifest(th_cmd, argc, argv, th.seed));
        if (*rf_cmd) cmd_refine(rf, start_manifest(rf_cmd, argc, argv, 0));
        if (*ev_cmd) cmd_eval(ev, start_manifest(ev_cmd, argc, argv, 0));
        if (*st_cmd) cmd_stats(st, start_manifest(st_cmd, argc, argv, 0));
        if (*rp_cmd) cmd_report(rp, start_manifest(rp_cmd, argc, argv, 0));
    } catch (const TrainingDiverged& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitDiverged;
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return 0;
}
