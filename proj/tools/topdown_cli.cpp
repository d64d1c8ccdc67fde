// topdown: command-line front end for the pose-tracking pipeline.
//
// Exit codes: 0 success, 1 usage, 2 parse or I/O failure, 3 contract violation.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "topdown/ensemble.hpp"
#include "topdown/geometry.hpp"
#include "topdown/heatmap.hpp"
#include "topdown/metrics.hpp"
#include "topdown/pipeline.hpp"
#include "topdown/sequence_io.hpp"
#include "topdown/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace topdown;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kParse = 2, kContract = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string out;
    unsigned jobs{1};
    std::optional<std::uint64_t> seed;

    // run / sweep
    std::string det, gt, second;
    std::optional<double> bbox_threshold, keypoint_threshold, nms_iou;
    std::string ensemble, method;
    int sequences{1};
    std::string axis;
    std::vector<double> values;

    // synth
    std::string preset;

    // eval
    std::string pred;
    std::string mode{"ap"};

    // decode
    std::string heatmaps;
    double radius{0.0};
    bool no_refine{false};

    // bbox-infer / ensemble
    std::string input;
    double enlarge{kDefaultEnlarge};
    std::string model_a, model_b;
};

json read_json(const std::string& path)
{
    const std::string text = read_text_file(path);
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ParseError("'" + path + "': malformed JSON");
    return doc;
}

std::vector<Sequence> read_sequences(const std::string& path)
{
    const std::string text = read_text_file(path);
    try {
        return load_sequences(text);
    } catch (const ParseError& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
}

// Flags override config file values, which override built-in defaults.
PipelineConfig resolve_config(const Options& o)
{
    PipelineConfig c;
    if (!o.config.empty()) c = pipeline_config_from_json(read_json(o.config));
    if (!o.det.empty()) c.detections = o.det;
    if (!o.gt.empty()) c.ground_truth = o.gt;
    if (!o.second.empty()) c.second_model = o.second;
    if (!o.out.empty()) c.output = o.out;
    if (o.bbox_threshold) c.candidate_threshold = *o.bbox_threshold;
    if (o.keypoint_threshold) c.tracker.keypoint_drop_threshold = *o.keypoint_threshold;
    if (o.nms_iou) c.nms_iou = *o.nms_iou;
    if (!o.ensemble.empty()) c.ensemble = ensemble_mode_from_name(o.ensemble);
    if (!o.method.empty()) c.tracker.method = method_from_name(o.method);
    if (o.seed && c.synth) c.synth->seed = *o.seed;
    c.validate();
    return c;
}

struct Inputs {
    std::vector<Sequence> det, gt, second;
};

Inputs load_inputs(const PipelineConfig& c, int sequences)
{
    Inputs in;
    if (!c.detections.empty() || !c.ground_truth.empty()) {
        if (c.detections.empty() || c.ground_truth.empty())
            throw UsageError("both detections and ground truth are required");
        in.det = read_sequences(c.detections);
        in.gt = read_sequences(c.ground_truth);
    } else if (c.synth) {
        spdlog::info("generating {} synthetic sequence(s) from config", sequences);
        for (SynthOutput& s : generate_set(*c.synth, sequences)) {
            in.det.push_back(std::move(s.det));
            in.gt.push_back(std::move(s.gt));
        }
    } else {
        throw UsageError("no inputs: pass --det and --gt, or a config with a synth section");
    }
    if (c.ensemble != EnsembleMode::none) {
        if (c.second_model.empty()) throw UsageError("ensemble mode needs --second");
        in.second = read_sequences(c.second_model);
    }
    return in;
}

// Either everything is written or nothing is.
void emit(const std::string& out_dir, const std::vector<std::pair<std::string, std::string>>& files,
          const std::string& stdout_key)
{
    if (out_dir.empty()) {
        for (const auto& [name, body] : files)
            if (name == stdout_key) std::cout << body << (body.ends_with('\n') ? "" : "\n");
        return;
    }
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ParseError("cannot create '" + out_dir + "': " + ec.message());
    for (const auto& [name, body] : files) {
        write_file_atomic(fs::path(out_dir) / name, body);
        spdlog::info("wrote {}", (fs::path(out_dir) / name).string());
    }
}

int cmd_run(const Options& o)
{
    const PipelineConfig c = resolve_config(o);
    const Inputs in = load_inputs(c, o.sequences);
    const RunResult r = run_pipeline(in.det, in.gt, c, in.second);
    spdlog::info("AP total {:.2f}, MOTA total {:.2f}", r.ap.total, r.mot.total_mota);
    emit(c.output,
         {{"report.json", run_report_json(r).dump(2)},
          {"ap.csv", ap_report_csv(r.ap)},
          {"mot.csv", mot_report_csv(r.mot)},
          {"tracked.json", save_predictions(r.tracked)}},
         "report.json");
    return kOk;
}

int cmd_sweep(const Options& o)
{
    if (o.values.size() < 2) throw UsageError("sweep needs at least two --values");
    const SweepAxis axis = sweep_axis_from_name(o.axis);
    const PipelineConfig c = resolve_config(o);
    const Inputs in = load_inputs(c, o.sequences);
    const auto rows = run_sweep(in.det, in.gt, c, axis, o.values, o.jobs, in.second);
    emit(c.output, {{"sweep.csv", sweep_csv(rows, axis)}, {"sweep.json", sweep_json(rows, axis).dump(2)}},
         "sweep.csv");
    return kOk;
}

int cmd_synth(const Options& o)
{
    SynthSpec spec;
    if (o.preset == "calibrated")
        spec = SynthSpec::posetrack_calibrated();
    else if (o.preset == "noiseless" || o.preset.empty())
        spec = SynthSpec::noiseless();
    else
        throw UsageError("unknown preset '" + o.preset + "'");
    if (!o.config.empty()) {
        const json doc = read_json(o.config);
        spec = synth_spec_from_json(doc.contains("schema") ? doc.value("synth", json::object()) : doc, spec);
    }
    if (o.seed) spec.seed = *o.seed;

    json gt = json::array(), det = json::array(), prov = json::array();
    for (const SynthOutput& s : generate_set(spec, o.sequences)) {
        gt.push_back(sequence_to_json(s.gt));
        det.push_back(sequence_to_json(s.det));
        prov.push_back(provenance_to_json(s));
    }
    emit(o.out,
         {{"gt.json", gt.dump()}, {"det.json", det.dump()}, {"provenance.json", prov.dump()},
          {"spec.json", synth_spec_to_json(spec).dump(2)}},
         "det.json");
    return kOk;
}

int cmd_eval(const Options& o)
{
    PckhThreshold t;
    if (!o.config.empty()) t = pipeline_config_from_json(read_json(o.config)).pckh;
    const auto pred = read_sequences(o.pred);
    const auto gt = read_sequences(o.gt);
    if (o.mode == "ap") {
        const ApReport r = evaluate_ap(pred, gt, t);
        emit(o.out, {{"ap.json", ap_report_json(r).dump(2)}, {"ap.csv", ap_report_csv(r)}}, "ap.json");
    } else if (o.mode == "mot") {
        const MotReport r = evaluate_mot(pred, gt, t);
        emit(o.out, {{"mot.json", mot_report_json(r).dump(2)}, {"mot.csv", mot_report_csv(r)}}, "mot.json");
    } else {
        throw UsageError("--mode must be ap or mot");
    }
    return kOk;
}

int cmd_decode(const Options& o)
{
    const HeatmapStack stack = load_heatmap_stack(read_text_file(o.heatmaps));
    const PoseNmsResult r = cross_heatmap_nms(stack, o.radius, !o.no_refine);
    json kps = json::array();
    for (const Keypoint& kp : r.keypoints)
        kps.push_back({{"joint", joint_name(kp.joint)},
                       {"x", kp.position.x()},
                       {"y", kp.position.y()},
                       {"confidence", kp.confidence},
                       {"present", kp.present},
                       {"fallback", r.fallback[index(kp.joint)]}});
    emit(o.out, {{"keypoints.json", json{{"keypoints", kps}}.dump(2)}}, "keypoints.json");
    return kOk;
}

int cmd_bbox_infer(const Options& o)
{
    auto seqs = read_sequences(o.input);
    for (Sequence& s : seqs)
        for (Frame& f : s.frames)
            for (Pose& p : f.poses) p.bbox = bbox_from_keypoints(p, o.enlarge);
    emit(o.out, {{"boxes.json", save_predictions(seqs)}}, "boxes.json");
    return kOk;
}

int cmd_ensemble(const Options& o)
{
    ExpertMap map = ExpertMap::defaults();
    if (!o.config.empty()) map = pipeline_config_from_json(read_json(o.config)).expert_map;
    const EnsembleMode mode = ensemble_mode_from_name(o.mode);
    if (mode == EnsembleMode::none) throw UsageError("--mode must be average or expert");
    auto a = read_sequences(o.model_a);
    const auto b = read_sequences(o.model_b);
    if (a.size() != b.size()) throw ContractError("ensemble: sequence counts differ");
    for (std::size_t s = 0; s < a.size(); ++s) {
        if (a[s].name != b[s].name || a[s].frames.size() != b[s].frames.size())
            throw ContractError("ensemble: sequence '" + a[s].name + "' does not line up");
        for (std::size_t f = 0; f < a[s].frames.size(); ++f) {
            auto& pa = a[s].frames[f].poses;
            const auto& pb = b[s].frames[f].poses;
            if (pa.size() != pb.size()) throw ContractError("ensemble: candidate counts differ");
            for (std::size_t i = 0; i < pa.size(); ++i)
                pa[i] = mode == EnsembleMode::average ? fuse_average(pa[i], pb[i])
                                                      : fuse_expert(pa[i], pb[i], map);
        }
    }
    emit(o.out, {{"fused.json", save_predictions(a)}}, "fused.json");
    return kOk;
}

void setup_logging()
{
    auto logger = spdlog::stderr_color_mt("topdown");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* lvl = std::getenv("TOPDOWN_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));
}

} // namespace

int main(int argc, char** argv)
{
    setup_logging();
    Options o;
    CLI::App app{"Top-down pose tracking pipeline and evaluation harness"};
    app.require_subcommand(1);

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON config file");
        sub->add_option("--out", o.out, "Output directory (stdout when omitted)");
        sub->add_option("--jobs", o.jobs, "Parallel workers")->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "Override the synthetic seed");
    };
    auto pipeline_flags = [&](CLI::App* sub) {
        sub->add_option("--det", o.det, "Detections file");
        sub->add_option("--gt", o.gt, "Ground-truth file");
        sub->add_option("--second", o.second, "Second-model predictions for ensembling");
        sub->add_option("--bbox-threshold", o.bbox_threshold, "Candidate drop threshold")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--keypoint-threshold", o.keypoint_threshold, "Keypoint drop threshold")
            ->check(CLI::Range(0.0, 1.0));
        sub->add_option("--nms-iou", o.nms_iou, "NMS IoU threshold")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--ensemble", o.ensemble, "none | average | expert");
        sub->add_option("--method", o.method, "hungarian | greedy");
        sub->add_option("--sequences", o.sequences, "Synthetic sequences to generate")->check(CLI::PositiveNumber);
    };

    auto* run = app.add_subcommand("run", "Run the full pipeline and write reports");
    common(run);
    pipeline_flags(run);

    auto* sweep = app.add_subcommand("sweep", "Sweep a threshold and tabulate the results");
    common(sweep);
    pipeline_flags(sweep);
    sweep->add_option("--axis", o.axis, "bbox_threshold | keypoint_threshold")->required();
    sweep->add_option("--values", o.values, "Threshold values")->delimiter(',')->required();

    auto* synth = app.add_subcommand("synth", "Generate synthetic sequences");
    common(synth);
    synth->add_option("--preset", o.preset, "noiseless | calibrated");
    synth->add_option("--sequences", o.sequences, "Number of sequences")->check(CLI::PositiveNumber);

    auto* eval = app.add_subcommand("eval", "Score predictions against ground truth");
    common(eval);
    eval->add_option("--pred", o.pred, "Predictions file")->required();
    eval->add_option("--gt", o.gt, "Ground-truth file")->required();
    eval->add_option("--mode", o.mode, "ap | mot");

    auto* decode = app.add_subcommand("decode", "Decode a heatmap fixture with cross-heatmap NMS");
    common(decode);
    decode->add_option("--heatmaps", o.heatmaps, "Heatmap fixture")->required();
    decode->add_option("--radius", o.radius, "Suppression radius in pixels")->check(CLI::NonNegativeNumber);
    decode->add_flag("--no-refine", o.no_refine, "Disable quarter-cell refinement");

    auto* bbox = app.add_subcommand("bbox-infer", "Infer boxes from keypoints");
    common(bbox);
    bbox->add_option("--input", o.input, "Sequence file")->required();
    bbox->add_option("--enlarge", o.enlarge, "Relative growth of width and height");

    auto* ens = app.add_subcommand("ensemble", "Fuse two models' predictions");
    common(ens);
    ens->add_option("--a", o.model_a, "Model A predictions")->required();
    ens->add_option("--b", o.model_b, "Model B predictions")->required();
    ens->add_option("--mode", o.mode, "average | expert")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*run) return cmd_run(o);
        if (*sweep) return cmd_sweep(o);
        if (*synth) return cmd_synth(o);
        if (*eval) return cmd_eval(o);
        if (*decode) return cmd_decode(o);
        if (*bbox) return cmd_bbox_infer(o);
        if (*ens) return cmd_ensemble(o);
    } catch (const UsageError& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const ParseError& e) {
        spdlog::error("{}", e.what());
        return kParse;
    } catch (const ContractError& e) {
        spdlog::error("{}", e.what());
        return kContract;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kContract;
    }
    return kUsage;
}
