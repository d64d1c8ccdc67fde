#include "topdown/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace topdown {

std::string_view ensemble_mode_name(EnsembleMode m)
{
    switch (m) {
    case EnsembleMode::none: return "none";
    case EnsembleMode::average: return "average";
    case EnsembleMode::expert: return "expert";
    }
    return "none";
}

EnsembleMode ensemble_mode_from_name(std::string_view name)
{
    if (name == "none") return EnsembleMode::none;
    if (name == "average") return EnsembleMode::average;
    if (name == "expert") return EnsembleMode::expert;
    throw ParseError("unknown ensemble mode '" + std::string(name) + "'");
}

std::string_view sweep_axis_name(SweepAxis a)
{
    return a == SweepAxis::bbox_threshold ? "bbox_threshold" : "keypoint_threshold";
}

SweepAxis sweep_axis_from_name(std::string_view name)
{
    if (name == "bbox_threshold") return SweepAxis::bbox_threshold;
    if (name == "keypoint_threshold") return SweepAxis::keypoint_threshold;
    throw ParseError("unknown sweep axis '" + std::string(name) + "'");
}

void PipelineConfig::validate() const
{
    auto unit = [](double v, const char* what) {
        if (!(v >= 0.0 && v <= 1.0)) throw ContractError(std::string("config: ") + what + " outside [0,1]");
    };
    unit(candidate_threshold, "candidate_threshold");
    unit(nms_iou, "nms_iou");
    unit(detection_iou, "detection_iou");
    tracker.validate();
    if (!(pckh.factor > 0.0)) throw ContractError("config: pckh.factor must be positive");
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& doc)
{
    using nlohmann::json;
    if (!doc.is_object()) throw ParseError("config: expected object");
    PipelineConfig c;
    try {
        if (!doc.contains("schema")) throw ParseError("config: missing 'schema'");
        const int schema = doc.at("schema").get<int>();
        if (schema != kConfigSchema)
            throw ParseError("config: unsupported schema " + std::to_string(schema));
        if (doc.contains("candidate_threshold")) c.candidate_threshold = doc.at("candidate_threshold").get<double>();
        if (doc.contains("nms_iou")) c.nms_iou = doc.at("nms_iou").get<double>();
        if (doc.contains("detection_iou")) c.detection_iou = doc.at("detection_iou").get<double>();
        if (doc.contains("ensemble")) {
            const json& e = doc.at("ensemble");
            if (e.contains("mode")) c.ensemble = ensemble_mode_from_name(e.at("mode").get<std::string>());
            if (e.contains("expert_map")) c.expert_map = expert_map_from_json(e.at("expert_map"));
        }
        if (doc.contains("tracker")) c.tracker = tracker_config_from_json(doc.at("tracker"));
        if (doc.contains("keypoint_threshold"))
            c.tracker.keypoint_drop_threshold = doc.at("keypoint_threshold").get<double>();
        if (doc.contains("pckh")) c.pckh = pckh_from_json(doc.at("pckh"));
        if (doc.contains("inputs")) {
            const json& in = doc.at("inputs");
            c.detections = in.value("detections", "");
            c.second_model = in.value("second_model", "");
            c.ground_truth = in.value("ground_truth", "");
        }
        if (doc.contains("output")) c.output = doc.at("output").get<std::string>();
        if (doc.contains("synth")) c.synth = synth_spec_from_json(doc.at("synth"));
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    try {
        c.validate();
    } catch (const ContractError& e) {
        throw ParseError(e.what());
    }
    return c;
}

nlohmann::json pipeline_config_to_json(const PipelineConfig& c)
{
    nlohmann::json doc = {
        {"schema", kConfigSchema},
        {"candidate_threshold", c.candidate_threshold},
        {"nms_iou", c.nms_iou},
        {"detection_iou", c.detection_iou},
        {"ensemble", {{"mode", ensemble_mode_name(c.ensemble)}, {"expert_map", expert_map_to_json(c.expert_map)}}},
        {"tracker", tracker_config_to_json(c.tracker)},
        {"pckh", pckh_to_json(c.pckh)},
        {"inputs", {{"detections", c.detections}, {"second_model", c.second_model}, {"ground_truth", c.ground_truth}}},
        {"output", c.output}};
    if (c.synth) doc["synth"] = synth_spec_to_json(*c.synth);
    return doc;
}

std::vector<BBox> ground_truth_boxes(const Frame& frame)
{
    std::vector<BBox> boxes;
    for (const Pose& p : frame.poses)
        if (p.present_count() >= 2) boxes.push_back(bbox_from_keypoints(p));
    return boxes;
}

namespace {

const Sequence* find_by_name(std::span<const Sequence> seqs, const std::string& name)
{
    for (const Sequence& s : seqs)
        if (s.name == name) return &s;
    return nullptr;
}

Frame select_frame(const Frame& frame, const Frame* second, const PipelineConfig& c)
{
    std::vector<Pose> boxed = frame.poses;
    for (Pose& p : boxed)
        if (!p.bbox) p.bbox = bbox_from_keypoints(p);

    std::vector<std::size_t> candidates;
    std::vector<Pose> kept_poses;
    for (std::size_t i = 0; i < boxed.size(); ++i)
        if (boxed[i].det_score >= c.candidate_threshold) {
            candidates.push_back(i);
            kept_poses.push_back(boxed[i]);
        }

    Frame out{frame.index, frame.width, frame.height, {}};
    for (std::size_t k : nms_indices(kept_poses, c.nms_iou)) {
        const std::size_t i = candidates[k];
        const Pose& a = boxed[i];
        switch (c.ensemble) {
        case EnsembleMode::none: out.poses.push_back(a); break;
        case EnsembleMode::average: out.poses.push_back(fuse_average(a, second->poses[i])); break;
        case EnsembleMode::expert: out.poses.push_back(fuse_expert(a, second->poses[i], c.expert_map)); break;
        }
    }
    return out;
}

} // namespace

RunResult run_pipeline(std::span<const Sequence> detections, std::span<const Sequence> ground_truth,
                       const PipelineConfig& config, std::span<const Sequence> second)
{
    config.validate();
    RunResult r;
    std::vector<Sequence> unpruned;
    std::size_t tp = 0, fp = 0, fn = 0;

    for (const Sequence& det : detections) {
        const Sequence* other = nullptr;
        if (config.ensemble != EnsembleMode::none) {
            other = find_by_name(second, det.name);
            if (!other) throw ContractError("ensemble: no second-model sequence '" + det.name + "'");
            if (other->frames.size() != det.frames.size())
                throw ContractError("ensemble: frame count mismatch in '" + det.name + "'");
        }
        const Sequence* gt = find_by_name(ground_truth, det.name);

        Sequence selected{det.name, {}};
        for (std::size_t f = 0; f < det.frames.size(); ++f) {
            const Frame* other_frame = nullptr;
            if (other) {
                other_frame = &other->frames[f];
                if (other_frame->index != det.frames[f].index ||
                    other_frame->poses.size() != det.frames[f].poses.size())
                    throw ContractError("ensemble: candidates differ in '" + det.name + "' frame " +
                                        std::to_string(det.frames[f].index));
            }
            selected.frames.push_back(select_frame(det.frames[f], other_frame, config));

            if (gt && f < gt->frames.size()) {
                std::vector<BBox> boxes;
                for (const Pose& p : selected.frames.back().poses) boxes.push_back(*p.bbox);
                const PRResult pr = detection_pr(boxes, ground_truth_boxes(gt->frames[f]), config.detection_iou);
                tp += pr.tp;
                fp += pr.fp;
                fn += pr.fn;
            }
        }
        Sequence tracked = track_sequence(selected, config.tracker);
        unpruned.push_back(tracked);
        r.tracked.push_back(prune_keypoints(tracked, config.tracker.keypoint_drop_threshold));
    }

    r.detection = PRResult::from_counts(tp, fp, fn);
    bool any_keypoint = false;
    for (const Sequence& s : unpruned)
        for (const Frame& f : s.frames)
            for (const Pose& p : f.poses) any_keypoint = any_keypoint || p.present_count() > 0;
    if (any_keypoint) r.retention = retention_stats(unpruned, config.tracker.keypoint_drop_threshold);
    r.ap = evaluate_ap(r.tracked, ground_truth, config.pckh);
    r.mot = evaluate_mot(r.tracked, ground_truth, config.pckh);
    return r;
}

std::vector<SweepRow> run_sweep(std::span<const Sequence> detections, std::span<const Sequence> ground_truth,
                                const PipelineConfig& config, SweepAxis axis, std::span<const double> values,
                                unsigned jobs, std::span<const Sequence> second)
{
    if (values.size() < 2) throw ContractError("sweep: need at least two values");
    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < values.size(); i = next++) {
            try {
                PipelineConfig c = config;
                if (axis == SweepAxis::bbox_threshold)
                    c.candidate_threshold = values[i];
                else
                    c.tracker.keypoint_drop_threshold = values[i];
                const RunResult r = run_pipeline(detections, ground_truth, c, second);
                rows[i] = {values[i], r.ap.total, r.mot.total_mota, r.detection.precision, r.detection.recall};
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };

    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(values.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return rows;
}

namespace {

std::string fmt(double v, const char* spec = "%.2f")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

} // namespace

std::string sweep_csv(std::span<const SweepRow> rows, SweepAxis axis)
{
    std::string out = axis == SweepAxis::keypoint_threshold ? "Threshold,AP,MOTA\n" : "Threshold,Precision,Recall\n";
    for (const SweepRow& r : rows) {
        out += fmt(r.value, "%g") + ",";
        if (axis == SweepAxis::keypoint_threshold)
            out += fmt(r.ap_total) + "," + fmt(r.mota_total) + "\n";
        else
            out += fmt(100.0 * r.precision) + "," + fmt(100.0 * r.recall) + "\n";
    }
    return out;
}

nlohmann::json sweep_json(std::span<const SweepRow> rows, SweepAxis axis)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const SweepRow& r : rows)
        arr.push_back({{"value", r.value},
                       {"AP", r.ap_total},
                       {"MOTA", r.mota_total},
                       {"precision", 100.0 * r.precision},
                       {"recall", 100.0 * r.recall}});
    return {{"axis", sweep_axis_name(axis)}, {"rows", arr}};
}

nlohmann::json retention_json(const RetentionTable& t)
{
    nlohmann::json groups = nlohmann::json::object();
    for (EvalGroup g : kAllGroups) groups[std::string(group_label(g))] = t.group[index(g)];
    return {{"retained", groups}, {"Total", t.total}};
}

nlohmann::json run_report_json(const RunResult& r)
{
    return {{"ap", ap_report_json(r.ap)},
            {"mot", mot_report_json(r.mot)},
            {"detection",
             {{"precision", 100.0 * r.detection.precision},
              {"recall", 100.0 * r.detection.recall},
              {"tp", r.detection.tp},
              {"fp", r.detection.fp},
              {"fn", r.detection.fn}}},
            {"retention", retention_json(r.retention)}};
}

std::vector<SynthOutput> generate_set(const SynthSpec& spec, int count)
{
    std::vector<SynthOutput> out;
    for (int i = 0; i < count; ++i) {
        SynthSpec s = spec;
        s.seed = spec.seed + static_cast<std::uint64_t>(i);
        s.name = spec.name + "-" + std::to_string(i);
        out.push_back(generate(s));
    }
    return out;
}

} // namespace topdown
