#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "topdown/ensemble.hpp"
#include "topdown/geometry.hpp"
#include "topdown/metrics.hpp"
#include "topdown/synth.hpp"
#include "topdown/tracker.hpp"

namespace topdown {

enum class EnsembleMode { none, average, expert };

std::string_view ensemble_mode_name(EnsembleMode m);
EnsembleMode ensemble_mode_from_name(std::string_view name);

inline constexpr int kConfigSchema = 1;

struct PipelineConfig {
    /// Candidates with det_score below this are dropped before NMS.
    double candidate_threshold{0.4};
    /// NMS IoU threshold; 1.0 disables suppression.
    double nms_iou{0.5};
    /// IoU at which a detection box counts as correct for precision/recall.
    double detection_iou{kDetectionIouThreshold};
    EnsembleMode ensemble{EnsembleMode::none};
    ExpertMap expert_map{ExpertMap::defaults()};
    TrackerConfig tracker;
    PckhThreshold pckh;

    // Paths, resolved by the CLI. Empty means "not given".
    std::string detections;
    std::string second_model;
    std::string ground_truth;
    std::string output;
    std::optional<SynthSpec> synth;

    void validate() const;
};

/// Parses a config document ({"schema": 1, ...}). Unknown schema versions are rejected.
PipelineConfig pipeline_config_from_json(const nlohmann::json& doc);
nlohmann::json pipeline_config_to_json(const PipelineConfig& c);

struct RunResult {
    std::vector<Sequence> tracked;
    ApReport ap;
    MotReport mot;
    PRResult detection;
    RetentionTable retention;
};

/// prune_candidates -> NMS -> optional ensemble -> tracking -> keypoint
/// pruning -> AP and MOT evaluation. `second` holds the other model's
/// predictions for the same candidates (same frames, same pose order) and is
/// required when the ensemble mode is not none.
RunResult run_pipeline(std::span<const Sequence> detections, std::span<const Sequence> ground_truth,
                       const PipelineConfig& config, std::span<const Sequence> second = {});

enum class SweepAxis { bbox_threshold, keypoint_threshold };

std::string_view sweep_axis_name(SweepAxis a);
SweepAxis sweep_axis_from_name(std::string_view name);

struct SweepRow {
    double value{0.0};
    double ap_total{0.0};
    double mota_total{0.0};
    double precision{0.0};
    double recall{0.0};
};

/// One pipeline run per value, evaluated in parallel on up to `jobs` threads.
/// Rows come back in the order of `values`.
std::vector<SweepRow> run_sweep(std::span<const Sequence> detections, std::span<const Sequence> ground_truth,
                                const PipelineConfig& config, SweepAxis axis, std::span<const double> values,
                                unsigned jobs = 1, std::span<const Sequence> second = {});

/// Table layout for the axis: Threshold,AP,MOTA or Threshold,Precision,Recall.
std::string sweep_csv(std::span<const SweepRow> rows, SweepAxis axis);
nlohmann::json sweep_json(std::span<const SweepRow> rows, SweepAxis axis);

nlohmann::json run_report_json(const RunResult& r);
nlohmann::json retention_json(const RetentionTable& t);

/// Ground-truth boxes for detection scoring: inferred from keypoints, 20% enlarged.
std::vector<BBox> ground_truth_boxes(const Frame& frame);

/// Generates `count` sequences from one spec, seeds spec.seed, spec.seed+1, ...
/// and names "<name>-<i>".
std::vector<SynthOutput> generate_set(const SynthSpec& spec, int count);

} // namespace topdown
