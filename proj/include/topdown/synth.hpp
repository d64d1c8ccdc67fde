#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "topdown/model.hpp"

namespace topdown {

enum class Trajectory { linear, sinusoidal };

/// Normal draw clamped to [0, 1]. spread == 0 gives a point mass.
struct ConfidenceModel {
    double mean{1.0};
    double spread{0.0};
};

/// Confidence model for correctly localised keypoints of one group, plus the
/// rate at which that group's keypoints are mislocalised instead.
struct GroupConfidence {
    double mean{1.0};
    double spread{0.0};
    double outlier_rate{0.0};
};

/// Frames [first_frame, last_frame] in which a person is fully hidden: absent
/// from both ground truth and detections.
struct OcclusionInterval {
    int person{0};
    int first_frame{0};
    int last_frame{0};
};

struct SynthSpec {
    std::string name{"synth"};
    int n_persons{4};
    int n_frames{30};
    int width{1280};
    int height{720};

    Trajectory trajectory{Trajectory::linear};
    /// Mean speed in px/frame; each person draws a direction and a factor in [0.5, 1.5].
    double speed{3.0};
    /// Optional explicit per-person start centres and velocities. When given
    /// they replace the cell layout and people move freely (no confinement).
    std::vector<Eigen::Vector2d> starts;
    std::vector<Eigen::Vector2d> velocities;
    /// Person height in pixels (head top to ankle).
    double scale{120.0};

    std::array<GroupConfidence, kNumGroups> confidence{};
    /// Confidence of mislocalised keypoints and of every false-pose keypoint.
    ConfidenceModel outlier_confidence{0.55, 0.20};
    /// Mislocalised keypoints move by a uniform multiple of the head size in this range.
    double outlier_min_offset{1.0};
    double outlier_max_offset{2.0};

    ConfidenceModel det_score{1.0, 0.0};
    ConfidenceModel fp_det_score{0.3, 0.2};

    /// Std-dev in pixels of keypoint and box-corner noise.
    double jitter{0.0};
    double p_miss{0.0};
    /// Expected false poses per frame (Poisson).
    double fp_rate{0.0};
    std::vector<OcclusionInterval> occlusions;
    std::uint64_t seed{0};

    void validate() const;

    /// Zero-noise spec: detections equal ground truth with unit confidences.
    static SynthSpec noiseless();

    /// Confidence model fitted to PoseTrack 2018 keypoint retention rates,
    /// with the detection noise used by the sensitivity benchmarks.
    static SynthSpec posetrack_calibrated();
};

SynthSpec synth_spec_from_json(const nlohmann::json& doc, SynthSpec base = {});
nlohmann::json synth_spec_to_json(const SynthSpec& spec);

/// Where a detected pose came from.
struct DetectionSource {
    /// Ground-truth track id, or nullopt for an injected false pose.
    std::optional<int> gt_id;
    /// Joints moved away from their true location.
    std::array<bool, kNumJoints> outlier{};
};

struct SynthOutput {
    Sequence gt;
    Sequence det;
    /// Parallel to det: provenance[f][p] describes det.frames[f].poses[p].
    std::vector<std::vector<DetectionSource>> provenance;
};

/// Canonical 15-joint stick figure, unit height, origin at the body centre, y down.
const std::array<Eigen::Vector2d, kNumJoints>& skeleton_template();

/// Deterministic in the spec (seed included).
SynthOutput generate(const SynthSpec& spec);

nlohmann::json provenance_to_json(const SynthOutput& out);

struct KeypointCounts {
    std::size_t tp{0};
    std::size_t fp{0};
    std::size_t fn{0};

    bool operator==(const KeypointCounts&) const = default;
};

/// Expected keypoint-level TP/FP/FN after pruning at drop_threshold, read off
/// the provenance alone.
KeypointCounts analytic_counts(const SynthOutput& out, double drop_threshold);

/// Survival probability P(confidence >= threshold) of a clamped normal.
double survival(const ConfidenceModel& m, double threshold);

/// Expected percentage of a group's raw detected keypoints at or above the
/// threshold, including false-pose keypoints at the spec's rates.
double expected_retention(const SynthSpec& spec, EvalGroup g, double threshold);

} // namespace topdown
