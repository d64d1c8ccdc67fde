#pragma once

#include <array>
#include <functional>
#include <map>
#include <span>
#include <string_view>

#include <json.hpp>

#include "topdown/assignment.hpp"
#include "topdown/model.hpp"

namespace topdown {

struct TrackerConfig {
    double w_iou{1.0};
    double w_pose{1.0};
    /// Pairs below this similarity are never linked.
    double min_similarity{0.3};
    /// A track is discarded once the current frame index exceeds its last
    /// matched index by more than this many frames.
    int retention_window{8};
    AssignmentMethod method{AssignmentMethod::hungarian};
    /// Applied after association; see prune_keypoints.
    double keypoint_drop_threshold{0.8};
    /// Per-joint falloff of the keypoint kernel, relative to sqrt(box area).
    std::array<double, kNumJoints> kappa = filled(0.1);

    void validate() const;

private:
    static constexpr std::array<double, kNumJoints> filled(double v)
    {
        std::array<double, kNumJoints> a{};
        a.fill(v);
        return a;
    }
};

std::string_view method_name(AssignmentMethod m);
AssignmentMethod method_from_name(std::string_view name);

TrackerConfig tracker_config_from_json(const nlohmann::json& doc, TrackerConfig base = {});
nlohmann::json tracker_config_to_json(const TrackerConfig& c);

/// Weighted blend of box IoU and a Gaussian keypoint kernel normalised by the
/// first pose's box scale. 1 for identical poses.
double pose_similarity(const Pose& a, const Pose& b, const TrackerConfig& config);

using SimilarityFn = std::function<double(const Pose& track, const Pose& candidate)>;

struct TrackEntry {
    Pose last_pose;
    int last_frame{0};
};

struct TrackerState {
    int next_id{0};
    std::map<int, TrackEntry> active;
};

/// Frame-by-frame tracker. Feed frames in increasing index order.
class PoseTracker {
public:
    explicit PoseTracker(TrackerConfig config, SimilarityFn similarity = {});

    /// Returns the frame with track ids assigned to every pose.
    Frame step(const Frame& frame);

    const TrackerState& state() const { return state_; }
    const TrackerConfig& config() const { return config_; }

private:
    TrackerConfig config_;
    SimilarityFn similarity_;
    TrackerState state_;
};

Sequence track_sequence(const Sequence& seq, const TrackerConfig& config);

/// Marks keypoints below the threshold as not present. Kept keypoints are untouched.
Pose prune_keypoints(const Pose& pose, double threshold);
Sequence prune_keypoints(const Sequence& seq, double threshold);

struct RetentionTable {
    /// Percent of present keypoints kept, per group in report order.
    std::array<double, kNumGroups> group{};
    double total{0.0};
    std::array<std::size_t, kNumGroups> kept{};
    std::array<std::size_t, kNumGroups> seen{};
};

RetentionTable retention_stats(std::span<const Sequence> seqs, double threshold);

} // namespace topdown
