#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "topdown/model.hpp"

namespace topdown {

/// Distance normalisation for keypoint correctness. A prediction is correct
/// when it lies within factor * head_size of the ground truth.
struct PckhThreshold {
    double factor{0.5};
    double min_head_size{1.0};
    /// Head size surrogate for poses lacking head keypoints: box diagonal * ratio.
    double fallback_diag_ratio{0.3};
};

PckhThreshold pckh_from_json(const nlohmann::json& doc, PckhThreshold base = {});
nlohmann::json pckh_to_json(const PckhThreshold& t);

/// Distance between head_top and head_bottom, clamped below by min_head_size.
/// Throws ContractError if either is absent.
double head_size(const Pose& pose, const PckhThreshold& t);

/// head_size, or the box-diagonal fallback for headless poses.
double reference_size(const Pose& pose, const PckhThreshold& t);

struct PoseMatch {
    std::size_t pred{0};
    std::size_t gt{0};
    std::size_t correct{0};
};

/// Hungarian matching of predicted to ground-truth poses on the fraction of
/// ground-truth joints predicted within radius. Pairs with no correct joint
/// are dropped. Sorted by gt index.
std::vector<PoseMatch> match_poses_frame(std::span<const Pose> preds, std::span<const Pose> gts,
                                         const PckhThreshold& t);

struct ApReport {
    std::array<double, kNumJoints> joint{};
    std::array<double, kNumGroups> group{};
    double total{0.0};
};

struct MotCounts {
    std::size_t tp{0};
    std::size_t fp{0};
    std::size_t fn{0};
    std::size_t idsw{0};
    std::size_t gt{0};

    MotCounts& operator+=(const MotCounts& o)
    {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        idsw += o.idsw;
        gt += o.gt;
        return *this;
    }
    bool operator==(const MotCounts&) const = default;
};

/// 100 * (1 - (fn + fp + idsw) / gt); NaN when gt == 0.
double mota(const MotCounts& c);

struct MotReport {
    std::array<MotCounts, kNumJoints> joint_counts{};
    std::array<MotCounts, kNumGroups> group_counts{};
    MotCounts total_counts;
    std::array<double, kNumGroups> group_mota{};
    double total_mota{0.0};
    double motp{0.0};
    double precision{0.0};
    double recall{0.0};
};

/// Area under the precision envelope of confidence-ranked predictions.
/// `hits[i]` says whether the i-th prediction (any order) is a true positive.
double interpolated_ap(std::span<const double> confidences, const std::vector<bool>& hits,
                       std::size_t num_positives);

/// Sequences are paired by name, frames by index. Throws ContractError on
/// misalignment.
ApReport evaluate_ap(std::span<const Sequence> preds, std::span<const Sequence> gts,
                     const PckhThreshold& t);

/// CLEAR-MOT at keypoint level. Both sides must carry track ids.
MotReport evaluate_mot(std::span<const Sequence> preds, std::span<const Sequence> gts,
                       const PckhThreshold& t);

nlohmann::json ap_report_json(const ApReport& r);
nlohmann::json mot_report_json(const MotReport& r);

/// Header plus one row: Head,Shou,Elb,Wri,Hip,Knee,Ankl,Total.
std::string ap_report_csv(const ApReport& r);
/// As above, followed by MOTP,Prec,Rec.
std::string mot_report_csv(const MotReport& r);

} // namespace topdown
