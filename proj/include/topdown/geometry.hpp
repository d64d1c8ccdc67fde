#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "topdown/model.hpp"

namespace topdown {

inline constexpr double kDefaultEnlarge = 0.20;
inline constexpr double kDetectionIouThreshold = 0.4;

struct PRResult {
    double precision{1.0};
    double recall{1.0};
    std::size_t tp{0};
    std::size_t fp{0};
    std::size_t fn{0};

    static PRResult from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
    PRResult& operator+=(const PRResult& o) { return *this = from_counts(tp + o.tp, fp + o.fp, fn + o.fn); }
};

/// Tight box around the present keypoints, grown about its center so that each
/// side length becomes (1 + enlarge) times the raw one. Score is det_score.
/// Throws DegenerateInputError with fewer than two present keypoints or a
/// zero-area raw box.
BBox bbox_from_keypoints(const Pose& pose, double enlarge = kDefaultEnlarge);

/// The pose's own box when it has one, otherwise the keypoint-inferred one.
BBox pose_box(const Pose& pose, double enlarge = kDefaultEnlarge);

template <typename Scalar>
Scalar iou(const BasicBox<Scalar>& a, const BasicBox<Scalar>& b)
{
    const Scalar iw = std::max(Scalar(0), std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    const Scalar ih = std::max(Scalar(0), std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    const Scalar inter = iw * ih;
    const Scalar uni = a.area() + b.area() - inter;
    if (uni <= Scalar(0)) return Scalar(0);
    return inter / uni;
}

/// Keeps poses with det_score >= threshold, order preserved.
std::vector<Pose> prune_candidates(std::span<const Pose> poses, double threshold);

/// Greedy NMS by det_score (ties by input index). Returns the survivors in
/// score order. Every pose must carry a bbox.
std::vector<Pose> nms_boxes(std::span<const Pose> poses, double iou_threshold);

/// Index form of nms_boxes, for callers that need to track candidates.
std::vector<std::size_t> nms_indices(std::span<const Pose> poses, double iou_threshold);

/// Greedy score-ordered matching: each detection claims the unmatched ground
/// truth box with the highest IoU if it reaches the threshold.
PRResult detection_pr(std::span<const BBox> dets, std::span<const BBox> gts,
                      double iou_threshold = kDetectionIouThreshold);

} // namespace topdown
