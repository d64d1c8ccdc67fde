#include "topdown/geometry.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace topdown {

PRResult PRResult::from_counts(std::size_t tp, std::size_t fp, std::size_t fn)
{
    PRResult r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.precision = (tp + fp) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    r.recall = (tp + fn) == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    return r;
}

BBox bbox_from_keypoints(const Pose& pose, double enlarge)
{
    if (!(enlarge >= 0.0) || !std::isfinite(enlarge)) throw ContractError("bbox_from_keypoints: enlarge must be >= 0");
    constexpr double inf = std::numeric_limits<double>::infinity();
    double x1 = inf, y1 = inf, x2 = -inf, y2 = -inf;
    std::size_t n = 0;
    for (const Keypoint& kp : pose.keypoints) {
        if (!kp.present) continue;
        x1 = std::min(x1, kp.position.x());
        y1 = std::min(y1, kp.position.y());
        x2 = std::max(x2, kp.position.x());
        y2 = std::max(y2, kp.position.y());
        ++n;
    }
    if (n < 2) throw DegenerateInputError("bbox_from_keypoints: fewer than two present keypoints");
    if (x2 - x1 <= 0.0 || y2 - y1 <= 0.0)
        throw DegenerateInputError("bbox_from_keypoints: zero-area keypoint extent");

    const double half_w = 0.5 * (1.0 + enlarge) * (x2 - x1);
    const double half_h = 0.5 * (1.0 + enlarge) * (y2 - y1);
    const double cx = 0.5 * (x1 + x2);
    const double cy = 0.5 * (y1 + y2);
    return {cx - half_w, cy - half_h, cx + half_w, cy + half_h, pose.det_score};
}

BBox pose_box(const Pose& pose, double enlarge)
{
    if (pose.bbox) return *pose.bbox;
    return bbox_from_keypoints(pose, enlarge);
}

std::vector<Pose> prune_candidates(std::span<const Pose> poses, double threshold)
{
    std::vector<Pose> kept;
    for (const Pose& p : poses)
        if (p.det_score >= threshold) kept.push_back(p);
    return kept;
}

std::vector<std::size_t> nms_indices(std::span<const Pose> poses, double iou_threshold)
{
    for (const Pose& p : poses)
        if (!p.bbox) throw ContractError("nms_boxes: pose without bbox");

    std::vector<std::size_t> order(poses.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return poses[a].det_score > poses[b].det_score;
    });

    std::vector<std::size_t> kept;
    for (std::size_t i : order) {
        bool keep = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
            return iou(*poses[i].bbox, *poses[k].bbox) <= iou_threshold;
        });
        if (keep) kept.push_back(i);
    }
    return kept;
}

std::vector<Pose> nms_boxes(std::span<const Pose> poses, double iou_threshold)
{
    std::vector<Pose> out;
    for (std::size_t i : nms_indices(poses, iou_threshold)) out.push_back(poses[i]);
    return out;
}

PRResult detection_pr(std::span<const BBox> dets, std::span<const BBox> gts, double iou_threshold)
{
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    std::vector<bool> taken(gts.size(), false);
    std::size_t tp = 0;
    for (std::size_t d : order) {
        double best = -1.0;
        std::size_t best_gt = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            double v = iou(dets[d], gts[g]);
            if (v > best) {
                best = v;
                best_gt = g;
            }
        }
        if (best_gt < gts.size() && best >= iou_threshold) {
            taken[best_gt] = true;
            ++tp;
        }
    }
    return PRResult::from_counts(tp, dets.size() - tp, gts.size() - tp);
}

} // namespace topdown
