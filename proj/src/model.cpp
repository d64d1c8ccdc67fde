#include "topdown/model.hpp"

#include <cmath>

namespace topdown {

namespace {

constexpr std::array<std::string_view, kNumJoints> kJointNames = {
    "nose",        "head_bottom", "head_top",   "left_shoulder", "right_shoulder",
    "left_elbow",  "right_elbow", "left_wrist", "right_wrist",   "left_hip",
    "right_hip",   "left_knee",   "right_knee", "left_ankle",    "right_ankle",
};

constexpr std::array<std::string_view, kNumGroups> kGroupLabels = {
    "Head", "Shou", "Elb", "Wri", "Hip", "Knee", "Ankl",
};

} // namespace

std::string_view joint_name(Joint j) { return kJointNames[index(j)]; }

std::optional<Joint> joint_from_name(std::string_view name)
{
    for (Joint j : kAllJoints) {
        if (kJointNames[index(j)] == name) return j;
    }
    return std::nullopt;
}

std::string_view group_label(EvalGroup g) { return kGroupLabels[index(g)]; }

Pose::Pose()
{
    for (Joint j : kAllJoints) keypoints[index(j)].joint = j;
}

std::size_t Pose::present_count() const
{
    std::size_t n = 0;
    for (const auto& kp : keypoints) n += kp.present ? 1 : 0;
    return n;
}

void validate(const Sequence& seq)
{
    auto fail = [&](const std::string& where, const std::string& what) {
        throw ContractError("sequence '" + seq.name + "': " + where + ": " + what);
    };
    for (std::size_t f = 0; f < seq.frames.size(); ++f) {
        const Frame& frame = seq.frames[f];
        const std::string fpath = "frames[" + std::to_string(f) + "]";
        if (frame.index < 0) fail(fpath, "negative frame index");
        if (f > 0 && frame.index <= seq.frames[f - 1].index)
            fail(fpath, "frame indices must be strictly increasing");
        if (frame.width <= 0 || frame.height <= 0) fail(fpath, "non-positive image size");
        if (f > 0 && (frame.width != seq.frames[0].width || frame.height != seq.frames[0].height))
            fail(fpath, "image size differs from first frame");
        for (std::size_t p = 0; p < frame.poses.size(); ++p) {
            const Pose& pose = frame.poses[p];
            const std::string ppath = fpath + ".poses[" + std::to_string(p) + "]";
            if (!(pose.det_score >= 0.0 && pose.det_score <= 1.0))
                fail(ppath, "det_score outside [0,1]");
            if (pose.track_id && *pose.track_id < 0) fail(ppath, "negative track_id");
            if (pose.bbox) {
                const BBox& b = *pose.bbox;
                if (!std::isfinite(b.x1) || !std::isfinite(b.y1) || !std::isfinite(b.x2) ||
                    !std::isfinite(b.y2) || b.x1 > b.x2 || b.y1 > b.y2)
                    fail(ppath, "invalid bbox");
            }
            for (Joint j : kAllJoints) {
                const Keypoint& kp = pose[j];
                if (kp.joint != j) fail(ppath, "keypoint slot holds wrong joint");
                if (!kp.position.allFinite())
                    fail(ppath + ".keypoints[" + std::string(joint_name(j)) + "]",
                         "non-finite coordinate");
                if (!(kp.confidence >= 0.0 && kp.confidence <= 1.0))
                    fail(ppath + ".keypoints[" + std::string(joint_name(j)) + "]",
                         "confidence outside [0,1]");
            }
        }
    }
}

} // namespace topdown
