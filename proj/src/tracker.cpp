#include "topdown/tracker.hpp"

#include <cmath>

#include "topdown/geometry.hpp"

namespace topdown {

void TrackerConfig::validate() const
{
    if (!(w_iou >= 0.0) || !(w_pose >= 0.0) || !(w_iou + w_pose > 0.0))
        throw ContractError("tracker: weights must be non-negative with positive sum");
    if (!(min_similarity >= 0.0 && min_similarity <= 1.0))
        throw ContractError("tracker: min_similarity outside [0,1]");
    if (retention_window < 1) throw ContractError("tracker: retention_window must be >= 1");
    if (!(keypoint_drop_threshold >= 0.0 && keypoint_drop_threshold <= 1.0))
        throw ContractError("tracker: keypoint_drop_threshold outside [0,1]");
    for (double k : kappa)
        if (!(k > 0.0) || !std::isfinite(k)) throw ContractError("tracker: kappa must be positive");
}

std::string_view method_name(AssignmentMethod m)
{
    return m == AssignmentMethod::hungarian ? "hungarian" : "greedy";
}

AssignmentMethod method_from_name(std::string_view name)
{
    if (name == "hungarian") return AssignmentMethod::hungarian;
    if (name == "greedy") return AssignmentMethod::greedy;
    throw ParseError("unknown assignment method '" + std::string(name) + "'");
}

TrackerConfig tracker_config_from_json(const nlohmann::json& doc, TrackerConfig c)
{
    if (!doc.is_object()) throw ParseError("tracker: expected object");
    try {
        if (doc.contains("w_iou")) c.w_iou = doc.at("w_iou").get<double>();
        if (doc.contains("w_pose")) c.w_pose = doc.at("w_pose").get<double>();
        if (doc.contains("min_similarity")) c.min_similarity = doc.at("min_similarity").get<double>();
        if (doc.contains("retention_window")) c.retention_window = doc.at("retention_window").get<int>();
        if (doc.contains("method")) c.method = method_from_name(doc.at("method").get<std::string>());
        if (doc.contains("keypoint_drop_threshold"))
            c.keypoint_drop_threshold = doc.at("keypoint_drop_threshold").get<double>();
        if (doc.contains("kappa")) {
            const auto& k = doc.at("kappa");
            if (k.is_number()) {
                c.kappa.fill(k.get<double>());
            } else {
                for (const auto& [name, value] : k.items()) {
                    auto j = joint_from_name(name);
                    if (!j) throw ParseError("tracker.kappa: unknown joint '" + name + "'");
                    c.kappa[index(*j)] = value.get<double>();
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("tracker: ") + e.what());
    }
    return c;
}

nlohmann::json tracker_config_to_json(const TrackerConfig& c)
{
    nlohmann::json kappa = nlohmann::json::object();
    for (Joint j : kAllJoints) kappa[std::string(joint_name(j))] = c.kappa[index(j)];
    return {{"w_iou", c.w_iou},
            {"w_pose", c.w_pose},
            {"min_similarity", c.min_similarity},
            {"retention_window", c.retention_window},
            {"method", method_name(c.method)},
            {"keypoint_drop_threshold", c.keypoint_drop_threshold},
            {"kappa", kappa}};
}

double pose_similarity(const Pose& a, const Pose& b, const TrackerConfig& config)
{
    if (a.present_count() == 0 && !a.bbox && b.present_count() == 0 && !b.bbox)
        throw DegenerateInputError("pose_similarity: no keypoints and no boxes");
    const BBox box_a = pose_box(a);
    const BBox box_b = pose_box(b);

    const double scale = std::sqrt(box_a.area());
    double kernel_sum = 0.0;
    std::size_t shared = 0;
    for (Joint j : kAllJoints) {
        if (!a[j].present || !b[j].present) continue;
        const double s = scale * config.kappa[index(j)];
        const double d2 = (a[j].position - b[j].position).squaredNorm();
        kernel_sum += s > 0.0 ? std::exp(-d2 / (2.0 * s * s)) : (d2 == 0.0 ? 1.0 : 0.0);
        ++shared;
    }
    const double kp_sim = shared == 0 ? 0.0 : kernel_sum / static_cast<double>(shared);
    return (config.w_iou * iou(box_a, box_b) + config.w_pose * kp_sim) /
           (config.w_iou + config.w_pose);
}

PoseTracker::PoseTracker(TrackerConfig config, SimilarityFn similarity)
    : config_(std::move(config)), similarity_(std::move(similarity))
{
    config_.validate();
    if (!similarity_) {
        similarity_ = [cfg = config_](const Pose& a, const Pose& b) {
            return pose_similarity(a, b, cfg);
        };
    }
}

Frame PoseTracker::step(const Frame& frame)
{
    for (auto it = state_.active.begin(); it != state_.active.end();) {
        if (frame.index - it->second.last_frame > config_.retention_window)
            it = state_.active.erase(it);
        else
            ++it;
    }

    std::vector<int> ids;
    ids.reserve(state_.active.size());
    for (const auto& [id, entry] : state_.active) ids.push_back(id);

    const auto rows = static_cast<Eigen::Index>(ids.size());
    const auto cols = static_cast<Eigen::Index>(frame.poses.size());
    Eigen::MatrixXd sim(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            sim(r, c) = similarity_(state_.active.at(ids[r]).last_pose, frame.poses[c]);

    Frame out = frame;
    std::vector<bool> assigned(frame.poses.size(), false);
    const Eigen::MatrixXd cost = Eigen::MatrixXd::Ones(rows, cols) - sim;
    for (const auto& [r, c] : solve_assignment(cost, config_.method)) {
        if (sim(r, c) < config_.min_similarity) continue;
        out.poses[c].track_id = ids[r];
        assigned[c] = true;
    }
    for (std::size_t c = 0; c < out.poses.size(); ++c)
        if (!assigned[c]) out.poses[c].track_id = state_.next_id++;

    for (const Pose& p : out.poses) state_.active[*p.track_id] = TrackEntry{p, frame.index};
    return out;
}

Sequence track_sequence(const Sequence& seq, const TrackerConfig& config)
{
    PoseTracker tracker(config);
    Sequence out;
    out.name = seq.name;
    out.frames.reserve(seq.frames.size());
    for (const Frame& f : seq.frames) out.frames.push_back(tracker.step(f));
    return out;
}

Pose prune_keypoints(const Pose& pose, double threshold)
{
    Pose out = pose;
    for (Keypoint& kp : out.keypoints)
        if (kp.confidence < threshold) kp.present = false;
    return out;
}

Sequence prune_keypoints(const Sequence& seq, double threshold)
{
    Sequence out = seq;
    for (Frame& f : out.frames)
        for (Pose& p : f.poses) p = prune_keypoints(p, threshold);
    return out;
}

RetentionTable retention_stats(std::span<const Sequence> seqs, double threshold)
{
    RetentionTable t;
    for (const Sequence& s : seqs)
        for (const Frame& f : s.frames)
            for (const Pose& p : f.poses)
                for (const Keypoint& kp : p.keypoints) {
                    if (!kp.present) continue;
                    const std::size_t g = index(joint_group(kp.joint));
                    ++t.seen[g];
                    if (kp.confidence >= threshold) ++t.kept[g];
                }

    std::size_t kept = 0, seen = 0;
    for (std::size_t g = 0; g < kNumGroups; ++g) {
        kept += t.kept[g];
        seen += t.seen[g];
        t.group[g] = t.seen[g] == 0 ? 0.0
                                    : 100.0 * static_cast<double>(t.kept[g]) /
                                          static_cast<double>(t.seen[g]);
    }
    if (seen == 0) throw ContractError("retention_stats: no present keypoints");
    t.total = 100.0 * static_cast<double>(kept) / static_cast<double>(seen);
    return t;
}

} // namespace topdown
