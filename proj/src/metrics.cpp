#include "topdown/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

#include "topdown/assignment.hpp"
#include "topdown/geometry.hpp"

namespace topdown {

PckhThreshold pckh_from_json(const nlohmann::json& doc, PckhThreshold t)
{
    if (!doc.is_object()) throw ParseError("pckh: expected object");
    try {
        if (doc.contains("factor")) t.factor = doc.at("factor").get<double>();
        if (doc.contains("min_head_size")) t.min_head_size = doc.at("min_head_size").get<double>();
        if (doc.contains("fallback_diag_ratio"))
            t.fallback_diag_ratio = doc.at("fallback_diag_ratio").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("pckh: ") + e.what());
    }
    if (!(t.factor > 0.0)) throw ParseError("pckh.factor must be positive");
    return t;
}

nlohmann::json pckh_to_json(const PckhThreshold& t)
{
    return {{"factor", t.factor},
            {"min_head_size", t.min_head_size},
            {"fallback_diag_ratio", t.fallback_diag_ratio}};
}

double head_size(const Pose& pose, const PckhThreshold& t)
{
    const Keypoint& top = pose[Joint::head_top];
    const Keypoint& bottom = pose[Joint::head_bottom];
    if (!top.present || !bottom.present)
        throw ContractError("head_size: head_top and head_bottom must both be present");
    return std::max((top.position - bottom.position).norm(), t.min_head_size);
}

double reference_size(const Pose& pose, const PckhThreshold& t)
{
    if (pose[Joint::head_top].present && pose[Joint::head_bottom].present) return head_size(pose, t);
    const BBox box = pose_box(pose);
    return std::max(std::hypot(box.width(), box.height()) * t.fallback_diag_ratio, t.min_head_size);
}

namespace {

// Radius is only needed for gt poses with at least one present joint.
double gt_radius(const Pose& gt, const PckhThreshold& t)
{
    if (gt.present_count() == 0) return 0.0;
    return t.factor * reference_size(gt, t);
}

bool within(const Keypoint& pred, const Keypoint& gt, double radius)
{
    return pred.present && gt.present && (pred.position - gt.position).norm() <= radius;
}

std::vector<PoseMatch> match_with_radii(std::span<const Pose> preds, std::span<const Pose> gts,
                                        std::span<const double> radii)
{
    const auto n = static_cast<Eigen::Index>(preds.size());
    const auto m = static_cast<Eigen::Index>(gts.size());
    Eigen::MatrixXd cost(n, m);
    Eigen::Matrix<std::size_t, Eigen::Dynamic, Eigen::Dynamic> correct(n, m);
    for (Eigen::Index g = 0; g < m; ++g) {
        const Pose& gt = gts[g];
        const std::size_t denom = gt.present_count();
        for (Eigen::Index p = 0; p < n; ++p) {
            std::size_t hits = 0;
            for (Joint j : kAllJoints) hits += within(preds[p][j], gt[j], radii[g]) ? 1 : 0;
            correct(p, g) = hits;
            cost(p, g) = 1.0 - (denom == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(denom));
        }
    }
    std::vector<PoseMatch> out;
    for (const auto& [p, g] : hungarian(cost))
        if (correct(p, g) > 0)
            out.push_back({static_cast<std::size_t>(p), static_cast<std::size_t>(g), correct(p, g)});
    std::sort(out.begin(), out.end(), [](const PoseMatch& a, const PoseMatch& b) { return a.gt < b.gt; });
    return out;
}

std::vector<double> radii_for(std::span<const Pose> gts, const PckhThreshold& t)
{
    std::vector<double> r;
    r.reserve(gts.size());
    for (const Pose& g : gts) r.push_back(gt_radius(g, t));
    return r;
}

struct AlignedFrame {
    const Frame* pred;
    const Frame* gt;
    std::size_t sequence;
};

std::vector<AlignedFrame> align(std::span<const Sequence> preds, std::span<const Sequence> gts)
{
    std::map<std::string, const Sequence*> by_name;
    for (const Sequence& p : preds)
        if (!by_name.emplace(p.name, &p).second)
            throw ContractError("evaluation: duplicate prediction sequence '" + p.name + "'");
    if (preds.size() != gts.size())
        throw ContractError("evaluation: " + std::to_string(preds.size()) + " prediction vs " +
                            std::to_string(gts.size()) + " ground-truth sequences");

    std::vector<AlignedFrame> out;
    for (std::size_t s = 0; s < gts.size(); ++s) {
        const Sequence& gt = gts[s];
        auto it = by_name.find(gt.name);
        if (it == by_name.end())
            throw ContractError("evaluation: no predictions for sequence '" + gt.name + "'");
        const Sequence& pred = *it->second;
        if (pred.frames.size() != gt.frames.size())
            throw ContractError("evaluation: frame count mismatch in sequence '" + gt.name + "'");
        for (std::size_t f = 0; f < gt.frames.size(); ++f) {
            if (pred.frames[f].index != gt.frames[f].index)
                throw ContractError("evaluation: frame index mismatch in sequence '" + gt.name +
                                    "' at position " + std::to_string(f));
            out.push_back({&pred.frames[f], &gt.frames[f], s});
        }
    }
    return out;
}

std::string fmt2(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

nlohmann::json number_or_null(double v)
{
    if (std::isfinite(v)) return v;
    return nullptr;
}

} // namespace

std::vector<PoseMatch> match_poses_frame(std::span<const Pose> preds, std::span<const Pose> gts,
                                         const PckhThreshold& t)
{
    const std::vector<double> radii = radii_for(gts, t);
    return match_with_radii(preds, gts, radii);
}

double interpolated_ap(std::span<const double> confidences, const std::vector<bool>& hits,
                       std::size_t num_positives)
{
    if (confidences.size() != hits.size())
        throw ContractError("interpolated_ap: confidence/hit length mismatch");
    if (num_positives == 0) return 0.0;

    std::vector<std::size_t> order(confidences.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return confidences[a] > confidences[b];
    });

    std::vector<double> precision(order.size());
    std::size_t tp = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        tp += hits[order[i]] ? 1 : 0;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    // Envelope: best precision at this recall or beyond.
    for (std::size_t i = order.size(); i-- > 1;)
        precision[i - 1] = std::max(precision[i - 1], precision[i]);

    double ap = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i)
        if (hits[order[i]]) ap += precision[i];
    return ap / static_cast<double>(num_positives);
}

ApReport evaluate_ap(std::span<const Sequence> preds, std::span<const Sequence> gts,
                     const PckhThreshold& t)
{
    std::array<std::vector<double>, kNumJoints> conf;
    std::array<std::vector<bool>, kNumJoints> hit;
    std::array<std::size_t, kNumJoints> positives{};

    for (const AlignedFrame& af : align(preds, gts)) {
        const auto& pp = af.pred->poses;
        const auto& gp = af.gt->poses;
        const std::vector<double> radii = radii_for(gp, t);
        std::vector<std::ptrdiff_t> gt_of(pp.size(), -1);
        for (const PoseMatch& m : match_with_radii(pp, gp, radii))
            gt_of[m.pred] = static_cast<std::ptrdiff_t>(m.gt);

        for (const Pose& g : gp)
            for (Joint j : kAllJoints) positives[index(j)] += g[j].present ? 1 : 0;

        for (std::size_t p = 0; p < pp.size(); ++p) {
            for (Joint j : kAllJoints) {
                const Keypoint& kp = pp[p][j];
                if (!kp.present) continue;
                bool ok = false;
                if (gt_of[p] >= 0) {
                    const auto g = static_cast<std::size_t>(gt_of[p]);
                    ok = within(kp, gp[g][j], radii[g]);
                }
                conf[index(j)].push_back(kp.confidence);
                hit[index(j)].push_back(ok);
            }
        }
    }

    ApReport r;
    std::array<double, kNumGroups> group_sum{};
    std::array<int, kNumGroups> group_n{};
    for (Joint j : kAllJoints) {
        const std::size_t ji = index(j);
        r.joint[ji] = 100.0 * interpolated_ap(conf[ji], hit[ji], positives[ji]);
        group_sum[index(joint_group(j))] += r.joint[ji];
        ++group_n[index(joint_group(j))];
    }
    for (std::size_t g = 0; g < kNumGroups; ++g) r.group[g] = group_sum[g] / group_n[g];
    r.total = std::accumulate(r.joint.begin(), r.joint.end(), 0.0) / static_cast<double>(kNumJoints);
    return r;
}

double mota(const MotCounts& c)
{
    if (c.gt == 0) return std::numeric_limits<double>::quiet_NaN();
    return 100.0 * (1.0 - static_cast<double>(c.fn + c.fp + c.idsw) / static_cast<double>(c.gt));
}

MotReport evaluate_mot(std::span<const Sequence> preds, std::span<const Sequence> gts,
                       const PckhThreshold& t)
{
    auto require_ids = [](std::span<const Sequence> seqs, const char* side) {
        for (const Sequence& s : seqs)
            for (const Frame& f : s.frames)
                for (const Pose& p : f.poses)
                    if (!p.track_id)
                        throw ContractError(std::string("evaluate_mot: ") + side + " sequence '" +
                                            s.name + "' frame " + std::to_string(f.index) +
                                            " has a pose without track_id");
    };
    require_ids(preds, "predicted");
    require_ids(gts, "ground-truth");

    MotReport r;
    double motp_sum = 0.0;
    std::size_t motp_n = 0;
    // (sequence, gt track, joint) -> predicted id at the last matched frame.
    std::map<std::tuple<std::size_t, int, std::size_t>, int> last_id;

    for (const AlignedFrame& af : align(preds, gts)) {
        const auto& pp = af.pred->poses;
        const auto& gp = af.gt->poses;
        const std::vector<double> radii = radii_for(gp, t);
        std::vector<std::array<bool, kNumJoints>> pred_hit(pp.size());
        for (auto& a : pred_hit) a.fill(false);

        std::vector<std::ptrdiff_t> pred_of(gp.size(), -1);
        for (const PoseMatch& m : match_with_radii(pp, gp, radii))
            pred_of[m.gt] = static_cast<std::ptrdiff_t>(m.pred);

        for (std::size_t g = 0; g < gp.size(); ++g) {
            for (Joint j : kAllJoints) {
                const Keypoint& gk = gp[g][j];
                if (!gk.present) continue;
                MotCounts& c = r.joint_counts[index(j)];
                ++c.gt;
                if (pred_of[g] < 0) {
                    ++c.fn;
                    continue;
                }
                const auto p = static_cast<std::size_t>(pred_of[g]);
                const Keypoint& pk = pp[p][j];
                if (!within(pk, gk, radii[g])) {
                    ++c.fn;
                    continue;
                }
                ++c.tp;
                pred_hit[p][index(j)] = true;
                motp_sum += 1.0 - (pk.position - gk.position).norm() / radii[g];
                ++motp_n;

                const auto key = std::make_tuple(af.sequence, *gp[g].track_id, index(j));
                const int pid = *pp[p].track_id;
                auto it = last_id.find(key);
                if (it != last_id.end() && it->second != pid) ++c.idsw;
                last_id[key] = pid;
            }
        }
        for (std::size_t p = 0; p < pp.size(); ++p)
            for (Joint j : kAllJoints)
                if (pp[p][j].present && !pred_hit[p][index(j)]) ++r.joint_counts[index(j)].fp;
    }

    for (Joint j : kAllJoints) {
        r.group_counts[index(joint_group(j))] += r.joint_counts[index(j)];
        r.total_counts += r.joint_counts[index(j)];
    }
    for (std::size_t g = 0; g < kNumGroups; ++g) r.group_mota[g] = mota(r.group_counts[g]);
    r.total_mota = mota(r.total_counts);
    r.motp = motp_n == 0 ? 0.0 : 100.0 * motp_sum / static_cast<double>(motp_n);
    const MotCounts& c = r.total_counts;
    r.precision = c.tp + c.fp == 0 ? 0.0 : 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    r.recall = c.tp + c.fn == 0 ? 0.0 : 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    return r;
}

nlohmann::json ap_report_json(const ApReport& r)
{
    nlohmann::json groups = nlohmann::json::object();
    for (EvalGroup g : kAllGroups) groups[std::string(group_label(g))] = r.group[index(g)];
    nlohmann::json joints = nlohmann::json::object();
    for (Joint j : kAllJoints) joints[std::string(joint_name(j))] = r.joint[index(j)];
    return {{"AP", groups}, {"Total", r.total}, {"joints", joints}};
}

namespace {

nlohmann::json counts_json(const MotCounts& c)
{
    return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"idsw", c.idsw}, {"gt", c.gt}};
}

} // namespace

nlohmann::json mot_report_json(const MotReport& r)
{
    nlohmann::json groups = nlohmann::json::object();
    nlohmann::json counts = nlohmann::json::object();
    for (EvalGroup g : kAllGroups) {
        groups[std::string(group_label(g))] = number_or_null(r.group_mota[index(g)]);
        counts[std::string(group_label(g))] = counts_json(r.group_counts[index(g)]);
    }
    counts["Total"] = counts_json(r.total_counts);
    return {{"MOTA", groups},     {"Total", number_or_null(r.total_mota)},
            {"MOTP", r.motp},     {"Prec", r.precision},
            {"Rec", r.recall},    {"counts", counts}};
}

std::string ap_report_csv(const ApReport& r)
{
    std::string head, row;
    for (EvalGroup g : kAllGroups) {
        head += std::string(group_label(g)) + ",";
        row += fmt2(r.group[index(g)]) + ",";
    }
    return head + "Total\n" + row + fmt2(r.total) + "\n";
}

std::string mot_report_csv(const MotReport& r)
{
    std::string head, row;
    for (EvalGroup g : kAllGroups) {
        head += std::string(group_label(g)) + ",";
        row += fmt2(r.group_mota[index(g)]) + ",";
    }
    return head + "Total,MOTP,Prec,Rec\n" + row + fmt2(r.total_mota) + "," + fmt2(r.motp) + "," +
           fmt2(r.precision) + "," + fmt2(r.recall) + "\n";
}

} // namespace topdown
