#include "topdown/ensemble.hpp"

namespace topdown {

ExpertMap ExpertMap::uniform(ExpertChoice c)
{
    ExpertMap m;
    m.choice.fill(c);
    return m;
}

ExpertMap ExpertMap::defaults()
{
    ExpertMap m;
    for (Joint j : kAllJoints) {
        switch (joint_group(j)) {
        case EvalGroup::head: m[j] = ExpertChoice::average; break;
        case EvalGroup::shoulder:
        case EvalGroup::hip: m[j] = ExpertChoice::model_a; break;
        default: m[j] = ExpertChoice::model_b; break;
        }
    }
    return m;
}

std::string_view expert_choice_name(ExpertChoice c)
{
    switch (c) {
    case ExpertChoice::model_a: return "A";
    case ExpertChoice::model_b: return "B";
    case ExpertChoice::average: return "AVG";
    }
    return "AVG";
}

ExpertChoice expert_choice_from_name(std::string_view name)
{
    if (name == "A") return ExpertChoice::model_a;
    if (name == "B") return ExpertChoice::model_b;
    if (name == "AVG") return ExpertChoice::average;
    throw ParseError("expert map: unknown choice '" + std::string(name) + "' (want A, B or AVG)");
}

ExpertMap expert_map_from_json(const nlohmann::json& doc)
{
    if (!doc.is_object()) throw ParseError("expert map: expected object");
    ExpertMap map = ExpertMap::defaults();
    for (const auto& [key, value] : doc.items()) {
        auto joint = joint_from_name(key);
        if (!joint) throw ParseError("expert map: unknown joint '" + key + "'");
        if (!value.is_string()) throw ParseError("expert map." + key + ": expected string");
        map[*joint] = expert_choice_from_name(value.get<std::string>());
    }
    return map;
}

nlohmann::json expert_map_to_json(const ExpertMap& map)
{
    nlohmann::json doc = nlohmann::json::object();
    for (Joint j : kAllJoints) doc[std::string(joint_name(j))] = expert_choice_name(map[j]);
    return doc;
}

namespace {

Keypoint average_keypoint(const Keypoint& a, const Keypoint& b)
{
    if (a.present == b.present) {
        Keypoint k = a;
        k.position = 0.5 * (a.position + b.position);
        k.confidence = 0.5 * (a.confidence + b.confidence);
        return k;
    }
    return a.present ? a : b;
}

std::optional<BBox> average_box(const std::optional<BBox>& a, const std::optional<BBox>& b)
{
    if (a && b)
        return BBox{0.5 * (a->x1 + b->x1), 0.5 * (a->y1 + b->y1), 0.5 * (a->x2 + b->x2),
                    0.5 * (a->y2 + b->y2), 0.5 * (a->score + b->score)};
    return a ? a : b;
}

Pose fuse_common(const Pose& a, const Pose& b)
{
    Pose out;
    out.det_score = 0.5 * (a.det_score + b.det_score);
    out.bbox = average_box(a.bbox, b.bbox);
    if (a.track_id == b.track_id) out.track_id = a.track_id;
    return out;
}

} // namespace

Pose fuse_average(const Pose& a, const Pose& b)
{
    Pose out = fuse_common(a, b);
    for (Joint j : kAllJoints) out[j] = average_keypoint(a[j], b[j]);
    return out;
}

Pose fuse_expert(const Pose& a, const Pose& b, const ExpertMap& map)
{
    Pose out = fuse_common(a, b);
    for (Joint j : kAllJoints) {
        switch (map[j]) {
        case ExpertChoice::model_a: out[j] = a[j]; break;
        case ExpertChoice::model_b: out[j] = b[j]; break;
        case ExpertChoice::average: out[j] = average_keypoint(a[j], b[j]); break;
        }
    }
    return out;
}

} // namespace topdown
