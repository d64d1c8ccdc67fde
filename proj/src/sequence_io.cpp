#include "topdown/sequence_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace topdown {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
    throw ParseError(path + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& path)
{
    if (!obj.is_object()) fail(path, "expected object");
    auto it = obj.find(key);
    if (it == obj.end()) fail(path, std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& v, const std::string& path)
{
    if (!v.is_number()) fail(path, "expected number");
    double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "non-finite number");
    return d;
}

int integer(const json& v, const std::string& path)
{
    if (!v.is_number_integer()) fail(path, "expected integer");
    return v.get<int>();
}

double unit_interval(const json& v, const std::string& path)
{
    double d = number(v, path);
    if (d < 0.0 || d > 1.0) fail(path, "value " + v.dump() + " outside [0,1]");
    return d;
}

Keypoint keypoint_from_json(const json& doc, const std::string& path)
{
    const json& name = field(doc, "joint", path);
    if (!name.is_string()) fail(path + ".joint", "expected string");
    auto joint = joint_from_name(name.get<std::string>());
    if (!joint) fail(path + ".joint", "unknown joint '" + name.get<std::string>() + "'");

    Keypoint kp;
    kp.joint = *joint;
    kp.position.x() = number(field(doc, "x", path), path + ".x");
    kp.position.y() = number(field(doc, "y", path), path + ".y");
    kp.confidence = unit_interval(field(doc, "confidence", path), path + ".confidence");
    const json& present = field(doc, "present", path);
    if (!present.is_boolean()) fail(path + ".present", "expected boolean");
    kp.present = present.get<bool>();
    return kp;
}

Pose pose_from_json(const json& doc, const std::string& path)
{
    Pose pose;
    pose.det_score = unit_interval(field(doc, "det_score", path), path + ".det_score");

    const json& tid = field(doc, "track_id", path);
    if (!tid.is_null()) {
        int id = integer(tid, path + ".track_id");
        if (id < 0) fail(path + ".track_id", "negative track id");
        pose.track_id = id;
    }

    const json& box = field(doc, "bbox", path);
    if (!box.is_null()) {
        const std::string bpath = path + ".bbox";
        if (!box.is_array() || box.size() != 4) fail(bpath, "expected [x1,y1,x2,y2]");
        BBox b{number(box[0], bpath + "[0]"), number(box[1], bpath + "[1]"),
               number(box[2], bpath + "[2]"), number(box[3], bpath + "[3]"), pose.det_score};
        if (b.x1 > b.x2 || b.y1 > b.y2) fail(bpath, "corners out of order");
        pose.bbox = b;
    }

    const json& kps = field(doc, "keypoints", path);
    const std::string kpath = path + ".keypoints";
    if (!kps.is_array()) fail(kpath, "expected array");
    if (kps.size() != kNumJoints)
        fail(kpath, "expected 15 keypoints, got " + std::to_string(kps.size()));
    std::set<Joint> seen;
    for (std::size_t i = 0; i < kps.size(); ++i) {
        const std::string p = kpath + "[" + std::to_string(i) + "]";
        Keypoint kp = keypoint_from_json(kps[i], p);
        if (!seen.insert(kp.joint).second)
            fail(p + ".joint", "duplicate joint '" + std::string(joint_name(kp.joint)) + "'");
        pose[kp.joint] = kp;
    }
    return pose;
}

json keypoint_to_json(const Keypoint& kp)
{
    return {{"joint", joint_name(kp.joint)},
            {"x", kp.position.x()},
            {"y", kp.position.y()},
            {"confidence", kp.confidence},
            {"present", kp.present}};
}

json pose_to_json(const Pose& pose)
{
    json kps = json::array();
    for (const auto& kp : pose.keypoints) kps.push_back(keypoint_to_json(kp));
    json box = nullptr;
    if (pose.bbox) box = json::array({pose.bbox->x1, pose.bbox->y1, pose.bbox->x2, pose.bbox->y2});
    json tid = nullptr;
    if (pose.track_id) tid = *pose.track_id;
    return {{"det_score", pose.det_score}, {"track_id", tid}, {"bbox", box}, {"keypoints", kps}};
}

} // namespace

Sequence sequence_from_json(const json& doc, const std::string& path)
{
    Sequence seq;
    const json& name = field(doc, "name", path);
    if (!name.is_string()) fail(path + ".name", "expected string");
    seq.name = name.get<std::string>();

    const json& frames = field(doc, "frames", path);
    if (!frames.is_array()) fail(path + ".frames", "expected array");
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const std::string fpath = path + ".frames[" + std::to_string(f) + "]";
        const json& fd = frames[f];
        Frame frame;
        frame.index = integer(field(fd, "index", fpath), fpath + ".index");
        frame.width = integer(field(fd, "width", fpath), fpath + ".width");
        frame.height = integer(field(fd, "height", fpath), fpath + ".height");
        if (frame.index < 0) fail(fpath + ".index", "negative frame index");
        if (frame.width <= 0 || frame.height <= 0) fail(fpath, "non-positive image size");
        if (!seq.frames.empty()) {
            const Frame& prev = seq.frames.back();
            if (frame.index == prev.index)
                fail(fpath + ".index", "duplicate frame index " + std::to_string(frame.index));
            if (frame.index < prev.index) fail(fpath + ".index", "frame indices not increasing");
            if (frame.width != seq.frames.front().width ||
                frame.height != seq.frames.front().height)
                fail(fpath, "image size differs from first frame");
        }
        const json& poses = field(fd, "poses", fpath);
        if (!poses.is_array()) fail(fpath + ".poses", "expected array");
        for (std::size_t p = 0; p < poses.size(); ++p)
            frame.poses.push_back(
                pose_from_json(poses[p], fpath + ".poses[" + std::to_string(p) + "]"));
        seq.frames.push_back(std::move(frame));
    }
    return seq;
}

json sequence_to_json(const Sequence& seq)
{
    json frames = json::array();
    for (const Frame& frame : seq.frames) {
        json poses = json::array();
        for (const Pose& pose : frame.poses) poses.push_back(pose_to_json(pose));
        frames.push_back({{"index", frame.index},
                          {"width", frame.width},
                          {"height", frame.height},
                          {"poses", poses}});
    }
    return {{"name", seq.name}, {"frames", frames}};
}

Sequence load_sequence(std::string_view text)
{
    json doc = json::parse(text.begin(), text.end(), nullptr, false);
    if (doc.is_discarded()) throw ParseError("$: malformed JSON");
    return sequence_from_json(doc);
}

std::vector<Sequence> load_sequences(std::string_view text)
{
    json doc = json::parse(text.begin(), text.end(), nullptr, false);
    if (doc.is_discarded()) throw ParseError("$: malformed JSON");
    std::vector<Sequence> out;
    if (doc.is_array()) {
        for (std::size_t i = 0; i < doc.size(); ++i)
            out.push_back(sequence_from_json(doc[i], "$[" + std::to_string(i) + "]"));
    } else {
        out.push_back(sequence_from_json(doc));
    }
    return out;
}

std::string save_predictions(const Sequence& seq, int indent)
{
    return sequence_to_json(seq).dump(indent);
}

std::string save_predictions(const std::vector<Sequence>& seqs, int indent)
{
    json doc = json::array();
    for (const Sequence& s : seqs) doc.push_back(sequence_to_json(s));
    return doc.dump(indent);
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParseError("cannot write '" + tmp.string() + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw ParseError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw ParseError("cannot rename into '" + path.string() + "': " + ec.message());
    }
}

} // namespace topdown
