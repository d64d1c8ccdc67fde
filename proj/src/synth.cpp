#include "topdown/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "topdown/geometry.hpp"

namespace topdown {

namespace {

// Unit-height stick figure centred on the body, y pointing down. Head length
// (head_top to head_bottom) is 0.14 of the body height.
const std::array<Eigen::Vector2d, kNumJoints> kTemplate = {{
    {0.00, -0.41}, // nose
    {0.00, -0.34}, // head_bottom
    {0.00, -0.48}, // head_top
    {0.12, -0.29}, // left_shoulder
    {-0.12, -0.29},
    {0.16, -0.14}, // left_elbow
    {-0.16, -0.14},
    {0.18, 0.00}, // left_wrist
    {-0.18, 0.00},
    {0.08, 0.04}, // left_hip
    {-0.08, 0.04},
    {0.09, 0.26}, // left_knee
    {-0.09, 0.26},
    {0.09, 0.48}, // left_ankle
    {-0.09, 0.48},
}};

constexpr double kTemplateHalfWidth = 0.18;
constexpr double kTemplateHalfHeight = 0.48;
constexpr double kHeadLength = 0.14;
// Gap kept between a person's cell border and their body: > 2 head lengths
// on each side, so neighbours stay more than 4 head sizes apart.
constexpr double kCellMargin = 0.3;
constexpr int kFalsePoseAttempts = 50;

void check_unit(double v, const char* what)
{
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError(std::string("synth: ") + what + " outside [0,1]");
}

void check_model(const ConfidenceModel& m, const char* what)
{
    if (!std::isfinite(m.mean) || !(m.spread >= 0.0))
        throw ContractError(std::string("synth: invalid confidence model for ") + what);
}

// Triangle-wave reflection of x into [-a, a].
double reflect(double x, double a)
{
    if (a <= 0.0) return 0.0;
    const double period = 4.0 * a;
    double y = std::fmod(x + a, period);
    if (y < 0.0) y += period;
    return y <= 2.0 * a ? y - a : 3.0 * a - y;
}

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    bool bernoulli(double p) { return p > 0.0 && uniform(0.0, 1.0) < p; }
    double normal(double mean, double sd)
    {
        if (sd <= 0.0) return mean;
        return std::normal_distribution<double>(mean, sd)(rng_);
    }
    double confidence(const ConfidenceModel& m) { return std::clamp(normal(m.mean, m.spread), 0.0, 1.0); }
    int poisson(double rate)
    {
        if (rate <= 0.0) return 0;
        return std::poisson_distribution<int>(rate)(rng_);
    }

private:
    std::mt19937_64 rng_;
};

struct Motion {
    Eigen::Vector2d anchor;
    Eigen::Vector2d amplitude; // zero => unconfined
    Eigen::Vector2d start;     // offset from anchor at t = 0 (linear) or phase (sinusoidal)
    Eigen::Vector2d velocity;
};

Eigen::Vector2d centre_at(const Motion& m, Trajectory kind, bool confined, int t)
{
    if (!confined) return m.anchor + m.start + m.velocity * t;
    Eigen::Vector2d off;
    for (int axis = 0; axis < 2; ++axis) {
        const double a = m.amplitude[axis];
        if (kind == Trajectory::linear) {
            off[axis] = reflect(m.start[axis] + m.velocity[axis] * t, a);
        } else {
            const double omega = a > 0.0 ? std::abs(m.velocity[axis]) / a : 0.0;
            off[axis] = a * std::sin(omega * t + m.start[axis]);
        }
    }
    return m.anchor + off;
}

Pose template_pose(const Eigen::Vector2d& centre, double scale)
{
    Pose p;
    for (Joint j : kAllJoints) {
        Keypoint& kp = p[j];
        kp.position = centre + scale * kTemplate[index(j)];
        kp.confidence = 1.0;
        kp.present = true;
    }
    return p;
}

bool boxes_touch(const BBox& a, const BBox& b)
{
    return a.x1 < b.x2 && b.x1 < a.x2 && a.y1 < b.y2 && b.y1 < a.y2;
}

double std_normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

} // namespace

const std::array<Eigen::Vector2d, kNumJoints>& skeleton_template() { return kTemplate; }

void SynthSpec::validate() const
{
    if (width <= 0 || height <= 0) throw ContractError("synth: zero-area image");
    if (n_frames < 1) throw ContractError("synth: n_frames must be >= 1");
    if (n_persons < 0) throw ContractError("synth: negative n_persons");
    if (!(scale > 0.0)) throw ContractError("synth: scale must be positive");
    if (!(speed >= 0.0)) throw ContractError("synth: negative speed");
    if (!(jitter >= 0.0)) throw ContractError("synth: negative jitter");
    if (!(fp_rate >= 0.0)) throw ContractError("synth: negative fp_rate");
    check_unit(p_miss, "p_miss");
    for (const GroupConfidence& g : confidence) {
        check_model({g.mean, g.spread}, "group");
        check_unit(g.outlier_rate, "outlier_rate");
    }
    check_model(outlier_confidence, "outliers");
    check_model(det_score, "det_score");
    check_model(fp_det_score, "fp_det_score");
    if (!(outlier_min_offset > 0.0) || outlier_max_offset < outlier_min_offset)
        throw ContractError("synth: invalid outlier offset range");
    if (!starts.empty() && starts.size() != static_cast<std::size_t>(n_persons))
        throw ContractError("synth: starts must list one centre per person");
    if (!velocities.empty() && velocities.size() != starts.size())
        throw ContractError("synth: velocities require matching starts");
    for (const OcclusionInterval& o : occlusions)
        if (o.person < 0 || o.person >= n_persons || o.last_frame < o.first_frame)
            throw ContractError("synth: invalid occlusion interval");
}

SynthSpec SynthSpec::noiseless()
{
    SynthSpec s;
    for (auto& g : s.confidence) g = {1.0, 0.0, 0.0};
    return s;
}

SynthSpec SynthSpec::posetrack_calibrated()
{
    SynthSpec s;
    s.name = "posetrack-calibrated";
    s.n_persons = 6;
    s.n_frames = 60;
    s.speed = 3.0;
    s.jitter = 1.0;
    s.p_miss = 0.05;
    s.fp_rate = 0.3;
    s.det_score = {0.8, 0.12};
    s.fp_det_score = {0.3, 0.2};
    s.outlier_confidence = {0.55, 0.20};
    // (mean, spread, outlier_rate) per group, least-squares fit to keypoint
    // retention at thresholds 0.70, 0.75 and 0.85 with false poses included.
    s.confidence[index(EvalGroup::head)] = {1.066, 0.229, 0.230};
    s.confidence[index(EvalGroup::shoulder)] = {1.084, 0.237, 0.134};
    s.confidence[index(EvalGroup::elbow)] = {1.030, 0.184, 0.349};
    s.confidence[index(EvalGroup::wrist)] = {1.067, 0.218, 0.463};
    s.confidence[index(EvalGroup::hip)] = {1.072, 0.212, 0.380};
    s.confidence[index(EvalGroup::knee)] = {1.096, 0.181, 0.477};
    s.confidence[index(EvalGroup::ankle)] = {1.092, 0.174, 0.560};
    return s;
}

SynthOutput generate(const SynthSpec& spec)
{
    spec.validate();
    Sampler rng(spec.seed);
    const bool confined = spec.starts.empty();
    const double head = kHeadLength * spec.scale;

    std::vector<Motion> motion(static_cast<std::size_t>(spec.n_persons));
    if (confined) {
        const int n = std::max(spec.n_persons, 1);
        const int cols = static_cast<int>(std::ceil(
            std::sqrt(static_cast<double>(n) * spec.width / static_cast<double>(spec.height))));
        const int rows = (n + cols - 1) / cols;
        const double cw = static_cast<double>(spec.width) / cols;
        const double ch = static_cast<double>(spec.height) / rows;
        const double margin = kCellMargin * spec.scale;
        for (int i = 0; i < spec.n_persons; ++i) {
            Motion& m = motion[static_cast<std::size_t>(i)];
            m.anchor = {cw * (i % cols + 0.5), ch * (i / cols + 0.5)};
            m.amplitude = {std::max(0.0, 0.5 * cw - kTemplateHalfWidth * spec.scale - margin),
                           std::max(0.0, 0.5 * ch - kTemplateHalfHeight * spec.scale - margin)};
            const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const double speed = spec.speed * rng.uniform(0.5, 1.5);
            m.velocity = speed * Eigen::Vector2d(std::cos(angle), std::sin(angle));
            if (spec.trajectory == Trajectory::linear)
                m.start = {rng.uniform(-m.amplitude.x(), m.amplitude.x()),
                           rng.uniform(-m.amplitude.y(), m.amplitude.y())};
            else
                m.start = {rng.uniform(0.0, 2.0 * std::numbers::pi),
                           rng.uniform(0.0, 2.0 * std::numbers::pi)};
        }
    } else {
        for (int i = 0; i < spec.n_persons; ++i) {
            Motion& m = motion[static_cast<std::size_t>(i)];
            m.anchor = spec.starts[static_cast<std::size_t>(i)];
            m.start = Eigen::Vector2d::Zero();
            m.velocity = spec.velocities.empty() ? Eigen::Vector2d::Zero()
                                                 : spec.velocities[static_cast<std::size_t>(i)];
        }
    }

    auto occluded = [&](int person, int frame) {
        return std::any_of(spec.occlusions.begin(), spec.occlusions.end(), [&](const OcclusionInterval& o) {
            return o.person == person && frame >= o.first_frame && frame <= o.last_frame;
        });
    };

    SynthOutput out;
    out.gt.name = spec.name;
    out.det.name = spec.name;
    for (int t = 0; t < spec.n_frames; ++t) {
        Frame gt_frame{t, spec.width, spec.height, {}};
        Frame det_frame{t, spec.width, spec.height, {}};
        std::vector<DetectionSource> sources;
        std::vector<BBox> keep_out;

        for (int i = 0; i < spec.n_persons; ++i) {
            if (occluded(i, t)) continue;
            const Eigen::Vector2d centre =
                centre_at(motion[static_cast<std::size_t>(i)], spec.trajectory, confined, t);
            Pose gt = template_pose(centre, spec.scale);
            gt.det_score = 1.0;
            gt.bbox = bbox_from_keypoints(gt);
            gt.track_id = i;
            keep_out.push_back(*gt.bbox);

            if (!rng.bernoulli(spec.p_miss)) {
                Pose det = gt;
                det.track_id.reset();
                det.det_score = rng.confidence(spec.det_score);
                BBox b = *gt.bbox;
                if (spec.jitter > 0.0) {
                    const double xa = b.x1 + rng.normal(0.0, spec.jitter);
                    const double ya = b.y1 + rng.normal(0.0, spec.jitter);
                    const double xb = b.x2 + rng.normal(0.0, spec.jitter);
                    const double yb = b.y2 + rng.normal(0.0, spec.jitter);
                    b = {std::min(xa, xb), std::min(ya, yb), std::max(xa, xb), std::max(ya, yb), 0.0};
                }
                b.score = det.det_score;
                det.bbox = b;

                DetectionSource src;
                src.gt_id = i;
                for (Joint j : kAllJoints) {
                    const GroupConfidence& gc = spec.confidence[index(joint_group(j))];
                    Keypoint& kp = det[j];
                    if (rng.bernoulli(gc.outlier_rate)) {
                        src.outlier[index(j)] = true;
                        const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
                        const double dist =
                            head * rng.uniform(spec.outlier_min_offset, spec.outlier_max_offset);
                        kp.position += dist * Eigen::Vector2d(std::cos(angle), std::sin(angle));
                        kp.confidence = rng.confidence(spec.outlier_confidence);
                    } else {
                        if (spec.jitter > 0.0)
                            kp.position += Eigen::Vector2d(rng.normal(0.0, spec.jitter),
                                                           rng.normal(0.0, spec.jitter));
                        kp.confidence = rng.confidence({gc.mean, gc.spread});
                    }
                }
                det_frame.poses.push_back(det);
                sources.push_back(src);
            }
            gt_frame.poses.push_back(std::move(gt));
        }

        const int n_false = rng.poisson(spec.fp_rate);
        for (int k = 0; k < n_false; ++k) {
            const double s = spec.scale * rng.uniform(0.8, 1.2);
            // Keep a PCKh-radius-sized buffer so false poses never score a correct joint.
            const double pad = 0.5 * head + 4.0 * spec.jitter;
            for (int attempt = 0; attempt < kFalsePoseAttempts; ++attempt) {
                const Eigen::Vector2d centre{rng.uniform(0.0, spec.width), rng.uniform(0.0, spec.height)};
                Pose fp = template_pose(centre, s);
                BBox fb = bbox_from_keypoints(fp);
                const BBox padded{fb.x1 - pad, fb.y1 - pad, fb.x2 + pad, fb.y2 + pad, 0.0};
                const bool clash = std::any_of(keep_out.begin(), keep_out.end(),
                                               [&](const BBox& b) { return boxes_touch(padded, b); });
                if (clash) continue;
                fp.det_score = rng.confidence(spec.fp_det_score);
                fb.score = fp.det_score;
                fp.bbox = fb;
                for (Keypoint& kp : fp.keypoints) {
                    if (spec.jitter > 0.0)
                        kp.position += Eigen::Vector2d(rng.normal(0.0, spec.jitter), rng.normal(0.0, spec.jitter));
                    kp.confidence = rng.confidence(spec.outlier_confidence);
                }
                keep_out.push_back(padded);
                det_frame.poses.push_back(fp);
                sources.push_back(DetectionSource{});
                break;
            }
        }

        out.gt.frames.push_back(std::move(gt_frame));
        out.det.frames.push_back(std::move(det_frame));
        out.provenance.push_back(std::move(sources));
    }
    return out;
}

nlohmann::json provenance_to_json(const SynthOutput& out)
{
    nlohmann::json frames = nlohmann::json::array();
    for (std::size_t f = 0; f < out.provenance.size(); ++f) {
        nlohmann::json poses = nlohmann::json::array();
        for (const DetectionSource& src : out.provenance[f]) {
            nlohmann::json outliers = nlohmann::json::array();
            for (Joint j : kAllJoints)
                if (src.outlier[index(j)]) outliers.push_back(joint_name(j));
            poses.push_back({{"source", src.gt_id ? nlohmann::json(*src.gt_id) : nlohmann::json(nullptr)},
                             {"outliers", outliers}});
        }
        frames.push_back({{"index", out.det.frames[f].index}, {"poses", poses}});
    }
    return {{"name", out.det.name}, {"frames", frames}};
}

KeypointCounts analytic_counts(const SynthOutput& out, double drop_threshold)
{
    KeypointCounts c;
    std::size_t gt_present = 0;
    for (std::size_t f = 0; f < out.gt.frames.size(); ++f) {
        const Frame& gf = out.gt.frames[f];
        const Frame& df = out.det.frames[f];
        for (const Pose& g : gf.poses) gt_present += g.present_count();

        for (std::size_t p = 0; p < df.poses.size(); ++p) {
            const Pose& det = df.poses[p];
            const DetectionSource& src = out.provenance[f][p];
            const Pose* gt = nullptr;
            if (src.gt_id)
                for (const Pose& g : gf.poses)
                    if (g.track_id == src.gt_id) gt = &g;
            for (Joint j : kAllJoints) {
                const Keypoint& kp = det[j];
                if (!kp.present || kp.confidence < drop_threshold) continue;
                if (gt && (*gt)[j].present && !src.outlier[index(j)])
                    ++c.tp;
                else
                    ++c.fp;
            }
        }
    }
    c.fn = gt_present - c.tp;
    return c;
}

double survival(const ConfidenceModel& m, double threshold)
{
    if (threshold <= 0.0) return 1.0;
    if (threshold > 1.0) return 0.0;
    if (m.spread <= 0.0) return std::clamp(m.mean, 0.0, 1.0) >= threshold ? 1.0 : 0.0;
    return std_normal_sf((threshold - m.mean) / m.spread);
}

double expected_retention(const SynthSpec& spec, EvalGroup g, double threshold)
{
    const GroupConfidence& gc = spec.confidence[index(g)];
    const double s_true = survival({gc.mean, gc.spread}, threshold);
    const double s_out = survival(spec.outlier_confidence, threshold);
    const double n_true = spec.n_persons * (1.0 - spec.p_miss);
    const double n_false = spec.fp_rate;
    if (n_true + n_false <= 0.0) return 0.0;
    const double kept = n_true * ((1.0 - gc.outlier_rate) * s_true + gc.outlier_rate * s_out) + n_false * s_out;
    return 100.0 * kept / (n_true + n_false);
}

SynthSpec synth_spec_from_json(const nlohmann::json& doc, SynthSpec s)
{
    using nlohmann::json;
    if (!doc.is_object()) throw ParseError("synth: expected object");
    auto model = [](const json& j) {
        return ConfidenceModel{j.at("mean").get<double>(), j.at("spread").get<double>()};
    };
    try {
        if (doc.contains("name")) s.name = doc.at("name").get<std::string>();
        if (doc.contains("n_persons")) s.n_persons = doc.at("n_persons").get<int>();
        if (doc.contains("n_frames")) s.n_frames = doc.at("n_frames").get<int>();
        if (doc.contains("width")) s.width = doc.at("width").get<int>();
        if (doc.contains("height")) s.height = doc.at("height").get<int>();
        if (doc.contains("trajectory")) {
            const auto t = doc.at("trajectory").get<std::string>();
            if (t == "linear")
                s.trajectory = Trajectory::linear;
            else if (t == "sinusoidal")
                s.trajectory = Trajectory::sinusoidal;
            else
                throw ParseError("synth.trajectory: unknown kind '" + t + "'");
        }
        if (doc.contains("speed")) s.speed = doc.at("speed").get<double>();
        if (doc.contains("starts")) {
            s.starts.clear();
            for (const auto& p : doc.at("starts")) s.starts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        }
        if (doc.contains("velocities")) {
            s.velocities.clear();
            for (const auto& p : doc.at("velocities"))
                s.velocities.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        }
        if (doc.contains("scale")) s.scale = doc.at("scale").get<double>();
        if (doc.contains("confidence")) {
            for (const auto& [label, g] : doc.at("confidence").items()) {
                auto it = std::find_if(kAllGroups.begin(), kAllGroups.end(),
                                       [&](EvalGroup eg) { return group_label(eg) == label; });
                if (it == kAllGroups.end()) throw ParseError("synth.confidence: unknown group '" + label + "'");
                GroupConfidence& gc = s.confidence[index(*it)];
                gc.mean = g.at("mean").get<double>();
                gc.spread = g.at("spread").get<double>();
                gc.outlier_rate = g.value("outlier_rate", 0.0);
            }
        }
        if (doc.contains("outlier_confidence")) s.outlier_confidence = model(doc.at("outlier_confidence"));
        if (doc.contains("outlier_min_offset")) s.outlier_min_offset = doc.at("outlier_min_offset").get<double>();
        if (doc.contains("outlier_max_offset")) s.outlier_max_offset = doc.at("outlier_max_offset").get<double>();
        if (doc.contains("det_score")) s.det_score = model(doc.at("det_score"));
        if (doc.contains("fp_det_score")) s.fp_det_score = model(doc.at("fp_det_score"));
        if (doc.contains("jitter")) s.jitter = doc.at("jitter").get<double>();
        if (doc.contains("p_miss")) s.p_miss = doc.at("p_miss").get<double>();
        if (doc.contains("fp_rate")) s.fp_rate = doc.at("fp_rate").get<double>();
        if (doc.contains("occlusions")) {
            s.occlusions.clear();
            for (const auto& o : doc.at("occlusions"))
                s.occlusions.push_back({o.at("person").get<int>(), o.at("first_frame").get<int>(),
                                        o.at("last_frame").get<int>()});
        }
        if (doc.contains("seed")) s.seed = doc.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("synth: ") + e.what());
    }
    return s;
}

nlohmann::json synth_spec_to_json(const SynthSpec& s)
{
    using nlohmann::json;
    auto model = [](const ConfidenceModel& m) { return json{{"mean", m.mean}, {"spread", m.spread}}; };
    auto points = [](const std::vector<Eigen::Vector2d>& v) {
        json a = json::array();
        for (const auto& p : v) a.push_back({p.x(), p.y()});
        return a;
    };
    json conf = json::object();
    for (EvalGroup g : kAllGroups) {
        const GroupConfidence& gc = s.confidence[index(g)];
        conf[std::string(group_label(g))] = {
            {"mean", gc.mean}, {"spread", gc.spread}, {"outlier_rate", gc.outlier_rate}};
    }
    json occ = json::array();
    for (const auto& o : s.occlusions)
        occ.push_back({{"person", o.person}, {"first_frame", o.first_frame}, {"last_frame", o.last_frame}});
    return {{"name", s.name},
            {"n_persons", s.n_persons},
            {"n_frames", s.n_frames},
            {"width", s.width},
            {"height", s.height},
            {"trajectory", s.trajectory == Trajectory::linear ? "linear" : "sinusoidal"},
            {"speed", s.speed},
            {"starts", points(s.starts)},
            {"velocities", points(s.velocities)},
            {"scale", s.scale},
            {"confidence", conf},
            {"outlier_confidence", model(s.outlier_confidence)},
            {"outlier_min_offset", s.outlier_min_offset},
            {"outlier_max_offset", s.outlier_max_offset},
            {"det_score", model(s.det_score)},
            {"fp_det_score", model(s.fp_det_score)},
            {"jitter", s.jitter},
            {"p_miss", s.p_miss},
            {"fp_rate", s.fp_rate},
            {"occlusions", occ},
            {"seed", s.seed}};
}

} // namespace topdown
