#include <doctest.h>

#include <set>

#include "test_support.hpp"
#include "topdown/metrics.hpp"
#include "topdown/sequence_io.hpp"
#include "topdown/tracker.hpp"

using namespace topdown;

namespace {

Frame frame_of(int index, std::vector<Pose> poses)
{
    return {index, 1280, 720, std::move(poses)};
}

Pose person_at(double x, double y) { return test::skeleton_pose({x, y}, 120.0); }

std::vector<std::set<int>> ids_per_frame(const Sequence& s)
{
    std::vector<std::set<int>> out;
    for (const Frame& f : s.frames) {
        std::set<int> ids;
        for (const Pose& p : f.poses) ids.insert(*p.track_id);
        out.push_back(ids);
    }
    return out;
}

} // namespace

TEST_CASE("similarity of a pose with itself is 1")
{
    const Pose p = person_at(300, 300);
    CHECK(pose_similarity(p, p, {}) == doctest::Approx(1.0));
    CHECK(pose_similarity(p, person_at(900, 300), {}) < 0.05);
    CHECK_THROWS_AS(pose_similarity(Pose{}, Pose{}, {}), DegenerateInputError);
}

TEST_CASE("similarity is symmetric for equal-area boxes")
{
    test::Rng rng(41);
    for (int t = 0; t < 1000; ++t) {
        Pose a = test::random_pose(rng), b = test::random_pose(rng);
        const double w = test::uniform(rng, 10, 200), h = test::uniform(rng, 10, 200);
        const double ax = test::uniform(rng, 0, 300), bx = test::uniform(rng, 0, 300);
        a.bbox = BBox{ax, 0, ax + w, h};
        b.bbox = BBox{bx, 5, bx + w, 5 + h};
        const TrackerConfig cfg;
        const double s = pose_similarity(a, b, cfg);
        CHECK(s == doctest::Approx(pose_similarity(b, a, cfg)).epsilon(1e-12));
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
    }
}

TEST_CASE("a slowly moving person keeps one id")
{
    Sequence s{"walk", {}};
    for (int f = 0; f < 10; ++f) s.frames.push_back(frame_of(f, {person_at(200 + f, 300)}));
    for (AssignmentMethod m : {AssignmentMethod::hungarian, AssignmentMethod::greedy}) {
        TrackerConfig cfg;
        cfg.method = m;
        const Sequence t = track_sequence(s, cfg);
        for (const Frame& f : t.frames) CHECK(f.poses[0].track_id == 0);
    }
}

TEST_CASE("first frame ids follow input order")
{
    const Sequence t = track_sequence({"s", {frame_of(0, {person_at(100, 100), person_at(500, 100), person_at(900, 100)})}}, {});
    for (int i = 0; i < 3; ++i) CHECK(t.frames[0].poses[std::size_t(i)].track_id == i);
}

TEST_CASE("retention window expiry")
{
    for (int window : {1, 2, 8}) {
        TrackerConfig cfg;
        cfg.retention_window = window;

        // Reappearing exactly window frames later continues the track.
        Sequence kept{"k", {frame_of(0, {person_at(300, 300)}), frame_of(window, {person_at(300, 300)})}};
        CHECK(track_sequence(kept, cfg).frames[1].poses[0].track_id == 0);

        // One frame later is too late.
        Sequence gone{"g", {frame_of(0, {person_at(300, 300)}), frame_of(window + 1, {person_at(300, 300)})}};
        CHECK(track_sequence(gone, cfg).frames[1].poses[0].track_id == 1);

        // Absent for window + 1 whole frames.
        Sequence absent{"a", {frame_of(0, {person_at(300, 300)})}};
        for (int f = 1; f <= window + 1; ++f) absent.frames.push_back(frame_of(f, {}));
        absent.frames.push_back(frame_of(window + 2, {person_at(300, 300)}));
        CHECK(track_sequence(absent, cfg).frames.back().poses[0].track_id == 1);
    }
}

TEST_CASE("tracker state never holds stale entries and ids are never reused")
{
    test::Rng rng(42);
    TrackerConfig cfg;
    cfg.retention_window = 3;
    PoseTracker tracker(cfg);
    std::set<int> seen_ids;
    int last_next = 0;
    for (int f = 0; f < 200; ++f) {
        std::vector<Pose> poses;
        for (int i = test::uniform_int(rng, 0, 4); i > 0; --i)
            poses.push_back(person_at(test::uniform(rng, 100, 1100), test::uniform(rng, 100, 600)));
        const Frame out = tracker.step(frame_of(f, poses));
        std::set<int> ids;
        for (const Pose& p : out.poses) {
            CHECK(ids.insert(*p.track_id).second);
            if (*p.track_id >= last_next) CHECK(seen_ids.insert(*p.track_id).second);
        }
        CHECK(tracker.state().next_id >= last_next);
        last_next = tracker.state().next_id;
        for (const auto& [id, entry] : tracker.state().active) {
            CHECK(entry.last_frame >= f - cfg.retention_window);
            CHECK(id < tracker.state().next_id);
        }
    }
}

TEST_CASE("a custom similarity is honoured")
{
    // A similarity that never links forces a fresh id every frame.
    PoseTracker tracker({}, [](const Pose&, const Pose&) { return 0.0; });
    for (int f = 0; f < 3; ++f) CHECK(tracker.step(frame_of(f, {person_at(300, 300)})).poses[0].track_id == f);
}

TEST_CASE("passing persons keep their ids")
{
    SynthSpec spec = SynthSpec::noiseless();
    spec.n_persons = 2;
    spec.n_frames = 80;
    spec.starts = {{200, 300}, {1000, 400}};
    spec.velocities = {{10, 0}, {-10, 0}};
    const SynthOutput out = generate(spec);
    for (AssignmentMethod m : {AssignmentMethod::hungarian, AssignmentMethod::greedy}) {
        TrackerConfig cfg;
        cfg.method = m;
        const Sequence tracked = track_sequence(out.det, cfg);
        const MotReport r = evaluate_mot(std::vector<Sequence>{tracked}, std::vector<Sequence>{out.gt}, {});
        CHECK(r.total_counts.idsw == 0);
        CHECK(r.total_mota == 100.0);
    }
}

TEST_CASE("tracking is deterministic and ids are unique per frame")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        SynthSpec spec = SynthSpec::posetrack_calibrated();
        spec.n_frames = 40;
        spec.seed = seed;
        const Sequence det = generate(spec).det;
        for (AssignmentMethod m : {AssignmentMethod::hungarian, AssignmentMethod::greedy}) {
            TrackerConfig cfg;
            cfg.method = m;
            const Sequence a = track_sequence(det, cfg), b = track_sequence(det, cfg);
            CHECK(save_predictions(a) == save_predictions(b));
            const auto ids = ids_per_frame(a);
            for (std::size_t f = 0; f < a.frames.size(); ++f) CHECK(ids[f].size() == a.frames[f].poses.size());
        }
    }
}

TEST_CASE("prune_keypoints drops low confidences only")
{
    Pose p = test::make_pose({{Joint::nose, {1, 1}}, {Joint::head_top, {2, 2}}, {Joint::head_bottom, {3, 3}}});
    p[Joint::nose].confidence = 0.9;
    p[Joint::head_top].confidence = 0.6;
    p[Joint::head_bottom].confidence = 0.4;
    const Pose q = prune_keypoints(p, 0.5);
    CHECK(q[Joint::nose] == p[Joint::nose]);
    CHECK(q[Joint::head_top] == p[Joint::head_top]);
    CHECK_FALSE(q[Joint::head_bottom].present);
    CHECK(q[Joint::head_bottom].position == p[Joint::head_bottom].position);
    CHECK(prune_keypoints(p, 0.0) == p);

    test::Rng rng(43);
    for (int t = 0; t < 1000; ++t) {
        const Pose r = test::random_pose(rng);
        const double lo = test::uniform(rng, 0, 1), hi = test::uniform(rng, lo, 1);
        const Pose a = prune_keypoints(r, lo), b = prune_keypoints(r, hi);
        for (Joint j : kAllJoints) {
            if (b[j].present) CHECK(a[j].present);
            CHECK(a[j].position == r[j].position);
            CHECK(a[j].confidence == r[j].confidence);
        }
    }
}

TEST_CASE("retention statistics")
{
    Pose p = test::make_pose({{Joint::nose, {1, 1}}, {Joint::left_ankle, {2, 2}}, {Joint::left_knee, {3, 3}},
                              {Joint::left_hip, {4, 4}}});
    p[Joint::nose].confidence = 0.9;
    p[Joint::left_ankle].confidence = 0.2;
    p[Joint::left_knee].confidence = 0.3;
    p[Joint::left_hip].confidence = 0.8;
    const std::vector<Sequence> seqs{{"s", {frame_of(0, {p})}}};
    const RetentionTable r = retention_stats(seqs, 0.5);
    CHECK(r.total == 50.0);
    CHECK(r.group[index(EvalGroup::head)] == 100.0);
    CHECK(r.group[index(EvalGroup::ankle)] == 0.0);

    const RetentionTable all = retention_stats(std::vector<Sequence>{{"s", {frame_of(0, {person_at(300, 300)})}}}, 0.7);
    for (double g : all.group) CHECK(g == 100.0);
    CHECK_THROWS_AS(retention_stats(std::vector<Sequence>{{"s", {frame_of(0, {})}}}, 0.5), ContractError);
}

TEST_CASE("tracker config validation and json")
{
    TrackerConfig c;
    c.retention_window = 0;
    CHECK_THROWS_AS(c.validate(), ContractError);
    c = {};
    c.w_iou = c.w_pose = 0;
    CHECK_THROWS_AS(c.validate(), ContractError);
    c = {};
    c.method = AssignmentMethod::greedy;
    c.kappa[3] = 0.2;
    const TrackerConfig back = tracker_config_from_json(tracker_config_to_json(c));
    CHECK(back.method == AssignmentMethod::greedy);
    CHECK(back.kappa == c.kappa);
    CHECK(tracker_config_from_json({{"kappa", 0.05}}).kappa[7] == 0.05);
}
