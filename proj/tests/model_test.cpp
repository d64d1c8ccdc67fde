#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "test_support.hpp"
#include "topdown/sequence_io.hpp"
#include "topdown/synth.hpp"

using namespace topdown;
using nlohmann::json;

TEST_CASE("joint names round-trip and groups partition the skeleton")
{
    std::set<std::string_view> names;
    std::array<int, kNumGroups> members{};
    for (Joint j : kAllJoints) {
        names.insert(joint_name(j));
        CHECK(joint_from_name(joint_name(j)) == j);
        ++members[index(joint_group(j))];
    }
    CHECK(names.size() == kNumJoints);
    CHECK(members == std::array<int, kNumGroups>{3, 2, 2, 2, 2, 2, 2});
    CHECK_FALSE(joint_from_name("tail").has_value());
    CHECK(group_label(EvalGroup::ankle) == "Ankl");
}

TEST_CASE("default pose labels every slot with its joint")
{
    Pose p;
    for (Joint j : kAllJoints) {
        CHECK(p[j].joint == j);
        CHECK_FALSE(p[j].present);
    }
    CHECK(p.present_count() == 0);
}

TEST_CASE("validate rejects broken sequences")
{
    Sequence s{"s", {{0, 100, 100, {test::make_pose({{Joint::nose, {1, 2}}})}}}};
    CHECK_NOTHROW(validate(s));

    Sequence bad = s;
    bad.frames[0].poses[0][Joint::nose].confidence = 1.5;
    CHECK_THROWS_AS(validate(bad), ContractError);

    bad = s;
    bad.frames.push_back(bad.frames[0]);
    CHECK_THROWS_AS(validate(bad), ContractError);

    bad = s;
    bad.frames[0].poses[0][Joint::nose].position.x() = std::nan("");
    CHECK_THROWS_AS(validate(bad), ContractError);
}

namespace {

Sequence sample_sequence(std::uint64_t seed)
{
    SynthSpec spec = SynthSpec::posetrack_calibrated();
    spec.n_persons = 3;
    spec.n_frames = 4;
    spec.seed = seed;
    return generate(spec).det;
}

} // namespace

TEST_CASE("save then load is the identity")
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Sequence s = sample_sequence(seed);
        CHECK(load_sequence(save_predictions(s)) == s);
    }
    std::vector<Sequence> many{sample_sequence(1), sample_sequence(2)};
    CHECK(load_sequences(save_predictions(many, 2)) == many);
    CHECK(load_sequences(save_predictions(many[0])) == std::vector<Sequence>{many[0]});
}

TEST_CASE("parse errors name the offending path")
{
    json doc = sequence_to_json(sample_sequence(3));
    doc["frames"][0]["poses"][0]["keypoints"][3]["confidence"] = 1.5;
    try {
        load_sequence(doc.dump());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("$.frames[0].poses[0].keypoints[3].confidence") != std::string::npos);
    }

    json dup = sequence_to_json(sample_sequence(3));
    dup["frames"][1]["index"] = dup["frames"][0]["index"];
    try {
        load_sequence(dup.dump());
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("duplicate frame index 0") != std::string::npos);
    }

    CHECK_THROWS_AS(load_sequence("{not json"), ParseError);
    CHECK_THROWS_AS(load_sequence("[]"), ParseError);
}

TEST_CASE("single-field corruption is always reported as a ParseError")
{
    test::Rng rng(11);
    const json clean = sequence_to_json(sample_sequence(4));
    const std::vector<json> junk{json(nullptr), json("x"), json(-1), json(2.5), json::array(), json::object(), json(true)};

    int rejected = 0;
    for (int trial = 0; trial < 300; ++trial) {
        json doc = clean;
        json& frame = doc["frames"][std::size_t(test::uniform_int(rng, 0, int(doc["frames"].size()) - 1))];
        json& pose = frame["poses"][std::size_t(test::uniform_int(rng, 0, int(frame["poses"].size()) - 1))];
        json& kp = pose["keypoints"][std::size_t(test::uniform_int(rng, 0, 14))];
        const json& value = junk[std::size_t(test::uniform_int(rng, 0, int(junk.size()) - 1))];

        switch (test::uniform_int(rng, 0, 6)) {
        case 0: kp["confidence"] = value.is_number() ? json(1.0 + test::uniform(rng, 0.01, 5.0)) : value; break;
        case 1: kp["x"] = value.is_number() ? json("1") : value; break;
        case 2: kp["joint"] = value.is_string() ? json("elbow") : value; break;
        case 3: kp.erase("present"); break;
        case 4: pose["det_score"] = -test::uniform(rng, 0.01, 1.0); break;
        case 5: pose["keypoints"].erase(std::size_t(test::uniform_int(rng, 0, 14))); break;
        case 6: frame["width"] = value.is_number_integer() ? json(0) : value; break;
        }
        try {
            load_sequence(doc.dump());
        } catch (const ParseError&) {
            ++rejected;
        }
    }
    CHECK(rejected == 300);
}

TEST_CASE("atomic write leaves no temp file and replaces content")
{
    const auto dir = std::filesystem::temp_directory_path() / "topdown_model_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "out.json";
    write_file_atomic(path, "first");
    write_file_atomic(path, "second");
    CHECK(read_text_file(path) == "second");
    for (const auto& e : std::filesystem::directory_iterator(dir)) CHECK(e.path().filename() == "out.json");
    CHECK_THROWS_AS(read_text_file(dir / "missing.json"), ParseError);
    std::filesystem::remove_all(dir);
}
