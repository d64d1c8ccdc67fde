#include <doctest.h>

#include "test_support.hpp"
#include "topdown/pipeline.hpp"
#include "topdown/sequence_io.hpp"

using namespace topdown;

namespace {

struct Data {
    std::vector<Sequence> det, gt;
};

Data make_data(const SynthSpec& spec, int count)
{
    Data d;
    for (SynthOutput& s : generate_set(spec, count)) {
        d.det.push_back(std::move(s.det));
        d.gt.push_back(std::move(s.gt));
    }
    return d;
}

SynthSpec small_calibrated()
{
    SynthSpec s = SynthSpec::posetrack_calibrated();
    s.n_frames = 30;
    return s;
}

} // namespace

TEST_CASE("noiseless input scores perfectly end to end")
{
    const Data d = make_data(SynthSpec::noiseless(), 3);
    const RunResult r = run_pipeline(d.det, d.gt, {});
    for (double g : r.ap.group) CHECK(g == 100.0);
    CHECK(r.ap.total == 100.0);
    CHECK(r.mot.total_mota == 100.0);
    CHECK(r.mot.total_counts.fp == 0);
    CHECK(r.mot.total_counts.fn == 0);
    CHECK(r.mot.total_counts.idsw == 0);
    CHECK(r.detection.precision == 1.0);
    CHECK(r.detection.recall == 1.0);
    CHECK(r.retention.total == 100.0);
}

TEST_CASE("config json round trip and schema")
{
    PipelineConfig c;
    c.candidate_threshold = 0.3;
    c.ensemble = EnsembleMode::expert;
    c.tracker.method = AssignmentMethod::greedy;
    c.tracker.keypoint_drop_threshold = 0.7;
    c.pckh.factor = 0.4;
    c.synth = SynthSpec::posetrack_calibrated();
    c.detections = "d.json";
    const PipelineConfig back = pipeline_config_from_json(pipeline_config_to_json(c));
    CHECK(pipeline_config_to_json(back) == pipeline_config_to_json(c));

    CHECK_THROWS_AS(pipeline_config_from_json({{"nms_iou", 0.5}}), ParseError);
    CHECK_THROWS_AS(pipeline_config_from_json({{"schema", 2}}), ParseError);
    CHECK_THROWS_AS(pipeline_config_from_json({{"schema", 1}, {"nms_iou", 1.5}}), ParseError);
    CHECK(pipeline_config_from_json({{"schema", 1}, {"keypoint_threshold", 0.85}}).tracker.keypoint_drop_threshold ==
          0.85);
}

TEST_CASE("sweep rows follow value order regardless of worker count")
{
    const Data d = make_data(small_calibrated(), 2);
    const std::vector<double> values{0.85, 0.5, 0.7, 0.6, 0.8};
    const auto one = run_sweep(d.det, d.gt, {}, SweepAxis::keypoint_threshold, values, 1);
    const auto four = run_sweep(d.det, d.gt, {}, SweepAxis::keypoint_threshold, values, 4);
    CHECK(sweep_csv(one, SweepAxis::keypoint_threshold) == sweep_csv(four, SweepAxis::keypoint_threshold));
    for (std::size_t i = 0; i < values.size(); ++i) CHECK(one[i].value == values[i]);
    CHECK(sweep_csv(one, SweepAxis::keypoint_threshold).rfind("Threshold,AP,MOTA\n", 0) == 0);
    CHECK(sweep_csv(one, SweepAxis::bbox_threshold).rfind("Threshold,Precision,Recall\n", 0) == 0);
    CHECK_THROWS_AS(run_sweep(d.det, d.gt, {}, SweepAxis::bbox_threshold, std::vector<double>{0.5}, 1),
                    ContractError);
}

TEST_CASE("a single sweep point equals a direct run")
{
    const Data d = make_data(small_calibrated(), 1);
    PipelineConfig c;
    const auto rows = run_sweep(d.det, d.gt, c, SweepAxis::bbox_threshold, std::vector<double>{0.2, 0.6}, 2);
    c.candidate_threshold = 0.6;
    const RunResult r = run_pipeline(d.det, d.gt, c);
    CHECK(rows[1].ap_total == r.ap.total);
    CHECK(rows[1].mota_total == r.mot.total_mota);
    CHECK(rows[1].precision == r.detection.precision);
    CHECK(rows[1].recall == r.detection.recall);
}

TEST_CASE("raising the candidate threshold trades recall for precision")
{
    const Data d = make_data(SynthSpec::posetrack_calibrated(), 20);
    const std::vector<double> values{0.1, 0.3, 0.5, 0.7, 0.9};
    const auto rows = run_sweep(d.det, d.gt, {}, SweepAxis::bbox_threshold, values, 2);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].recall <= rows[i - 1].recall);
        CHECK(rows[i].precision >= rows[i - 1].precision);
    }
    CHECK(rows.back().recall < rows.front().recall);
    CHECK(rows.back().precision > rows.front().precision);
}

TEST_CASE("ensembling a model with itself changes nothing")
{
    const Data d = make_data(small_calibrated(), 2);
    PipelineConfig c;
    const RunResult base = run_pipeline(d.det, d.gt, c);
    for (EnsembleMode m : {EnsembleMode::average, EnsembleMode::expert}) {
        c.ensemble = m;
        const RunResult r = run_pipeline(d.det, d.gt, c, d.det);
        CHECK(save_predictions(r.tracked) == save_predictions(base.tracked));
        CHECK(r.ap.total == base.ap.total);
    }
    c.ensemble = EnsembleMode::average;
    CHECK_THROWS_AS(run_pipeline(d.det, d.gt, c), ContractError);
}

TEST_CASE("pipeline runs are byte-identical")
{
    const Data d = make_data(small_calibrated(), 2);
    const RunResult a = run_pipeline(d.det, d.gt, {}), b = run_pipeline(d.det, d.gt, {});
    CHECK(save_predictions(a.tracked) == save_predictions(b.tracked));
    CHECK(run_report_json(a).dump() == run_report_json(b).dump());
}

TEST_CASE("generate_set names and seeds")
{
    SynthSpec s = SynthSpec::noiseless();
    s.name = "clip";
    s.seed = 10;
    const auto set = generate_set(s, 3);
    REQUIRE(set.size() == 3);
    CHECK(set[2].gt.name == "clip-2");
    s.seed = 12;
    Sequence renamed = generate(s).det;
    renamed.name = "clip-2";
    CHECK(save_predictions(set[2].det) == save_predictions(renamed));
}
