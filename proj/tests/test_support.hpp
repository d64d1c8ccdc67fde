#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "topdown/model.hpp"
#include "topdown/synth.hpp"

namespace topdown::test {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Pose make_pose(const std::vector<std::pair<Joint, Eigen::Vector2d>>& pts, double conf = 1.0,
                      double det_score = 1.0)
{
    Pose p;
    p.det_score = det_score;
    for (const auto& [j, xy] : pts) p[j] = {j, xy, conf, true};
    return p;
}

// Template skeleton scaled to `height` pixels and centred at `c`, all joints present.
inline Pose skeleton_pose(const Eigen::Vector2d& c, double height, double conf = 1.0, double det_score = 1.0)
{
    Pose p;
    p.det_score = det_score;
    for (Joint j : kAllJoints) p[j] = {j, c + height * skeleton_template()[index(j)], conf, true};
    return p;
}

// Random keypoints scattered in a box; each joint present with probability p_present.
inline Pose random_pose(Rng& rng, double p_present = 0.8)
{
    Pose p;
    p.det_score = uniform(rng, 0.0, 1.0);
    const double x0 = uniform(rng, -200.0, 800.0), y0 = uniform(rng, -200.0, 600.0);
    const double w = uniform(rng, 5.0, 300.0), h = uniform(rng, 5.0, 300.0);
    for (Joint j : kAllJoints) {
        p[j].position = {x0 + uniform(rng, 0.0, w), y0 + uniform(rng, 0.0, h)};
        p[j].confidence = uniform(rng, 0.0, 1.0);
        p[j].present = uniform(rng, 0.0, 1.0) < p_present;
    }
    return p;
}

inline BBox random_box(Rng& rng, double extent = 100.0)
{
    const double x = uniform(rng, 0.0, extent), y = uniform(rng, 0.0, extent);
    return {x, y, x + uniform(rng, 1.0, extent / 2), y + uniform(rng, 1.0, extent / 2), uniform(rng, 0.0, 1.0)};
}

} // namespace topdown::test
