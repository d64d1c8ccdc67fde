#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "topdown/model.hpp"

namespace topdown {

/// Per-joint score grid. grid(row, col); rows run along y, columns along x.
struct Heatmap {
    Joint joint{Joint::nose};
    Eigen::MatrixXd grid;
    double stride{1.0};
};

struct HeatmapStack {
    std::array<Heatmap, kNumJoints> maps;
    Eigen::Vector2d origin{0.0, 0.0};
};

/// A cell-level peak after optional sub-cell refinement, in pixels.
struct Peak {
    Eigen::Index row{0};
    Eigen::Index col{0};
    double score{0.0};
    Eigen::Vector2d position{0.0, 0.0};
};

inline constexpr std::size_t kMaxPeaksPerMap = 5;
inline constexpr std::size_t kHardKeypoints = 7;

void validate(const Heatmap& h);
void validate(const HeatmapStack& stack);

/// Pixel position of a cell, shifted a quarter cell toward the larger of its
/// two neighbours on each axis when refine is set and both neighbours exist.
Eigen::Vector2d cell_position(const Heatmap& h, Eigen::Index row, Eigen::Index col,
                              const Eigen::Vector2d& origin, bool refine = true);

/// Global maximum, ties to the smallest row then column.
Keypoint decode_argmax(const Heatmap& h, const Eigen::Vector2d& origin, bool refine = true);

/// Cells whose score is >= all eight neighbours, best first (ties by row, col),
/// truncated to max_peaks.
std::vector<Peak> local_maxima(const Heatmap& h, const Eigen::Vector2d& origin,
                               std::size_t max_peaks = kMaxPeaksPerMap, bool refine = true);

struct PoseNmsResult {
    std::array<Keypoint, kNumJoints> keypoints;
    /// Set for joints whose every candidate collided and fell back to argmax.
    std::array<bool, kNumJoints> fallback{};
};

/// Cross-heatmap pose NMS. Joints are visited by descending top-peak score;
/// a joint takes its best local maximum that is not strictly closer than
/// `radius` pixels to a peak already accepted for another joint. When every
/// candidate collides it falls back to decode_argmax. radius = 0 disables
/// suppression.
PoseNmsResult cross_heatmap_nms(const HeatmapStack& stack, double radius, bool refine = true);

/// Online hard keypoint mining: indices of the k largest losses, ties to the
/// lower index, returned in ascending index order.
std::vector<std::size_t> ohkm_select(std::span<const double> losses, std::size_t k = kHardKeypoints);

/// Heatmap fixture: {"stride": s, "origin": [x, y], "width": W, "height": H,
/// "maps": {"<joint>": [W*H row-major floats], ...}} with all 15 joints.
HeatmapStack load_heatmap_stack(std::string_view text);

} // namespace topdown
