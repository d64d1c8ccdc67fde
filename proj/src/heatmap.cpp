#include "topdown/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace topdown {

void validate(const Heatmap& h)
{
    if (h.grid.rows() < 1 || h.grid.cols() < 1) throw ContractError("heatmap: empty grid");
    if (!(h.stride > 0.0) || !std::isfinite(h.stride)) throw ContractError("heatmap: bad stride");
    if (!h.grid.allFinite()) throw ContractError("heatmap: non-finite score");
    if (h.grid.minCoeff() < 0.0 || h.grid.maxCoeff() > 1.0)
        throw ContractError("heatmap: score outside [0,1]");
}

void validate(const HeatmapStack& stack)
{
    const Heatmap& first = stack.maps[0];
    for (Joint j : kAllJoints) {
        const Heatmap& h = stack.maps[index(j)];
        validate(h);
        if (h.joint != j) throw ContractError("heatmap stack: map slot holds wrong joint");
        if (h.grid.rows() != first.grid.rows() || h.grid.cols() != first.grid.cols() ||
            h.stride != first.stride)
            throw ContractError("heatmap stack: maps disagree on size or stride");
    }
}

namespace {

double quarter_shift(double lower, double upper)
{
    if (upper > lower) return 0.25;
    if (upper < lower) return -0.25;
    return 0.0;
}

} // namespace

Eigen::Vector2d cell_position(const Heatmap& h, Eigen::Index row, Eigen::Index col,
                              const Eigen::Vector2d& origin, bool refine)
{
    double dx = 0.0, dy = 0.0;
    if (refine) {
        if (col > 0 && col + 1 < h.grid.cols())
            dx = quarter_shift(h.grid(row, col - 1), h.grid(row, col + 1));
        if (row > 0 && row + 1 < h.grid.rows())
            dy = quarter_shift(h.grid(row - 1, col), h.grid(row + 1, col));
    }
    return origin + h.stride * Eigen::Vector2d(static_cast<double>(col) + 0.5 + dx,
                                               static_cast<double>(row) + 0.5 + dy);
}

Keypoint decode_argmax(const Heatmap& h, const Eigen::Vector2d& origin, bool refine)
{
    validate(h);
    Eigen::Index best_r = 0, best_c = 0;
    double best = h.grid(0, 0);
    // Row-major scan with strict comparison keeps the first (row, col) on ties.
    for (Eigen::Index r = 0; r < h.grid.rows(); ++r)
        for (Eigen::Index c = 0; c < h.grid.cols(); ++c)
            if (h.grid(r, c) > best) {
                best = h.grid(r, c);
                best_r = r;
                best_c = c;
            }

    Keypoint kp;
    kp.joint = h.joint;
    kp.position = cell_position(h, best_r, best_c, origin, refine);
    kp.confidence = best;
    kp.present = true;
    return kp;
}

std::vector<Peak> local_maxima(const Heatmap& h, const Eigen::Vector2d& origin,
                               std::size_t max_peaks, bool refine)
{
    validate(h);
    const Eigen::Index rows = h.grid.rows(), cols = h.grid.cols();
    std::vector<Peak> peaks;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            const double v = h.grid(r, c);
            bool is_max = true;
            for (Eigen::Index dr = -1; dr <= 1 && is_max; ++dr)
                for (Eigen::Index dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const Eigen::Index rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= rows || cc >= cols) continue;
                    if (h.grid(rr, cc) > v) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) peaks.push_back({r, c, v, cell_position(h, r, c, origin, refine)});
        }
    }
    // Scan order is (row, col), so a stable sort by score keeps that tie order.
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const Peak& a, const Peak& b) { return a.score > b.score; });
    if (peaks.size() > max_peaks) peaks.resize(max_peaks);
    return peaks;
}

PoseNmsResult cross_heatmap_nms(const HeatmapStack& stack, double radius, bool refine)
{
    if (!(radius >= 0.0)) throw ContractError("cross_heatmap_nms: negative radius");
    validate(stack);

    std::array<std::vector<Peak>, kNumJoints> candidates;
    for (Joint j : kAllJoints)
        candidates[index(j)] = local_maxima(stack.maps[index(j)], stack.origin, kMaxPeaksPerMap, refine);

    std::array<std::size_t, kNumJoints> order;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return candidates[a].front().score > candidates[b].front().score;
    });

    PoseNmsResult result;
    std::vector<Eigen::Vector2d> accepted;
    for (std::size_t j : order) {
        const Heatmap& map = stack.maps[j];
        bool placed = false;
        for (const Peak& peak : candidates[j]) {
            const bool collides = std::any_of(accepted.begin(), accepted.end(), [&](const auto& p) {
                return (p - peak.position).norm() < radius;
            });
            if (collides) continue;
            Keypoint& kp = result.keypoints[j];
            kp.joint = map.joint;
            kp.position = peak.position;
            kp.confidence = peak.score;
            kp.present = true;
            placed = true;
            break;
        }
        if (!placed) {
            result.keypoints[j] = decode_argmax(map, stack.origin, refine);
            result.fallback[j] = true;
        }
        accepted.push_back(result.keypoints[j].position);
    }
    return result;
}

std::vector<std::size_t> ohkm_select(std::span<const double> losses, std::size_t k)
{
    if (k < 1 || k > losses.size())
        throw ContractError("ohkm_select: k=" + std::to_string(k) + " out of range [1, " +
                            std::to_string(losses.size()) + "]");
    for (double l : losses)
        if (!std::isfinite(l) || l < 0.0)
            throw ContractError("ohkm_select: losses must be finite and non-negative");

    std::vector<std::size_t> idx(losses.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

HeatmapStack load_heatmap_stack(std::string_view text)
{
    using nlohmann::json;
    json doc = json::parse(text.begin(), text.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ParseError("heatmaps: malformed JSON");
    try {
        const auto width = doc.at("width").get<Eigen::Index>();
        const auto height = doc.at("height").get<Eigen::Index>();
        const double stride = doc.at("stride").get<double>();
        if (width < 1 || height < 1) throw ParseError("heatmaps: width/height must be >= 1");

        HeatmapStack stack;
        if (doc.contains("origin")) {
            const json& o = doc.at("origin");
            stack.origin = {o.at(0).get<double>(), o.at(1).get<double>()};
        }
        const json& maps = doc.at("maps");
        for (Joint j : kAllJoints) {
            const std::string name(joint_name(j));
            if (!maps.contains(name)) throw ParseError("heatmaps.maps: missing joint '" + name + "'");
            const auto values = maps.at(name).get<std::vector<double>>();
            if (values.size() != static_cast<std::size_t>(width * height))
                throw ParseError("heatmaps.maps." + name + ": expected " +
                                 std::to_string(width * height) + " values");
            Heatmap& h = stack.maps[index(j)];
            h.joint = j;
            h.stride = stride;
            h.grid = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                    Eigen::RowMajor>>(values.data(), height, width);
        }
        validate(stack);
        return stack;
    } catch (const json::exception& e) {
        throw ParseError(std::string("heatmaps: ") + e.what());
    } catch (const ContractError& e) {
        throw ParseError(e.what());
    }
}

} // namespace topdown
