#pragma once

#include <array>
#include <string_view>

#include <json.hpp>

#include "topdown/model.hpp"

namespace topdown {

enum class ExpertChoice { model_a, model_b, average };

/// Per-joint routing between two models' predictions.
struct ExpertMap {
    std::array<ExpertChoice, kNumJoints> choice{};

    ExpertChoice operator[](Joint j) const { return choice[index(j)]; }
    ExpertChoice& operator[](Joint j) { return choice[index(j)]; }

    static ExpertMap uniform(ExpertChoice c);

    /// Shoulders and hips from model A, elbows, wrists, knees and ankles from
    /// model B, head joints averaged.
    static ExpertMap defaults();

    bool operator==(const ExpertMap&) const = default;
};

std::string_view expert_choice_name(ExpertChoice c);
ExpertChoice expert_choice_from_name(std::string_view name);

/// Joint name -> "A" | "B" | "AVG". Missing joints keep the default routing.
ExpertMap expert_map_from_json(const nlohmann::json& doc);
nlohmann::json expert_map_to_json(const ExpertMap& map);

/// Per-joint mean of coordinates and confidence when both are present, a copy
/// of the present one otherwise. det_score and box are averaged too.
Pose fuse_average(const Pose& a, const Pose& b);

/// Routes each joint by the map; AVG joints follow fuse_average.
Pose fuse_expert(const Pose& a, const Pose& b, const ExpertMap& map);

} // namespace topdown
