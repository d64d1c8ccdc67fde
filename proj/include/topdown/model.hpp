#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace topdown {

// Error hierarchy. The CLI maps each family to an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document or unreadable file.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A precondition of an operation was violated by otherwise well-formed data.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Geometry that cannot produce a meaningful result (too few points, zero area).
class DegenerateInputError : public ContractError {
public:
    using ContractError::ContractError;
};

// PoseTrack 15-joint skeleton.
enum class Joint : std::uint8_t {
    nose,
    head_bottom,
    head_top,
    left_shoulder,
    right_shoulder,
    left_elbow,
    right_elbow,
    left_wrist,
    right_wrist,
    left_hip,
    right_hip,
    left_knee,
    right_knee,
    left_ankle,
    right_ankle,
};

inline constexpr std::size_t kNumJoints = 15;

// Column groups used by every per-joint report, in report order.
enum class EvalGroup : std::uint8_t { head, shoulder, elbow, wrist, hip, knee, ankle };

inline constexpr std::size_t kNumGroups = 7;

inline constexpr std::array<Joint, kNumJoints> kAllJoints = {
    Joint::nose,        Joint::head_bottom, Joint::head_top,    Joint::left_shoulder,
    Joint::right_shoulder, Joint::left_elbow, Joint::right_elbow, Joint::left_wrist,
    Joint::right_wrist, Joint::left_hip,    Joint::right_hip,   Joint::left_knee,
    Joint::right_knee,  Joint::left_ankle,  Joint::right_ankle,
};

inline constexpr std::array<EvalGroup, kNumGroups> kAllGroups = {
    EvalGroup::head, EvalGroup::shoulder, EvalGroup::elbow, EvalGroup::wrist,
    EvalGroup::hip,  EvalGroup::knee,     EvalGroup::ankle,
};

constexpr std::size_t index(Joint j) { return static_cast<std::size_t>(j); }
constexpr std::size_t index(EvalGroup g) { return static_cast<std::size_t>(g); }

constexpr EvalGroup joint_group(Joint j)
{
    switch (j) {
    case Joint::nose:
    case Joint::head_bottom:
    case Joint::head_top: return EvalGroup::head;
    case Joint::left_shoulder:
    case Joint::right_shoulder: return EvalGroup::shoulder;
    case Joint::left_elbow:
    case Joint::right_elbow: return EvalGroup::elbow;
    case Joint::left_wrist:
    case Joint::right_wrist: return EvalGroup::wrist;
    case Joint::left_hip:
    case Joint::right_hip: return EvalGroup::hip;
    case Joint::left_knee:
    case Joint::right_knee: return EvalGroup::knee;
    case Joint::left_ankle:
    case Joint::right_ankle: return EvalGroup::ankle;
    }
    return EvalGroup::head;
}

std::string_view joint_name(Joint j);
std::optional<Joint> joint_from_name(std::string_view name);

/// Short column label as printed in reports: Head, Shou, Elb, Wri, Hip, Knee, Ankl.
std::string_view group_label(EvalGroup g);

template <typename Scalar>
struct BasicBox {
    Scalar x1{0};
    Scalar y1{0};
    Scalar x2{0};
    Scalar y2{0};
    Scalar score{0};

    Scalar width() const { return x2 - x1; }
    Scalar height() const { return y2 - y1; }
    Scalar area() const { return width() * height(); }
    Eigen::Matrix<Scalar, 2, 1> center() const
    {
        return {(x1 + x2) / Scalar(2), (y1 + y2) / Scalar(2)};
    }

    bool operator==(const BasicBox&) const = default;
};

using BBox = BasicBox<double>;

struct Keypoint {
    Joint joint{Joint::nose};
    Eigen::Vector2d position{0.0, 0.0};
    double confidence{0.0};
    bool present{false};

    bool operator==(const Keypoint& o) const
    {
        return joint == o.joint && position == o.position && confidence == o.confidence &&
               present == o.present;
    }
};

struct Pose {
    std::array<Keypoint, kNumJoints> keypoints;
    double det_score{0.0};
    std::optional<BBox> bbox;
    std::optional<int> track_id;

    Pose();

    Keypoint& operator[](Joint j) { return keypoints[index(j)]; }
    const Keypoint& operator[](Joint j) const { return keypoints[index(j)]; }

    std::size_t present_count() const;

    bool operator==(const Pose&) const = default;
};

struct Frame {
    int index{0};
    int width{0};
    int height{0};
    std::vector<Pose> poses;

    bool operator==(const Frame&) const = default;
};

struct Sequence {
    std::string name;
    std::vector<Frame> frames;

    bool operator==(const Sequence&) const = default;
};

/// Checks the type invariants (confidence range, finite coordinates, strictly
/// increasing frame indices, shared frame size). Throws ContractError.
void validate(const Sequence& seq);

} // namespace topdown
