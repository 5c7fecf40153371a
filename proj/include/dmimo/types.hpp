#pragma once

#include <cstddef>
#include <limits>

#include <Eigen/Core>

namespace dmimo {

// Index types. All indices are zero-based; pilot 0 is the first of the
// Lp orthonormal sequences.
using ApIndex = std::size_t;
using UeIndex = std::size_t;
using PilotIndex = std::size_t;

inline constexpr PilotIndex kUnassigned = std::numeric_limits<PilotIndex>::max();

/// 2-D position in meters.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// M x T matrix indexed (ap, ue), linear scale.
using ApUeMatrix = Eigen::MatrixXd;

} // namespace dmimo
