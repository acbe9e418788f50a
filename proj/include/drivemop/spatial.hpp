#pragma once

#include "drivemop/dataset.hpp"

#include <string>

namespace drivemop {

// Frame geometry constants behind the coordinate heuristics.
namespace frame_geometry {
inline constexpr int kWidth = kFrameWidth;
inline constexpr int kHeight = kFrameHeight;
inline constexpr int kXMidline = kWidth / 2;   // 800
inline constexpr int kYMidline = kHeight / 2;  // 450
}  // namespace frame_geometry

enum class HorizontalRegion { LeftHalf, RightHalf };
enum class VerticalRegion { Upper, Lower };

// Half-open midline convention: the midline pixel itself counts as
// right-half / lower region.
HorizontalRegion horizontal_region(int x);  // throws std::out_of_range outside [0, 1600)
VerticalRegion vertical_region(int y);      // throws std::out_of_range outside [0, 900)

enum class FrontBack { Ahead, Behind };
enum class Laterality { Left, Right, Center };

struct EgoRelation {
    FrontBack front_back;
    Laterality side;

    bool operator==(const EgoRelation&) const = default;
};

// Every view maps to exactly one relation; BACK views are always Behind.
EgoRelation relative_direction(CameraView view);

// Deterministic one-sentence description of where a referenced object sits
// relative to the ego vehicle, composed from the three rules above.
std::string grounding_hint(const ObjectRef& ref);

}  // namespace drivemop
