#include "drivemop/spatial.hpp"

#include <sstream>
#include <stdexcept>

namespace drivemop {

HorizontalRegion horizontal_region(int x) {
    if (x < 0 || x >= frame_geometry::kWidth) {
        throw std::out_of_range("x=" + std::to_string(x) + " outside [0, 1600)");
    }
    return x < frame_geometry::kXMidline ? HorizontalRegion::LeftHalf : HorizontalRegion::RightHalf;
}

VerticalRegion vertical_region(int y) {
    if (y < 0 || y >= frame_geometry::kHeight) {
        throw std::out_of_range("y=" + std::to_string(y) + " outside [0, 900)");
    }
    return y < frame_geometry::kYMidline ? VerticalRegion::Upper : VerticalRegion::Lower;
}

EgoRelation relative_direction(CameraView view) {
    switch (view) {
        case CameraView::Front: return {FrontBack::Ahead, Laterality::Center};
        case CameraView::FrontLeft: return {FrontBack::Ahead, Laterality::Left};
        case CameraView::FrontRight: return {FrontBack::Ahead, Laterality::Right};
        case CameraView::Back: return {FrontBack::Behind, Laterality::Center};
        case CameraView::BackLeft: return {FrontBack::Behind, Laterality::Left};
        case CameraView::BackRight: return {FrontBack::Behind, Laterality::Right};
    }
    return {FrontBack::Ahead, Laterality::Center};
}

std::string grounding_hint(const ObjectRef& ref) {
    const HorizontalRegion h = horizontal_region(ref.x);
    const VerticalRegion v = vertical_region(ref.y);
    const EgoRelation rel = relative_direction(ref.view);

    std::ostringstream os;
    os << "Object c" << ref.ref_id << " appears in " << cam_key(ref.view) << ", "
       << (h == HorizontalRegion::LeftHalf ? "left" : "right") << "-half, "
       << (v == VerticalRegion::Upper ? "upper" : "lower") << " region; it is "
       << (rel.front_back == FrontBack::Ahead ? "ahead of" : "behind") << " the ego vehicle.";
    return os.str();
}

}  // namespace drivemop
