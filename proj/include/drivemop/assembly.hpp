#pragma once

#include "drivemop/dataset.hpp"
#include "drivemop/image.hpp"
#include "drivemop/router.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace drivemop {

class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Current-frame views to transmit, in canonical order. ReferencedOnly with no
// references degrades to all six; `degraded` reports that when non-null.
std::vector<CameraView> select_views(const TaskPlan& plan, const Sample& sample,
                                     bool* degraded = nullptr);

// Magenta "+" centered at (x, y): arm half-length 24 px, stroke 5 px, clipped
// at the borders. Input is untouched; pixels outside the two arm rectangles
// are bit-identical to the input.
inline constexpr int kMarkerArm = 24;
inline constexpr int kMarkerStroke = 5;
Image draw_marker(const Image& image, int x, int y);

// 256x256 window whose top-left is clamped so the crop stays inside the source
// and always contains (x, y). Source must be at least 256 in both dimensions.
inline constexpr int kCropSize = 256;
Image crop_region(const Image& image, int x, int y);

// Labeled 3x2 mosaic of one timestep: tiles resized to 480x270, canonical view
// order, a 30 px label band above each row. Output is exactly 1440x600.
inline constexpr int kTileWidth = 480;
inline constexpr int kTileHeight = 270;
inline constexpr int kLabelBand = 30;
inline constexpr int kMosaicWidth = 3 * kTileWidth;                     // 1440
inline constexpr int kMosaicHeight = 2 * kTileHeight + 2 * kLabelBand;  // 600
Image compose_history_grid(const std::map<CameraView, Image>& frame, const std::string& label);

struct VisualPayload {
    std::vector<Image> items;
    std::vector<std::string> warnings;
};

struct AssemblyContext {
    std::filesystem::path image_root;
    std::filesystem::path reference_image;  // required for Corruption-MCQs
    int transmit_max_side = 0;              // 0 = native resolution
};

// Full payload for one sample: reference image (corruption), history per mode
// (T-2 then T-1), current-frame views (marked when the plan says so), then one
// crop per reference. Missing history degrades with a warning; unreadable
// images throw AssemblyError.
VisualPayload assemble_payload(const TaskPlan& plan, const Sample& sample,
                               const AssemblyContext& ctx);

// Debug dump used by --dump-payload: every item as PNG named
// <sample_id>_<ordinal>_<caption>.png (caption sanitized for the filesystem).
void dump_payload(const VisualPayload& payload, const std::string& sample_id,
                  const std::filesystem::path& dir);

}  // namespace drivemop
