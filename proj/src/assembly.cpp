#include "drivemop/assembly.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

namespace drivemop {

std::vector<CameraView> select_views(const TaskPlan& plan, const Sample& sample, bool* degraded) {
    if (degraded) *degraded = false;
    if (plan.view_policy == ViewPolicy::AllSix) {
        return {kCanonicalViews.begin(), kCanonicalViews.end()};
    }
    const std::vector<ObjectRef> refs = parse_object_refs(sample.question);
    if (refs.empty()) {
        if (degraded) *degraded = true;
        return {kCanonicalViews.begin(), kCanonicalViews.end()};
    }
    std::set<CameraView> wanted;
    for (const ObjectRef& ref : refs) wanted.insert(ref.view);
    std::vector<CameraView> views;
    for (CameraView view : kCanonicalViews) {
        if (wanted.count(view)) views.push_back(view);
    }
    return views;
}

Image draw_marker(const Image& image, int x, int y) {
    if (!image.in_bounds(x, y)) {
        throw AssemblyError("marker center (" + std::to_string(x) + ", " + std::to_string(y) +
                            ") outside " + std::to_string(image.width) + "x" +
                            std::to_string(image.height) + " image");
    }
    Image out = image;
    constexpr int half_stroke = kMarkerStroke / 2;
    auto paint = [&](int x0, int x1, int y0, int y1) {
        x0 = std::max(x0, 0);
        y0 = std::max(y0, 0);
        x1 = std::min(x1, out.width - 1);
        y1 = std::min(y1, out.height - 1);
        for (int py = y0; py <= y1; ++py) {
            for (int px = x0; px <= x1; ++px) {
                std::uint8_t* p = out.px(px, py);
                p[0] = 255;
                p[1] = 0;
                p[2] = 255;
            }
        }
    };
    // horizontal arm, then vertical arm
    paint(x - kMarkerArm, x + kMarkerArm, y - half_stroke, y + half_stroke);
    paint(x - half_stroke, x + half_stroke, y - kMarkerArm, y + kMarkerArm);
    return out;
}

Image crop_region(const Image& image, int x, int y) {
    if (image.width < kCropSize || image.height < kCropSize) {
        throw AssemblyError("source image " + std::to_string(image.width) + "x" +
                            std::to_string(image.height) + " smaller than " +
                            std::to_string(kCropSize) + " crop");
    }
    if (!image.in_bounds(x, y)) {
        throw AssemblyError("crop center (" + std::to_string(x) + ", " + std::to_string(y) +
                            ") outside image");
    }
    const int left = std::clamp(x - kCropSize / 2, 0, image.width - kCropSize);
    const int top = std::clamp(y - kCropSize / 2, 0, image.height - kCropSize);

    Image out;
    out.width = kCropSize;
    out.height = kCropSize;
    out.rgb.resize(static_cast<std::size_t>(kCropSize) * kCropSize * 3);
    for (int row = 0; row < kCropSize; ++row) {
        const std::uint8_t* src = image.px(left, top + row);
        std::uint8_t* dst = out.px(0, row);
        std::copy_n(src, kCropSize * 3, dst);
    }
    std::ostringstream caption;
    caption << image.caption << " crop (" << x << "," << y << ")";
    out.caption = caption.str();
    return out;
}

Image compose_history_grid(const std::map<CameraView, Image>& frame, const std::string& label) {
    for (CameraView view : kCanonicalViews) {
        if (!frame.count(view)) {
            throw AssemblyError("history grid for " + label + " is missing " + cam_key(view));
        }
    }
    Image mosaic = Image::solid(kMosaicWidth, kMosaicHeight, 32, 32, 32);
    mosaic.caption = "MOSAIC " + label;

    constexpr int kTextScale = 2;  // 10x14 glyphs inside the 30 px band
    for (int row = 0; row < 2; ++row) {
        const int band_top = row * (kLabelBand + kTileHeight);
        const int tiles_top = band_top + kLabelBand;
        for (int col = 0; col < 3; ++col) {
            const CameraView view = kCanonicalViews[static_cast<std::size_t>(row * 3 + col)];
            const Image tile = resize_box(frame.at(view), kTileWidth, kTileHeight);
            const int tile_left = col * kTileWidth;
            for (int y = 0; y < kTileHeight; ++y) {
                std::copy_n(tile.px(0, y), kTileWidth * 3, mosaic.px(tile_left, tiles_top + y));
            }
            const std::string text = label + " " + std::string(view_name(view));
            const int tw = text_width(text, kTextScale);
            const int tx = tile_left + std::max(0, (kTileWidth - tw) / 2);
            draw_text(mosaic, tx, band_top + 8, text, kTextScale, 255, 255, 255);
        }
    }
    return mosaic;
}

namespace {

Image load_view(const AssemblyContext& ctx, const Sample& sample, int timestep, CameraView view) {
    const auto frame_it = sample.frames.find(timestep);
    if (frame_it == sample.frames.end()) {
        throw AssemblyError(sample.sample_id + ": timestep " + std::to_string(timestep) +
                            " not present");
    }
    const auto view_it = frame_it->second.find(view);
    if (view_it == frame_it->second.end()) {
        throw AssemblyError(sample.sample_id + ": timestep " + std::to_string(timestep) +
                            " lacks " + cam_key(view));
    }
    std::filesystem::path path(view_it->second);
    if (path.is_relative()) path = ctx.image_root / path;
    return load_image(path);
}

std::string timestep_label(int timestep) {
    return timestep == 0 ? "T=0" : "T-" + std::to_string(-timestep);
}

Image downscale_for_transport(Image image, int max_side) {
    if (max_side <= 0) return image;
    const int long_side = std::max(image.width, image.height);
    if (long_side <= max_side) return image;
    const double scale = static_cast<double>(max_side) / long_side;
    const int w = std::max(1, static_cast<int>(std::lround(image.width * scale)));
    const int h = std::max(1, static_cast<int>(std::lround(image.height * scale)));
    const std::string caption = image.caption;
    Image out = resize_box(image, w, h);
    out.caption = caption;
    return out;
}

}  // namespace

VisualPayload assemble_payload(const TaskPlan& plan, const Sample& sample,
                               const AssemblyContext& ctx) {
    VisualPayload payload;
    const std::vector<ObjectRef> refs = parse_object_refs(sample.question);

    // (a) corruption reference image first
    if (plan.prepend_reference_image) {
        if (ctx.reference_image.empty()) {
            throw AssemblyError(sample.sample_id + ": reference image path not configured");
        }
        Image reference = load_image(ctx.reference_image);
        reference.caption = "REFERENCE";
        payload.items.push_back(std::move(reference));
    }

    bool degraded = false;
    const std::vector<CameraView> current_views = select_views(plan, sample, &degraded);
    if (degraded) {
        payload.warnings.push_back(sample.sample_id +
                                   ": referenced-only policy with no references, sending all six views");
    }

    // (b) history, oldest first
    if (plan.history != HistoryMode::NoHistory) {
        for (int timestep : {-2, -1}) {
            if (!sample.frames.count(timestep)) {
                payload.warnings.push_back(sample.sample_id + ": no frames for " +
                                           timestep_label(timestep) + ", history reduced");
                continue;
            }
            const std::string label = timestep_label(timestep);
            switch (plan.history) {
                case HistoryMode::Grid: {
                    std::map<CameraView, Image> frame;
                    for (CameraView view : kCanonicalViews) {
                        frame[view] = load_view(ctx, sample, timestep, view);
                    }
                    payload.items.push_back(compose_history_grid(frame, label));
                    break;
                }
                case HistoryMode::FrontOnly: {
                    Image img = load_view(ctx, sample, timestep, CameraView::Front);
                    img.caption = label + " " + cam_key(CameraView::Front);
                    payload.items.push_back(downscale_for_transport(std::move(img),
                                                                    ctx.transmit_max_side));
                    break;
                }
                case HistoryMode::Referenced: {
                    for (CameraView view : current_views) {
                        Image img = load_view(ctx, sample, timestep, view);
                        img.caption = label + " " + cam_key(view);
                        payload.items.push_back(downscale_for_transport(std::move(img),
                                                                        ctx.transmit_max_side));
                    }
                    break;
                }
                case HistoryMode::NoHistory:
                    break;
            }
        }
    }

    // (c) current-frame full views, markers on referenced points
    std::map<CameraView, Image> originals;  // unmarked, reused for crops
    for (CameraView view : current_views) {
        Image img = load_view(ctx, sample, 0, view);
        img.caption = "T=0 " + cam_key(view);
        originals[view] = img;
        if (plan.use_marker) {
            for (const ObjectRef& ref : refs) {
                if (ref.view == view) img = draw_marker(img, ref.x, ref.y);
            }
        }
        payload.items.push_back(downscale_for_transport(std::move(img), ctx.transmit_max_side));
    }

    // (d) one crop per reference, from the unmarked current view
    if (plan.use_crop) {
        for (const ObjectRef& ref : refs) {
            auto it = originals.find(ref.view);
            if (it == originals.end()) {
                // reference to a view outside the selected set; fetch it directly
                Image img = load_view(ctx, sample, 0, ref.view);
                img.caption = "T=0 " + cam_key(ref.view);
                it = originals.emplace(ref.view, std::move(img)).first;
            }
            Image crop = crop_region(it->second, ref.x, ref.y);
            std::ostringstream caption;
            caption << "T=0 " << cam_key(ref.view) << " crop c" << ref.ref_id << " (" << ref.x
                    << "," << ref.y << ")";
            crop.caption = caption.str();
            payload.items.push_back(std::move(crop));
        }
    }

    return payload;
}

void dump_payload(const VisualPayload& payload, const std::string& sample_id,
                  const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    int ordinal = 0;
    for (const Image& item : payload.items) {
        std::string tag = item.caption;
        for (char& c : tag) {
            if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') c = '_';
        }
        std::ostringstream name;
        name << sample_id << '_' << ordinal << '_' << tag << ".png";
        save_png(item, dir / name.str());
        ++ordinal;
    }
}

}  // namespace drivemop
