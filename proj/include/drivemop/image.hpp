#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace drivemop {

// Decoded 8-bit RGB raster plus the caption that travels with it.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // 3 bytes per pixel, row-major
    std::string caption;

    static Image solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    std::uint8_t* px(int x, int y) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const std::uint8_t* px(int x, int y) const {
        return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    bool same_pixels(const Image& other) const {
        return width == other.width && height == other.height && rgb == other.rgb;
    }
};

class ImageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// JPEG/PNG file codecs. Decoding failures throw ImageError naming the path.
Image load_image(const std::filesystem::path& path);
void save_png(const Image& image, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_png(const Image& image);

// Area-average downscale/upscale. Deterministic for identical inputs.
Image resize_box(const Image& source, int out_width, int out_height);

// 5x7 bitmap glyphs (A-Z, 0-9 and a little punctuation), scaled by an integer
// factor. Unknown characters render as blanks.
void draw_text(Image& image, int x, int y, std::string_view text, int scale,
               std::uint8_t r, std::uint8_t g, std::uint8_t b);
int text_width(std::string_view text, int scale);

}  // namespace drivemop
