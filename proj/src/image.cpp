#include "drivemop/image.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace drivemop {

Image Image::solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image img;
    img.width = w;
    img.height = h;
    img.rgb.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < img.rgb.size(); i += 3) {
        img.rgb[i] = r;
        img.rgb[i + 1] = g;
        img.rgb[i + 2] = b;
    }
    return img;
}

Image load_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw ImageError("cannot decode image " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);

    Image img;
    img.width = rgb.cols;
    img.height = rgb.rows;
    img.rgb.resize(static_cast<std::size_t>(rgb.cols) * rgb.rows * 3);
    if (rgb.isContinuous()) {
        std::memcpy(img.rgb.data(), rgb.data, img.rgb.size());
    } else {
        for (int y = 0; y < rgb.rows; ++y) {
            std::memcpy(img.rgb.data() + static_cast<std::size_t>(y) * rgb.cols * 3, rgb.ptr(y),
                        static_cast<std::size_t>(rgb.cols) * 3);
        }
    }
    return img;
}

std::vector<std::uint8_t> encode_png(const Image& image) {
    if (image.width <= 0 || image.height <= 0) throw ImageError("cannot encode empty image");
    cv::Mat rgb(image.height, image.width, CV_8UC3,
                const_cast<std::uint8_t*>(image.rgb.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    std::vector<std::uint8_t> out;
    if (!cv::imencode(".png", bgr, out)) throw ImageError("PNG encoding failed");
    return out;
}

void save_png(const Image& image, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageError("short write to " + path.string());
}

Image resize_box(const Image& source, int out_width, int out_height) {
    if (source.width <= 0 || source.height <= 0) throw ImageError("resize of empty image");
    if (out_width <= 0 || out_height <= 0) throw ImageError("resize to empty size");

    Image out;
    out.width = out_width;
    out.height = out_height;
    out.caption = source.caption;
    out.rgb.resize(static_cast<std::size_t>(out_width) * out_height * 3);

    const double sx = static_cast<double>(source.width) / out_width;
    const double sy = static_cast<double>(source.height) / out_height;

    for (int dy = 0; dy < out_height; ++dy) {
        const double y0 = dy * sy;
        const double y1 = (dy + 1) * sy;
        const int iy0 = static_cast<int>(std::floor(y0));
        const int iy1 = std::min(source.height, static_cast<int>(std::ceil(y1)));
        for (int dx = 0; dx < out_width; ++dx) {
            const double x0 = dx * sx;
            const double x1 = (dx + 1) * sx;
            const int ix0 = static_cast<int>(std::floor(x0));
            const int ix1 = std::min(source.width, static_cast<int>(std::ceil(x1)));

            double acc[3] = {0.0, 0.0, 0.0};
            double area = 0.0;
            for (int sy_i = iy0; sy_i < iy1; ++sy_i) {
                const double wy = std::min<double>(sy_i + 1, y1) - std::max<double>(sy_i, y0);
                if (wy <= 0.0) continue;
                for (int sx_i = ix0; sx_i < ix1; ++sx_i) {
                    const double wx = std::min<double>(sx_i + 1, x1) - std::max<double>(sx_i, x0);
                    if (wx <= 0.0) continue;
                    const double w = wx * wy;
                    const std::uint8_t* p = source.px(sx_i, sy_i);
                    acc[0] += w * p[0];
                    acc[1] += w * p[1];
                    acc[2] += w * p[2];
                    area += w;
                }
            }
            std::uint8_t* q = out.px(dx, dy);
            for (int c = 0; c < 3; ++c) {
                const double v = area > 0.0 ? acc[c] / area : 0.0;
                q[c] = static_cast<std::uint8_t>(std::lround(std::min(255.0, std::max(0.0, v))));
            }
        }
    }
    return out;
}

namespace {

// 5x7 glyphs, one byte per row, bit 4 = leftmost column.
const std::array<std::uint8_t, 7>* glyph_for(char c) {
    static const std::map<char, std::array<std::uint8_t, 7>> kGlyphs = {
        {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
        {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
        {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
        {'D', {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E}},
        {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
        {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
        {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
        {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
        {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
        {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
        {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
        {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
        {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
        {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
        {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
        {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
        {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
        {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
        {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
        {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
        {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
        {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
        {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
        {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
        {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
        {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
        {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
        {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
        {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
        {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
        {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
        {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
        {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
        {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
        {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
        {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
        {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
        {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
        {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
        {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
        {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
        {',', {0x00, 0x00, 0x00, 0x00, 0x06, 0x04, 0x08}},
        {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
        {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    };
    const char up = (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
    auto it = kGlyphs.find(up);
    return it == kGlyphs.end() ? nullptr : &it->second;
}

}  // namespace

void draw_text(Image& image, int x, int y, std::string_view text, int scale,
               std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    if (scale < 1) scale = 1;
    int cx = x;
    for (char c : text) {
        if (const auto* glyph = glyph_for(c)) {
            for (int row = 0; row < 7; ++row) {
                for (int col = 0; col < 5; ++col) {
                    if (!(((*glyph)[row] >> (4 - col)) & 1)) continue;
                    for (int dy = 0; dy < scale; ++dy) {
                        for (int dx = 0; dx < scale; ++dx) {
                            const int px = cx + col * scale + dx;
                            const int py = y + row * scale + dy;
                            if (!image.in_bounds(px, py)) continue;
                            std::uint8_t* p = image.px(px, py);
                            p[0] = r;
                            p[1] = g;
                            p[2] = b;
                        }
                    }
                }
            }
        }
        cx += 6 * scale;
    }
}

int text_width(std::string_view text, int scale) {
    if (text.empty()) return 0;
    return static_cast<int>(text.size()) * 6 * scale - scale;
}

}  // namespace drivemop
