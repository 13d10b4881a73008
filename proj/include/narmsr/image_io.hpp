#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "narmsr/errors.hpp"
#include "narmsr/image.hpp"

namespace narmsr {

// 8-bit file formats only. Bytes map to samples as byte / 255.0 exactly;
// writing rounds half away from zero and clamps to [0,255].

inline unsigned char sample_to_byte(double v) {
    const long b = std::lround(v * 255.0);
    return static_cast<unsigned char>(std::clamp(b, 0L, 255L));
}

namespace detail {

inline bool has_suffix(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    std::string tail = s.substr(s.size() - suffix.size());
    for (char& c : tail) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return tail == suffix;
}

inline int pnm_read_value(std::istream& in, const std::string& path) {
    // skips whitespace and '#' comments between header tokens
    while (true) {
        const int c = in.peek();
        if (c == EOF) throw io_error("read_image: truncated PNM header in " + path);
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        break;
    }
    int value = 0;
    if (!(in >> value)) throw io_error("read_image: malformed PNM header in " + path);
    return value;
}

inline ImageGrid read_pnm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("read_image: cannot open " + path);
    char magic[2] = {0, 0};
    f.read(magic, 2);
    int channels = 0;
    if (magic[0] == 'P' && magic[1] == '5') channels = 1;
    else if (magic[0] == 'P' && magic[1] == '6') channels = 3;
    else throw io_error("read_image: " + path + " is not binary PGM/PPM");
    const int width = pnm_read_value(f, path);
    const int height = pnm_read_value(f, path);
    const int maxval = pnm_read_value(f, path);
    if (maxval != 255) throw io_error("read_image: only maxval 255 supported in " + path);
    f.get();  // single whitespace after header
    std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * height * channels);
    f.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(f.gcount()) != bytes.size())
        throw io_error("read_image: truncated pixel data in " + path);
    ImageGrid img(height, width, channels);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            for (int ch = 0; ch < channels; ++ch)
                img.at(r, c, ch) =
                    bytes[(static_cast<std::size_t>(r) * width + c) * channels + ch] / 255.0;
    return img;
}

inline void write_pnm(const ImageGrid& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("write_image: cannot open " + path);
    f << (img.channels() == 1 ? "P5" : "P6") << "\n"
      << img.width() << " " << img.height() << "\n255\n";
    std::vector<unsigned char> bytes;
    bytes.reserve(img.size());
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < img.width(); ++c)
            for (int ch = 0; ch < img.channels(); ++ch) bytes.push_back(sample_to_byte(img.at(r, c, ch)));
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw io_error("write_image: write failed for " + path);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

inline ImageGrid read_png(const std::string& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw io_error("read_image: cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw io_error("read_image: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw io_error("read_image: libpng failed on " + path);
    }
    png_init_io(png, fp.get());
    png_read_png(png, info, PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND, nullptr);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (depth != 8 || (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw io_error("read_image: only 8-bit grayscale or RGB PNG supported: " + path);
    }
    const int channels = color == PNG_COLOR_TYPE_GRAY ? 1 : 3;
    png_bytepp rows = png_get_rows(png, info);
    ImageGrid img(static_cast<int>(height), static_cast<int>(width), channels);
    for (png_uint_32 r = 0; r < height; ++r)
        for (png_uint_32 c = 0; c < width; ++c)
            for (int ch = 0; ch < channels; ++ch)
                img.at(static_cast<int>(r), static_cast<int>(c), ch) = rows[r][c * channels + ch] / 255.0;
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline void write_png(const ImageGrid& img, const std::string& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw io_error("write_image: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw io_error("write_image: libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw io_error("write_image: libpng failed on " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), 8,
                 img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    std::vector<unsigned char> bytes(img.size());
    std::vector<png_bytep> rows(img.height());
    const std::size_t row_len = static_cast<std::size_t>(img.width()) * img.channels();
    for (int r = 0; r < img.height(); ++r) {
        rows[r] = bytes.data() + static_cast<std::size_t>(r) * row_len;
        for (int c = 0; c < img.width(); ++c)
            for (int ch = 0; ch < img.channels(); ++ch)
                rows[r][c * img.channels() + ch] = sample_to_byte(img.at(r, c, ch));
    }
    png_set_rows(png, info, rows.data());
    png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace detail

/// Reads .png, .pgm or .ppm by file extension.
inline ImageGrid read_image(const std::string& path) {
    if (detail::has_suffix(path, ".png")) return detail::read_png(path);
    if (detail::has_suffix(path, ".pgm") || detail::has_suffix(path, ".ppm"))
        return detail::read_pnm(path);
    throw io_error("read_image: unsupported extension (use .png, .pgm or .ppm): " + path);
}

/// Writes .png, .pgm (1 channel) or .ppm (3 channels) by file extension.
inline void write_image(const ImageGrid& img, const std::string& path) {
    if (detail::has_suffix(path, ".png")) {
        detail::write_png(img, path);
        return;
    }
    if (detail::has_suffix(path, ".pgm")) {
        if (img.channels() != 1) throw io_error("write_image: .pgm requires a single channel");
        detail::write_pnm(img, path);
        return;
    }
    if (detail::has_suffix(path, ".ppm")) {
        if (img.channels() != 3) throw io_error("write_image: .ppm requires three channels");
        detail::write_pnm(img, path);
        return;
    }
    throw io_error("write_image: unsupported extension (use .png, .pgm or .ppm): " + path);
}

}  // namespace narmsr
