#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "narmsr/errors.hpp"

namespace narmsr {

/// Dense raster of double samples in [0,1], stored planar:
/// data[(ch * height + row) * width + col]. Single plane for grayscale,
/// three planes (R, G, B) for color. All library operations treat an
/// ImageGrid as an immutable value and return new grids.
class ImageGrid {
public:
    ImageGrid() = default;

    ImageGrid(int height, int width, int channels = 1, double fill = 0.0) {
        if (height <= 0 || width <= 0 || (channels != 1 && channels != 3))
            throw std::invalid_argument("ImageGrid: dimensions must be positive, channels 1 or 3");
        height_ = height;
        width_ = width;
        channels_ = channels;
        data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
    }

    static ImageGrid from_data(int height, int width, int channels, std::vector<double> samples) {
        ImageGrid img(height, width, channels);
        if (samples.size() != img.data_.size())
            throw std::invalid_argument("ImageGrid: sample count does not match dimensions");
        img.data_ = std::move(samples);
        return img;
    }

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    std::size_t pixels() const { return static_cast<std::size_t>(height_) * width_; }

    double& at(int row, int col, int ch = 0) {
#ifdef NARMSR_BOUNDS_CHECK
        check_index(row, col, ch);
#endif
        return data_[index(row, col, ch)];
    }
    double at(int row, int col, int ch = 0) const {
#ifdef NARMSR_BOUNDS_CHECK
        check_index(row, col, ch);
#endif
        return data_[index(row, col, ch)];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    const std::vector<double>& samples() const { return data_; }

    /// Pointer to the start of one channel plane.
    double* plane(int ch) { return data_.data() + static_cast<std::size_t>(ch) * pixels(); }
    const double* plane(int ch) const { return data_.data() + static_cast<std::size_t>(ch) * pixels(); }

    bool same_shape(const ImageGrid& other) const {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t index(int row, int col, int ch) const {
        return (static_cast<std::size_t>(ch) * height_ + row) * width_ + col;
    }
#ifdef NARMSR_BOUNDS_CHECK
    void check_index(int row, int col, int ch) const {
        if (row < 0 || row >= height_ || col < 0 || col >= width_ || ch < 0 || ch >= channels_)
            throw std::logic_error("ImageGrid: index out of bounds");
    }
#endif

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Center and odd side length of a square patch.
struct PatchRef {
    int center_row = 0;
    int center_col = 0;
    int size = 3;
};

inline void require_single_channel(const ImageGrid& img, const char* where) {
    if (img.channels() != 1)
        throw std::invalid_argument(std::string(where) + ": expects a single-channel image");
}

/// Whole-sample symmetric reflection of an arbitrary index into [0, n).
/// The border mirrors about the edge sample, so the edge is not repeated:
/// indices ..., 2, 1, [0, 1, ..., n-1], n-2, n-3, ...
inline int reflect_index(int i, int n) {
    assert(n > 0);
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    int m = i % period;
    if (m < 0) m += period;
    if (m >= n) m = period - m;
    return m;
}

/// BT.601 full-range luma: Y = 0.299 R + 0.587 G + 0.114 B.
inline ImageGrid rgb_to_luminance(const ImageGrid& img) {
    if (img.channels() != 3)
        throw std::invalid_argument("rgb_to_luminance: expects a 3-channel image");
    ImageGrid out(img.height(), img.width(), 1);
    const double* r = img.plane(0);
    const double* g = img.plane(1);
    const double* b = img.plane(2);
    double* y = out.plane(0);
    const std::size_t n = img.pixels();
    for (std::size_t i = 0; i < n; ++i)
        y[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return out;
}

/// Pad by `margin` on every side with whole-sample symmetric reflection.
inline ImageGrid pad_symmetric(const ImageGrid& img, int margin) {
    if (margin < 0)
        throw std::invalid_argument("pad_symmetric: margin must be nonnegative");
    if (margin >= std::min(img.height(), img.width()))
        throw std::invalid_argument("pad_symmetric: margin must be smaller than both image sides");
    if (margin == 0) return img;
    const int h = img.height(), w = img.width(), c = img.channels();
    ImageGrid out(h + 2 * margin, w + 2 * margin, c);
    for (int ch = 0; ch < c; ++ch) {
        const double* src = img.plane(ch);
        double* dst = out.plane(ch);
        for (int r = 0; r < h + 2 * margin; ++r) {
            const int sr = reflect_index(r - margin, h);
            for (int col = 0; col < w + 2 * margin; ++col) {
                const int sc = reflect_index(col - margin, w);
                dst[static_cast<std::size_t>(r) * (w + 2 * margin) + col] =
                    src[static_cast<std::size_t>(sr) * w + sc];
            }
        }
    }
    return out;
}

/// Samples of a square patch in row-major order. The patch must lie inside
/// the image; callers wanting border patches pad first. This row-major
/// vectorization fixes the column layout used by the AR weight solve.
inline std::vector<double> extract_patch(const ImageGrid& img, const PatchRef& p) {
    require_single_channel(img, "extract_patch");
    if (p.size < 3 || p.size % 2 == 0)
        throw std::invalid_argument("extract_patch: patch size must be odd and >= 3");
    const int half = p.size / 2;
    if (p.center_row - half < 0 || p.center_col - half < 0 ||
        p.center_row + half >= img.height() || p.center_col + half >= img.width())
        throw std::invalid_argument("extract_patch: patch out of bounds (pad the image first)");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(p.size) * p.size);
    for (int dr = -half; dr <= half; ++dr)
        for (int dc = -half; dc <= half; ++dc)
            out.push_back(img.at(p.center_row + dr, p.center_col + dc));
    return out;
}

/// Central (H-2m) x (W-2m) region.
inline ImageGrid crop_border(const ImageGrid& img, int margin) {
    if (margin < 0)
        throw std::invalid_argument("crop_border: margin must be nonnegative");
    if (2 * margin >= std::min(img.height(), img.width()))
        throw std::invalid_argument("crop_border: margin too large for image");
    if (margin == 0) return img;
    const int h = img.height() - 2 * margin, w = img.width() - 2 * margin;
    ImageGrid out(h, w, img.channels());
    for (int ch = 0; ch < img.channels(); ++ch)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                out.at(r, c, ch) = img.at(r + margin, c + margin, ch);
    return out;
}

inline ImageGrid clamp01(const ImageGrid& img) {
    ImageGrid out = img;
    double* d = out.data();
    for (std::size_t i = 0; i < out.size(); ++i)
        d[i] = std::clamp(d[i], 0.0, 1.0);
    return out;
}

inline std::pair<double, double> sample_range(const ImageGrid& img) {
    double lo = img.data()[0], hi = img.data()[0];
    for (std::size_t i = 1; i < img.size(); ++i) {
        lo = std::min(lo, img.data()[i]);
        hi = std::max(hi, img.data()[i]);
    }
    return {lo, hi};
}

inline double dot(const ImageGrid& a, const ImageGrid& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
}

inline double norm2(const ImageGrid& a) { return std::sqrt(dot(a, a)); }

/// out = a + s * b
inline ImageGrid axpy(const ImageGrid& a, double s, const ImageGrid& b) {
    assert(a.same_shape(b));
    ImageGrid out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += s * b.data()[i];
    return out;
}

inline ImageGrid subtract(const ImageGrid& a, const ImageGrid& b) { return axpy(a, -1.0, b); }

inline ImageGrid scale(const ImageGrid& a, double s) {
    ImageGrid out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= s;
    return out;
}

/// The eight symmetries of the square: index = rotation (0..3 quarter turns
/// counterclockwise) + 4 * flip (horizontal mirror applied first).
inline ImageGrid dihedral_transform(const ImageGrid& img, int k) {
    if (k < 0 || k > 7) throw std::invalid_argument("dihedral_transform: index must be in [0,7]");
    ImageGrid cur = img;
    if (k >= 4) {  // mirror columns
        ImageGrid flipped(cur.height(), cur.width(), cur.channels());
        for (int ch = 0; ch < cur.channels(); ++ch)
            for (int r = 0; r < cur.height(); ++r)
                for (int c = 0; c < cur.width(); ++c)
                    flipped.at(r, c, ch) = cur.at(r, cur.width() - 1 - c, ch);
        cur = std::move(flipped);
    }
    const int rot = k % 4;
    for (int t = 0; t < rot; ++t) {  // one quarter turn counterclockwise
        ImageGrid rotated(cur.width(), cur.height(), cur.channels());
        for (int ch = 0; ch < cur.channels(); ++ch)
            for (int r = 0; r < cur.height(); ++r)
                for (int c = 0; c < cur.width(); ++c)
                    rotated.at(cur.width() - 1 - c, r, ch) = cur.at(r, c, ch);
        cur = std::move(rotated);
    }
    return cur;
}

inline ImageGrid dihedral_inverse(const ImageGrid& img, int k) {
    if (k < 0 || k > 7) throw std::invalid_argument("dihedral_inverse: index must be in [0,7]");
    ImageGrid cur = img;
    const int rot = (4 - k % 4) % 4;
    for (int t = 0; t < rot; ++t) {
        ImageGrid rotated(cur.width(), cur.height(), cur.channels());
        for (int ch = 0; ch < cur.channels(); ++ch)
            for (int r = 0; r < cur.height(); ++r)
                for (int c = 0; c < cur.width(); ++c)
                    rotated.at(cur.width() - 1 - c, r, ch) = cur.at(r, c, ch);
        cur = std::move(rotated);
    }
    if (k >= 4) {
        ImageGrid flipped(cur.height(), cur.width(), cur.channels());
        for (int ch = 0; ch < cur.channels(); ++ch)
            for (int r = 0; r < cur.height(); ++r)
                for (int c = 0; c < cur.width(); ++c)
                    flipped.at(r, c, ch) = cur.at(r, cur.width() - 1 - c, ch);
        cur = std::move(flipped);
    }
    return cur;
}

}  // namespace narmsr
