#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "narmsr/errors.hpp"
#include "narmsr/image.hpp"
#include "narmsr/linalg.hpp"

namespace narmsr {

// ---------------------------------------------------------------------------
// Gaussian blur kernels
// ---------------------------------------------------------------------------

/// Isotropic Gaussian blur kernel, normalized to unit sum.
struct GaussianKernel {
    int size = 21;
    double width = 1.0;  // standard deviation in pixels
    std::vector<double> taps;  // size x size, row-major

    double tap(int i, int j) const { return taps[static_cast<std::size_t>(i) * size + j]; }
};

inline GaussianKernel make_gaussian_kernel(double width, int size = 21) {
    if (width <= 0.0) throw std::invalid_argument("make_gaussian_kernel: width must be positive");
    if (size <= 0 || size % 2 == 0)
        throw std::invalid_argument("make_gaussian_kernel: size must be odd and positive");
    GaussianKernel k;
    k.size = size;
    k.width = width;
    k.taps.resize(static_cast<std::size_t>(size) * size);
    const int c = (size - 1) / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            const double d2 = double(i - c) * (i - c) + double(j - c) * (j - c);
            const double v = std::exp(-d2 / (2.0 * width * width));
            k.taps[static_cast<std::size_t>(i) * size + j] = v;
            sum += v;
        }
    }
    for (double& v : k.taps) v /= sum;
    return k;
}

/// Kernel text format: first line "size width", then size rows of taps.
inline void save_kernel(const GaussianKernel& k, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw io_error("save_kernel: cannot open " + path);
    f.precision(17);
    f << k.size << " " << k.width << "\n";
    for (int i = 0; i < k.size; ++i) {
        for (int j = 0; j < k.size; ++j) f << (j ? " " : "") << k.tap(i, j);
        f << "\n";
    }
    if (!f) throw io_error("save_kernel: write failed for " + path);
}

inline GaussianKernel load_kernel(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("load_kernel: cannot open " + path);
    GaussianKernel k;
    if (!(f >> k.size >> k.width) || k.size <= 0 || k.size % 2 == 0)
        throw io_error("load_kernel: malformed header in " + path);
    k.taps.resize(static_cast<std::size_t>(k.size) * k.size);
    for (double& v : k.taps)
        if (!(f >> v)) throw io_error("load_kernel: truncated taps in " + path);
    return k;
}

// ---------------------------------------------------------------------------
// 1-D resampling operators (cubic convolution, Keys a = -0.5)
// ---------------------------------------------------------------------------

namespace detail {

inline double keys_cubic(double t) {
    const double a = -0.5;
    const double x = std::abs(t);
    if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
    if (x < 2.0) return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
    return 0.0;
}

/// One axis of a separable resampler: out[i] = sum_j w[i][j] * in[src[i][j]].
struct Resample1D {
    int in_len = 0;
    int out_len = 0;
    std::vector<std::vector<std::pair<int, double>>> rows;

    void apply(const double* in, std::size_t in_stride, double* out, std::size_t out_stride) const {
        for (int i = 0; i < out_len; ++i) {
            double s = 0.0;
            for (const auto& [j, w] : rows[i]) s += w * in[static_cast<std::size_t>(j) * in_stride];
            out[static_cast<std::size_t>(i) * out_stride] = s;
        }
    }
    /// Transpose scatter: out[src] += w * in[i]. `out` must be zeroed by the caller.
    void apply_transpose(const double* in, std::size_t in_stride, double* out,
                         std::size_t out_stride) const {
        for (int i = 0; i < out_len; ++i) {
            const double v = in[static_cast<std::size_t>(i) * in_stride];
            for (const auto& [j, w] : rows[i]) out[static_cast<std::size_t>(j) * out_stride] += w * v;
        }
    }
};

/// Build the 1-D cubic resampler from `in_len` samples to `out_len` samples.
/// Output sample i is centered at input coordinate (i + 0.5) / scale - 0.5
/// with scale = out_len / in_len. When downsampling, the kernel is widened
/// by the inverse scale (antialiasing). Out-of-range taps are folded back by
/// whole-sample symmetric reflection and each row is normalized to unit sum.
inline Resample1D make_cubic_resampler(int in_len, int out_len) {
    Resample1D op;
    op.in_len = in_len;
    op.out_len = out_len;
    op.rows.resize(out_len);
    const double scale = static_cast<double>(out_len) / in_len;
    const double widen = scale < 1.0 ? 1.0 / scale : 1.0;
    const double support = 2.0 * widen;
    for (int i = 0; i < out_len; ++i) {
        const double center = (i + 0.5) / scale - 0.5;
        const int lo = static_cast<int>(std::ceil(center - support));
        const int hi = static_cast<int>(std::floor(center + support));
        std::vector<double> folded(in_len, 0.0);
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) {
            const double w = keys_cubic((j - center) / widen) / widen;
            if (w == 0.0) continue;
            folded[reflect_index(j, in_len)] += w;
            sum += w;
        }
        auto& row = op.rows[i];
        for (int j = 0; j < in_len; ++j)
            if (folded[j] != 0.0) row.emplace_back(j, folded[j] / sum);
    }
    return op;
}

/// Apply row and column 1-D operators to every channel (separable 2-D resample).
inline ImageGrid apply_separable(const ImageGrid& img, const Resample1D& row_op,
                                 const Resample1D& col_op, bool transpose) {
    const int in_h = img.height(), in_w = img.width();
    const int out_h = transpose ? row_op.in_len : row_op.out_len;
    const int out_w = transpose ? col_op.in_len : col_op.out_len;
    ImageGrid out(out_h, out_w, img.channels());
    for (int ch = 0; ch < img.channels(); ++ch) {
        // columns first: in_h x in_w -> in_h x out_w
        std::vector<double> tmp(static_cast<std::size_t>(in_h) * out_w, 0.0);
        const double* src = img.plane(ch);
        for (int r = 0; r < in_h; ++r) {
            if (!transpose)
                col_op.apply(src + static_cast<std::size_t>(r) * in_w, 1,
                             tmp.data() + static_cast<std::size_t>(r) * out_w, 1);
            else
                col_op.apply_transpose(src + static_cast<std::size_t>(r) * in_w, 1,
                                       tmp.data() + static_cast<std::size_t>(r) * out_w, 1);
        }
        double* dst = out.plane(ch);
        std::fill(dst, dst + out.pixels(), 0.0);
        for (int c = 0; c < out_w; ++c) {
            if (!transpose)
                row_op.apply(tmp.data() + c, out_w, dst + c, out_w);
            else
                row_op.apply_transpose(tmp.data() + c, out_w, dst + c, out_w);
        }
    }
    return out;
}

}  // namespace detail

/// Antialiased bicubic downsampling by an integer factor.
inline ImageGrid bicubic_downsample(const ImageGrid& img, int scale) {
    if (scale < 2 || scale > 4) throw std::invalid_argument("bicubic_downsample: scale must be 2, 3 or 4");
    const int out_h = img.height() / scale, out_w = img.width() / scale;
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("bicubic_downsample: image too small");
    const auto row_op = detail::make_cubic_resampler(img.height(), out_h);
    const auto col_op = detail::make_cubic_resampler(img.width(), out_w);
    return detail::apply_separable(img, row_op, col_op, false);
}

/// Bicubic interpolation to `scale` times the size (no antialiasing).
inline ImageGrid bicubic_upsample(const ImageGrid& img, int scale) {
    if (scale < 1) throw std::invalid_argument("bicubic_upsample: scale must be >= 1");
    if (scale == 1) return img;
    const auto row_op = detail::make_cubic_resampler(img.height(), img.height() * scale);
    const auto col_op = detail::make_cubic_resampler(img.width(), img.width() * scale);
    return detail::apply_separable(img, row_op, col_op, false);
}

/// Plain decimation anchored at the top-left sample: out[r,c] = in[s*r, s*c].
inline ImageGrid direct_downsample(const ImageGrid& img, int scale) {
    if (scale < 1) throw std::invalid_argument("direct_downsample: scale must be a positive integer");
    if (scale == 1) return img;
    const int out_h = img.height() / scale, out_w = img.width() / scale;
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("direct_downsample: image too small");
    ImageGrid out(out_h, out_w, img.channels());
    for (int ch = 0; ch < img.channels(); ++ch)
        for (int r = 0; r < out_h; ++r)
            for (int c = 0; c < out_w; ++c)
                out.at(r, c, ch) = img.at(r * scale, c * scale, ch);
    return out;
}

/// Convolution with symmetric boundary handling: out = valid(corr(pad(x), k)).
/// Kernels here are 180-degree symmetric, so correlation equals convolution.
inline ImageGrid convolve_symmetric(const ImageGrid& img, const GaussianKernel& k) {
    const int half = (k.size - 1) / 2;
    const ImageGrid padded = pad_symmetric(img, half);
    const int h = img.height(), w = img.width();
    ImageGrid out(h, w, img.channels());
    for (int ch = 0; ch < img.channels(); ++ch) {
        const double* src = padded.plane(ch);
        const int pw = padded.width();
        double* dst = out.plane(ch);
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                double s = 0.0;
                for (int i = 0; i < k.size; ++i) {
                    const double* row = src + static_cast<std::size_t>(r + i) * pw + c;
                    const double* taps = k.taps.data() + static_cast<std::size_t>(i) * k.size;
                    for (int j = 0; j < k.size; ++j) s += taps[j] * row[j];
                }
                dst[static_cast<std::size_t>(r) * w + c] = s;
            }
        }
    }
    return out;
}

/// Exact adjoint of convolve_symmetric: scatter through the kernel into the
/// padded plane, then fold the padding back with the reflection index map.
inline ImageGrid convolve_symmetric_adjoint(const ImageGrid& g, const GaussianKernel& k) {
    const int half = (k.size - 1) / 2;
    const int h = g.height(), w = g.width();
    const int ph = h + 2 * half, pw = w + 2 * half;
    ImageGrid out(h, w, g.channels());
    for (int ch = 0; ch < g.channels(); ++ch) {
        std::vector<double> padded(static_cast<std::size_t>(ph) * pw, 0.0);
        const double* src = g.plane(ch);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                const double v = src[static_cast<std::size_t>(r) * w + c];
                for (int i = 0; i < k.size; ++i) {
                    double* row = padded.data() + static_cast<std::size_t>(r + i) * pw + c;
                    const double* taps = k.taps.data() + static_cast<std::size_t>(i) * k.size;
                    for (int j = 0; j < k.size; ++j) row[j] += taps[j] * v;
                }
            }
        double* dst = out.plane(ch);
        std::fill(dst, dst + out.pixels(), 0.0);
        for (int r = 0; r < ph; ++r) {
            const int sr = reflect_index(r - half, h);
            for (int c = 0; c < pw; ++c) {
                const int sc = reflect_index(c - half, w);
                dst[static_cast<std::size_t>(sr) * w + sc] += padded[static_cast<std::size_t>(r) * pw + c];
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Degradation operator A and its adjoint
// ---------------------------------------------------------------------------

enum class DegradationMode { kBicubic, kDirect, kBlurDirect };

/// The linear HR -> LR map: bicubic downsampling, plain decimation, or
/// Gaussian blur followed by decimation.
struct DegradationOp {
    DegradationMode mode = DegradationMode::kBicubic;
    int scale = 2;
    std::optional<GaussianKernel> kernel;  // required for kBlurDirect
};

inline void validate(const DegradationOp& op) {
    if (op.scale < 1 || op.scale > 4)
        throw std::invalid_argument("DegradationOp: scale must be in {1,2,3,4}");
    if (op.mode == DegradationMode::kBlurDirect && !op.kernel)
        throw config_error("DegradationOp: blur_direct mode requires a kernel");
}

inline ImageGrid apply(const DegradationOp& op, const ImageGrid& x) {
    validate(op);
    switch (op.mode) {
        case DegradationMode::kBicubic:
            return op.scale == 1 ? x : bicubic_downsample(x, op.scale);
        case DegradationMode::kDirect:
            return direct_downsample(x, op.scale);
        case DegradationMode::kBlurDirect:
            return direct_downsample(convolve_symmetric(x, *op.kernel), op.scale);
    }
    throw std::logic_error("apply: unreachable");
}

/// Adjoint of `apply` with respect to the standard inner product, mapping an
/// LR image back to the HR grid of size hr_height x hr_width.
inline ImageGrid apply_adjoint(const DegradationOp& op, const ImageGrid& y, int hr_height,
                               int hr_width) {
    validate(op);
    if (hr_height / op.scale != y.height() || hr_width / op.scale != y.width())
        throw std::invalid_argument("apply_adjoint: LR size inconsistent with HR size and scale");
    if (op.mode == DegradationMode::kBicubic) {
        if (op.scale == 1) return y;
        const auto row_op = detail::make_cubic_resampler(hr_height, y.height());
        const auto col_op = detail::make_cubic_resampler(hr_width, y.width());
        return detail::apply_separable(y, row_op, col_op, true);
    }
    // zero-insertion upsampling = adjoint of decimation
    ImageGrid up(hr_height, hr_width, y.channels());
    for (int ch = 0; ch < y.channels(); ++ch)
        for (int r = 0; r < y.height(); ++r)
            for (int c = 0; c < y.width(); ++c)
                up.at(r * op.scale, c * op.scale, ch) = y.at(r, c, ch);
    if (op.mode == DegradationMode::kDirect) return up;
    return convolve_symmetric_adjoint(up, *op.kernel);
}

// ---------------------------------------------------------------------------
// PCA codebook for blur-kernel dimensionality stretching
// ---------------------------------------------------------------------------

/// PCA basis over vectorized blur kernels: mean plus d orthonormal rows.
struct KernelCodebook {
    int k2 = 0;  // vectorized kernel length (size * size)
    int d = 0;
    std::vector<double> mean;                 // length k2
    std::vector<std::vector<double>> basis;   // d rows of length k2
};

/// Fit a codebook to >= d kernels of identical size. Basis rows are the top-d
/// covariance eigenvectors in descending eigenvalue order; each row's
/// largest-magnitude entry is made positive so results are reproducible.
inline KernelCodebook pca_fit(const std::vector<GaussianKernel>& kernels, int d) {
    if (kernels.empty()) throw std::invalid_argument("pca_fit: no kernels");
    const int size = kernels.front().size;
    const int k2 = size * size;
    const int n = static_cast<int>(kernels.size());
    if (d < 1 || d >= k2) throw std::invalid_argument("pca_fit: need 1 <= d < size^2");
    if (n < d) throw std::invalid_argument("pca_fit: need at least d kernels");
    for (const auto& k : kernels)
        if (k.size != size) throw std::invalid_argument("pca_fit: kernels must share one size");

    KernelCodebook cb;
    cb.k2 = k2;
    cb.d = d;
    cb.mean.assign(k2, 0.0);
    for (const auto& k : kernels)
        for (int i = 0; i < k2; ++i) cb.mean[i] += k.taps[i];
    for (double& v : cb.mean) v /= n;

    // Snapshot PCA: eigenvectors of the small n x n Gram matrix of centered
    // samples give the covariance eigenvectors without forming k2 x k2.
    DenseMatrix centered(n, k2);
    for (int s = 0; s < n; ++s)
        for (int i = 0; i < k2; ++i) centered(s, i) = kernels[s].taps[i] - cb.mean[i];
    DenseMatrix gram(n, n);
    for (int s = 0; s < n; ++s)
        for (int t = s; t < n; ++t) {
            double acc = 0.0;
            for (int i = 0; i < k2; ++i) acc += centered(s, i) * centered(t, i);
            gram(s, t) = gram(t, s) = acc;
        }
    const SymEigen eig = sym_eigen(gram);

    cb.basis.assign(d, std::vector<double>(k2, 0.0));
    // Eigenvalues below the floor are centering round-off, not structure;
    // unit-mass kernels put genuine variation many orders above it.
    constexpr double kEigenFloor = 1e-24;
    int rank = 0;
    for (int r = 0; r < d; ++r) {
        if (eig.values[r] <= kEigenFloor) break;
        auto& row = cb.basis[r];
        for (int s = 0; s < n; ++s) {
            const double u = eig.vectors(r, s);
            if (u == 0.0) continue;
            for (int i = 0; i < k2; ++i) row[i] += u * centered(s, i);
        }
        double nrm = 0.0;
        for (double v : row) nrm += v * v;
        nrm = std::sqrt(nrm);
        for (double& v : row) v /= nrm;
        ++rank;
    }
    // Degenerate kernel sets span fewer than d directions; complete the basis
    // with canonical vectors orthogonalized against what was found. Projection
    // coefficients along these rows are zero, so reconstruction is unaffected.
    for (int r = rank; r < d; ++r) {
        auto& row = cb.basis[r];
        for (int cand = 0; cand < k2; ++cand) {
            std::vector<double> v(k2, 0.0);
            v[cand] = 1.0;
            for (int p = 0; p < r; ++p) {
                double proj = 0.0;
                for (int i = 0; i < k2; ++i) proj += cb.basis[p][i] * v[i];
                for (int i = 0; i < k2; ++i) v[i] -= proj * cb.basis[p][i];
            }
            double nrm = 0.0;
            for (double x : v) nrm += x * x;
            nrm = std::sqrt(nrm);
            if (nrm > 1e-6) {
                for (int i = 0; i < k2; ++i) row[i] = v[i] / nrm;
                break;
            }
        }
    }
    for (auto& row : cb.basis) {
        int arg = 0;
        for (int i = 1; i < k2; ++i)
            if (std::abs(row[i]) > std::abs(row[arg])) arg = i;
        if (row[arg] < 0.0)
            for (double& v : row) v = -v;
    }
    return cb;
}

/// Coefficients of (vec(k) - mean) in the codebook basis.
inline std::vector<double> kernel_project(const GaussianKernel& k, const KernelCodebook& cb) {
    if (k.size * k.size != cb.k2)
        throw std::invalid_argument("kernel_project: kernel size does not match codebook");
    std::vector<double> coeffs(cb.d, 0.0);
    for (int r = 0; r < cb.d; ++r) {
        double acc = 0.0;
        for (int i = 0; i < cb.k2; ++i) acc += cb.basis[r][i] * (k.taps[i] - cb.mean[i]);
        coeffs[r] = acc;
    }
    return coeffs;
}

/// d planes of size H x W, plane j filled with projection coefficient j.
struct KernelStretchMap {
    int d = 0;
    int height = 0;
    int width = 0;
    std::vector<double> coeffs;  // the d broadcast values

    double plane_value(int j) const { return coeffs[j]; }
};

inline KernelStretchMap kernel_stretch(const GaussianKernel& k, const KernelCodebook& cb,
                                       int height, int width) {
    if (height <= 0 || width <= 0)
        throw std::invalid_argument("kernel_stretch: map dimensions must be positive");
    KernelStretchMap map;
    map.d = cb.d;
    map.height = height;
    map.width = width;
    map.coeffs = kernel_project(k, cb);
    return map;
}

/// Codebook text format: header "k2 d", the mean line, then d basis rows.
inline void save_codebook(const KernelCodebook& cb, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw io_error("save_codebook: cannot open " + path);
    f.precision(17);
    f << cb.k2 << " " << cb.d << "\n";
    for (int i = 0; i < cb.k2; ++i) f << (i ? " " : "") << cb.mean[i];
    f << "\n";
    for (const auto& row : cb.basis) {
        for (int i = 0; i < cb.k2; ++i) f << (i ? " " : "") << row[i];
        f << "\n";
    }
    if (!f) throw io_error("save_codebook: write failed for " + path);
}

inline KernelCodebook load_codebook(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("load_codebook: cannot open " + path);
    KernelCodebook cb;
    if (!(f >> cb.k2 >> cb.d) || cb.k2 <= 0 || cb.d <= 0 || cb.d >= cb.k2)
        throw io_error("load_codebook: malformed header in " + path);
    cb.mean.resize(cb.k2);
    for (double& v : cb.mean)
        if (!(f >> v)) throw io_error("load_codebook: truncated mean in " + path);
    cb.basis.assign(cb.d, std::vector<double>(cb.k2));
    for (auto& row : cb.basis)
        for (double& v : row)
            if (!(f >> v)) throw io_error("load_codebook: truncated basis in " + path);
    return cb;
}

/// Stretch-map text format: header "d H W", then d planes of H rows.
inline void save_stretch_map(const KernelStretchMap& map, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw io_error("save_stretch_map: cannot open " + path);
    f.precision(17);
    f << map.d << " " << map.height << " " << map.width << "\n";
    for (int j = 0; j < map.d; ++j)
        for (int r = 0; r < map.height; ++r) {
            for (int c = 0; c < map.width; ++c) f << (c ? " " : "") << map.plane_value(j);
            f << "\n";
        }
    if (!f) throw io_error("save_stretch_map: write failed for " + path);
}

}  // namespace narmsr
