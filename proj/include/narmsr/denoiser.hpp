#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "narmsr/degradation.hpp"
#include "narmsr/errors.hpp"
#include "narmsr/image.hpp"

namespace narmsr {

enum class DenoiserKind { kIdentity, kGaussianSmooth, kNonlocalMeans };

/// Pluggable denoising prior. strength maps to the prior weight of the
/// auxiliary-variable subproblem: the Gaussian standard deviation for
/// kGaussianSmooth, the filtering parameter h for kNonlocalMeans.
/// strength = 0 is the identity for every kind.
struct DenoiserSpec {
    DenoiserKind kind = DenoiserKind::kNonlocalMeans;
    double strength = 0.08;
};

namespace detail {

inline ImageGrid gaussian_smooth(const ImageGrid& x, double sigma) {
    // kernel wide enough for three standard deviations, clipped so the
    // symmetric padding stays valid on small images
    int size = 2 * std::max(1, static_cast<int>(std::ceil(3.0 * sigma))) + 1;
    size = std::min(size, 2 * (std::min(x.height(), x.width()) - 1) + 1);
    return convolve_symmetric(x, make_gaussian_kernel(sigma, size));
}

/// Classical nonlocal means: patch 5, window 11, weights exp(-d2/h^2) with d2
/// the mean squared patch difference. The center pixel weighs in at 1 (d2=0),
/// so every output is a convex combination of window pixels.
inline ImageGrid nonlocal_means(const ImageGrid& x, double h) {
    constexpr int kPatch = 5;
    constexpr int kWindow = 11;
    const int ph = kPatch / 2, wh = kWindow / 2;
    const ImageGrid padded = pad_symmetric(x, ph);
    const int height = x.height(), width = x.width();
    const int pw = padded.width();
    const double* pad = padded.data();
    auto patch_d2 = [&](int r0, int c0, int r1, int c1) {
        double acc = 0.0;
        for (int dr = -ph; dr <= ph; ++dr) {
            const double* a = pad + static_cast<std::size_t>(r0 + ph + dr) * pw + (c0);
            const double* b = pad + static_cast<std::size_t>(r1 + ph + dr) * pw + (c1);
            for (int j = 0; j < kPatch; ++j) {
                const double d = a[j] - b[j];
                acc += d * d;
            }
        }
        return acc / (kPatch * kPatch);
    };
    ImageGrid out(height, width, 1);
    const double inv_h2 = 1.0 / (h * h);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            const int r0 = std::max(0, r - wh), r1 = std::min(height - 1, r + wh);
            const int c0 = std::max(0, c - wh), c1 = std::min(width - 1, c + wh);
            double num = 0.0, den = 0.0;
            for (int nr = r0; nr <= r1; ++nr)
                for (int nc = c0; nc <= c1; ++nc) {
                    const double w = std::exp(-patch_d2(r, c, nr, nc) * inv_h2);
                    num += w * x.at(nr, nc);
                    den += w;
                }
            out.at(r, c) = num / den;
        }
    }
    return out;
}

}  // namespace detail

inline ImageGrid denoise(const DenoiserSpec& spec, const ImageGrid& x) {
    require_single_channel(x, "denoise");
    if (spec.strength < 0.0) throw std::invalid_argument("denoise: strength must be >= 0");
    if (spec.strength == 0.0 || spec.kind == DenoiserKind::kIdentity) return x;
    switch (spec.kind) {
        case DenoiserKind::kGaussianSmooth:
            return detail::gaussian_smooth(x, spec.strength);
        case DenoiserKind::kNonlocalMeans:
            return detail::nonlocal_means(x, spec.strength);
        case DenoiserKind::kIdentity:
            return x;
    }
    throw std::logic_error("denoise: unreachable");
}

inline const char* to_string(DenoiserKind k) {
    switch (k) {
        case DenoiserKind::kIdentity: return "identity";
        case DenoiserKind::kGaussianSmooth: return "gaussian_smooth";
        case DenoiserKind::kNonlocalMeans: return "nonlocal_means";
    }
    return "?";
}

inline DenoiserKind denoiser_kind_from_string(const std::string& s) {
    if (s == "identity") return DenoiserKind::kIdentity;
    if (s == "gaussian_smooth") return DenoiserKind::kGaussianSmooth;
    if (s == "nonlocal_means") return DenoiserKind::kNonlocalMeans;
    throw config_error("unknown denoiser kind: " + s);
}

}  // namespace narmsr
