#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "narmsr/errors.hpp"
#include "narmsr/image.hpp"

namespace narmsr {

/// PSNR in dB between two single-channel images on the [0,255] scale, after
/// cropping `crop` border pixels. Identical images give +infinity.
inline double psnr(const ImageGrid& a, const ImageGrid& b, int crop = 0) {
    require_single_channel(a, "psnr");
    require_single_channel(b, "psnr");
    if (!a.same_shape(b)) throw std::invalid_argument("psnr: image shapes differ");
    const ImageGrid ca = crop_border(a, crop);
    const ImageGrid cb = crop_border(b, crop);
    double mse = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        const double d = (ca.data()[i] - cb.data()[i]) * 255.0;
        mse += d * d;
    }
    mse /= static_cast<double>(ca.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

/// Mean structural similarity with the standard 11x11 Gaussian window
/// (sigma 1.5) evaluated over the fully-valid interior, constants
/// C1 = (0.01*255)^2 and C2 = (0.03*255)^2 on the [0,255] scale.
inline double ssim(const ImageGrid& a, const ImageGrid& b, int crop = 0) {
    require_single_channel(a, "ssim");
    require_single_channel(b, "ssim");
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: image shapes differ");
    const ImageGrid ca = crop_border(a, crop);
    const ImageGrid cb = crop_border(b, crop);
    constexpr int kWin = 11;
    if (ca.height() < kWin || ca.width() < kWin)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window after crop");

    static const std::vector<double> window = [] {
        std::vector<double> w(kWin * kWin);
        const double sigma = 1.5;
        const int c = kWin / 2;
        double sum = 0.0;
        for (int i = 0; i < kWin; ++i)
            for (int j = 0; j < kWin; ++j) {
                const double d2 = double(i - c) * (i - c) + double(j - c) * (j - c);
                w[static_cast<std::size_t>(i) * kWin + j] = std::exp(-d2 / (2.0 * sigma * sigma));
                sum += w[static_cast<std::size_t>(i) * kWin + j];
            }
        for (double& v : w) v /= sum;
        return w;
    }();

    const double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    const double c2 = (0.03 * 255.0) * (0.03 * 255.0);
    const int h = ca.height(), w = ca.width();
    double total = 0.0;
    long count = 0;
    for (int r = 0; r + kWin <= h; ++r) {
        for (int c = 0; c + kWin <= w; ++c) {
            double ma = 0.0, mb = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
            for (int i = 0; i < kWin; ++i)
                for (int j = 0; j < kWin; ++j) {
                    const double wv = window[static_cast<std::size_t>(i) * kWin + j];
                    const double va = ca.at(r + i, c + j) * 255.0;
                    const double vb = cb.at(r + i, c + j) * 255.0;
                    ma += wv * va;
                    mb += wv * vb;
                    aa += wv * va * va;
                    bb += wv * vb * vb;
                    ab += wv * va * vb;
                }
            const double va = aa - ma * ma;
            const double vb = bb - mb * mb;
            const double cab = ab - ma * mb;
            const double num = (2.0 * ma * mb + c1) * (2.0 * cab + c2);
            const double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
            total += num / den;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

struct MetricEntry {
    std::string name;
    double psnr_db;
    double ssim;
};

/// Per-image and mean metrics over a directory pair. PSNR is capped at
/// 100 dB for reporting and aggregation.
struct MetricReport {
    std::vector<MetricEntry> per_image;
    std::vector<std::string> missing;  // names present on one side only
    double mean_psnr_db = 0.0;
    double mean_ssim = 0.0;
};

inline double cap_psnr(double v) { return std::min(v, 100.0); }

/// CSV rows "name,psnr_db,ssim" with six decimals, then a MEAN row.
inline void write_metrics_csv(const MetricReport& report, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw io_error("write_metrics_csv: cannot open " + path);
    f << "name,psnr_db,ssim\n";
    char line[256];
    for (const auto& e : report.per_image) {
        std::snprintf(line, sizeof line, "%s,%.6f,%.6f\n", e.name.c_str(), cap_psnr(e.psnr_db), e.ssim);
        f << line;
    }
    std::snprintf(line, sizeof line, "MEAN,%.6f,%.6f\n", report.mean_psnr_db, report.mean_ssim);
    f << line;
    if (!f) throw io_error("write_metrics_csv: write failed for " + path);
}

}  // namespace narmsr
