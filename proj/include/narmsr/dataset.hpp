#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "narmsr/image.hpp"
#include "narmsr/image_io.hpp"
#include "narmsr/metrics.hpp"

namespace narmsr {

namespace detail {

inline bool is_image_file(const std::filesystem::path& p) {
    return has_suffix(p.string(), ".png") || has_suffix(p.string(), ".pgm") ||
           has_suffix(p.string(), ".ppm");
}

inline ImageGrid load_luminance(const std::string& path) {
    const ImageGrid img = read_image(path);
    return img.channels() == 3 ? rgb_to_luminance(img) : img;
}

}  // namespace detail

/// Compare reconstructed and ground-truth directories image by image,
/// matching on filename. Names present on one side only are reported in
/// `missing` and excluded from the means. Ordering is by filename.
inline MetricReport evaluate_dataset(const std::string& sr_dir, const std::string& gt_dir,
                                     int crop) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(sr_dir)) throw io_error("evaluate_dataset: not a directory: " + sr_dir);
    if (!fs::is_directory(gt_dir)) throw io_error("evaluate_dataset: not a directory: " + gt_dir);

    std::map<std::string, fs::path> sr_files, gt_files;
    for (const auto& e : fs::directory_iterator(sr_dir))
        if (e.is_regular_file() && detail::is_image_file(e.path())) sr_files[e.path().filename().string()] = e.path();
    for (const auto& e : fs::directory_iterator(gt_dir))
        if (e.is_regular_file() && detail::is_image_file(e.path())) gt_files[e.path().filename().string()] = e.path();

    MetricReport report;
    for (const auto& [name, path] : sr_files)
        if (!gt_files.count(name)) report.missing.push_back(name);
    for (const auto& [name, path] : gt_files)
        if (!sr_files.count(name)) report.missing.push_back(name);
    std::sort(report.missing.begin(), report.missing.end());

    double psnr_sum = 0.0, ssim_sum = 0.0;
    for (const auto& [name, sr_path] : sr_files) {
        auto it = gt_files.find(name);
        if (it == gt_files.end()) continue;
        const ImageGrid sr = detail::load_luminance(sr_path.string());
        const ImageGrid gt = detail::load_luminance(it->second.string());
        MetricEntry entry;
        entry.name = name;
        entry.psnr_db = cap_psnr(psnr(sr, gt, crop));
        entry.ssim = ssim(sr, gt, crop);
        psnr_sum += entry.psnr_db;
        ssim_sum += entry.ssim;
        report.per_image.push_back(std::move(entry));
    }
    if (report.per_image.empty() && report.missing.empty())
        throw io_error("evaluate_dataset: no images found");
    if (!report.per_image.empty()) {
        report.mean_psnr_db = psnr_sum / static_cast<double>(report.per_image.size());
        report.mean_ssim = ssim_sum / static_cast<double>(report.per_image.size());
    }
    return report;
}

}  // namespace narmsr
