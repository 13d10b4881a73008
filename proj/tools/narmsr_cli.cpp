// Command-line front end: degrade / sr / eval / kernels subcommands over
// directory batches, with JSON run manifests for reproducibility.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "narmsr/narmsr.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace narmsr;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumerical = 3;

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hash_file(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot hash " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return buf;
}

std::vector<fs::path> list_images(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw io_error("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && detail::is_image_file(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end());
    if (out.empty()) throw io_error("no images (.png/.pgm/.ppm) in " + dir.string());
    return out;
}

json manifest_skeleton(const std::string& command, int argc, char** argv) {
    json m;
    m["tool"] = "narmsr";
    m["version"] = kVersion;
    m["command"] = command;
    std::string line;
    for (int i = 0; i < argc; ++i) {
        if (i) line += " ";
        line += argv[i];
    }
    m["command_line"] = line;
    return m;
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

DegradationOp make_op(const std::string& mode, int scale, const std::string& kernel_path,
                      double kernel_width, int kernel_size) {
    DegradationOp op;
    if (mode == "bicubic") op.mode = DegradationMode::kBicubic;
    else if (mode == "direct") op.mode = DegradationMode::kDirect;
    else if (mode == "blur_direct") op.mode = DegradationMode::kBlurDirect;
    else throw config_error("unknown degradation mode: " + mode);
    op.scale = scale;
    if (op.mode == DegradationMode::kBlurDirect) {
        if (!kernel_path.empty()) op.kernel = load_kernel(kernel_path);
        else if (kernel_width > 0) op.kernel = make_gaussian_kernel(kernel_width, kernel_size);
        else throw config_error("blur_direct requires --kernel or --kernel-width");
    }
    return op;
}

ImageGrid to_single_channel(const ImageGrid& img) {
    return img.channels() == 3 ? rgb_to_luminance(img) : img;
}

// ---------------------------------------------------------------------------

int cmd_degrade(int argc, char** argv, const std::string& in_dir, const std::string& out_dir,
                const std::string& mode, int scale, double kernel_width, int kernel_size,
                double noise_sigma, std::uint64_t seed, bool seed_set) {
    if (noise_sigma > 0 && !seed_set)
        throw config_error("--noise-sigma requires --seed for reproducibility");
    const DegradationOp op = make_op(mode, scale, "", kernel_width > 0 ? kernel_width : 0, kernel_size);
    fs::create_directories(out_dir);

    json manifest = manifest_skeleton("degrade", argc, argv);
    manifest["parameters"] = {{"mode", mode},
                              {"scale", scale},
                              {"kernel_width", kernel_width},
                              {"kernel_size", kernel_size},
                              {"noise_sigma", noise_sigma},
                              {"seed", seed_set ? json(seed) : json(nullptr)}};
    json inputs = json::object(), outputs = json::object();

    if (op.mode == DegradationMode::kBlurDirect) {
        const fs::path kpath = fs::path(out_dir) / "kernel.txt";
        save_kernel(*op.kernel, kpath);
        outputs["kernel.txt"] = hash_file(kpath);
    }
    for (const auto& path : list_images(in_dir)) {
        const ImageGrid hr = read_image(path.string());
        ImageGrid lr = apply(op, hr);
        if (noise_sigma > 0) {
            // per-image stream keyed on the filename, independent of batch order
            std::mt19937_64 gen(fnv1a64(path.filename().string().data(),
                                        path.filename().string().size(), seed ^ 0x9E3779B97F4A7C15ull));
            std::normal_distribution<double> noise(0.0, noise_sigma);
            for (std::size_t i = 0; i < lr.size(); ++i) lr.data()[i] += noise(gen);
        }
        const fs::path out_path = fs::path(out_dir) / path.filename();
        write_image(lr, out_path.string());
        inputs[path.filename().string()] = hash_file(path);
        outputs[path.filename().string()] = hash_file(out_path);
    }
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    write_json(manifest, fs::path(out_dir) / "manifest.json");
    return kExitOk;
}

int cmd_sr(int argc, char** argv, const std::string& in_dir, const std::string& out_dir,
           const SolverConfig& cfg, const DegradationOp& op, const std::string& gt_dir,
           const std::string& codebook_path, bool plus) {
    fs::create_directories(out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    json manifest = manifest_skeleton("sr", argc, argv);
    json cfg_json = json::object();
    for (const auto& [k, v] : config_items(cfg)) cfg_json[k] = v;
    manifest["config"] = cfg_json;
    manifest["ensemble"] = plus;
    json inputs = json::object(), outputs = json::object();

    std::optional<KernelCodebook> codebook;
    if (!codebook_path.empty()) codebook = load_codebook(codebook_path);

    struct ImageTask {
        fs::path in_path, out_path, sidecar_path;
        json sidecar;
    };
    std::vector<ImageTask> tasks;
    for (const auto& path : list_images(in_dir)) {
        ImageTask t;
        t.in_path = path;
        t.out_path = fs::path(out_dir) / path.filename();
        t.sidecar_path = fs::path(out_dir) / (path.stem().string() + ".json");
        tasks.push_back(std::move(t));
    }

    auto run_one = [&](ImageTask& t) {
        const ImageGrid y = to_single_channel(read_image(t.in_path.string()));
        std::optional<ImageGrid> gt;
        if (!gt_dir.empty()) {
            const fs::path gt_path = fs::path(gt_dir) / t.in_path.filename();
            if (!fs::exists(gt_path)) throw io_error("missing ground truth " + gt_path.string());
            gt = to_single_channel(read_image(gt_path.string()));
        }
        RunLog log;
        json sidecar;
        sidecar["image"] = t.in_path.filename().string();
        sidecar["config"] = cfg_json;
        ImageGrid result;
        if (plus) {
            const EnsembleResult ens = self_ensemble(y, op, cfg);
            result = ens.image;
            // log the averaged run via one extra deterministic pass
            superresolve(y, op, cfg, &log, gt ? &*gt : nullptr);
            json branches = json::array();
            for (const auto& branch : ens.branches) {
                std::vector<unsigned char> bytes(branch.size());
                for (std::size_t i = 0; i < branch.size(); ++i) bytes[i] = sample_to_byte(branch.data()[i]);
                char buf[19];
                std::snprintf(buf, sizeof buf, "%016llx",
                              static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
                branches.push_back(buf);
            }
            sidecar["branch_hashes"] = branches;
            for (const auto& w : ens.warnings) std::cerr << "warning: " << w << "\n";
        } else {
            result = superresolve(y, op, cfg, &log, gt ? &*gt : nullptr);
        }
        sidecar["lipschitz"] = log.lipschitz;
        sidecar["delta"] = log.delta;
        sidecar["delta_prime"] = log.delta_prime;
        sidecar["init_objective"] = log.init_objective;
        if (log.has_init_psnr) sidecar["init_psnr_db"] = log.init_psnr_db;
        json stages = json::array();
        for (const auto& s : log.stages) {
            json stage;
            stage["stage"] = s.stage;
            stage["objective"] = s.objective;
            if (s.has_psnr) stage["psnr_db"] = s.psnr_db;
            stage["seconds"] = s.seconds;
            stages.push_back(stage);
        }
        sidecar["stages"] = stages;
        sidecar["pre_clamp_range"] = {log.pre_clamp_min, log.pre_clamp_max};
        sidecar["seconds"] = log.total_seconds;
        // reconstruction runs on luminance; .ppm containers need three
        // channels, so replicate the gray plane to keep filenames stable
        if (t.out_path.extension() == ".ppm") {
            ImageGrid rgb(result.height(), result.width(), 3);
            for (int ch = 0; ch < 3; ++ch)
                std::copy(result.plane(0), result.plane(0) + result.pixels(), rgb.plane(ch));
            write_image(rgb, t.out_path.string());
        } else {
            write_image(result, t.out_path.string());
        }
        if (codebook && op.kernel) {
            const KernelStretchMap map =
                kernel_stretch(*op.kernel, *codebook, result.height(), result.width());
            save_stretch_map(map, fs::path(out_dir) / (t.in_path.stem().string() + "_kernelmap.txt"));
        }
        t.sidecar = std::move(sidecar);
    };

    const unsigned workers = std::max(1u, std::min(std::thread::hardware_concurrency(), 4u));
    if (workers == 1 || tasks.size() == 1 || plus) {
        for (auto& t : tasks) run_one(t);
    } else {
        std::vector<std::future<void>> futures;
        std::atomic<std::size_t> next{0};
        for (unsigned w = 0; w < workers; ++w)
            futures.push_back(std::async(std::launch::async, [&] {
                for (std::size_t i = next++; i < tasks.size(); i = next++) run_one(tasks[i]);
            }));
        for (auto& f : futures) f.get();
    }

    for (auto& t : tasks) {
        write_json(t.sidecar, t.sidecar_path);
        inputs[t.in_path.filename().string()] = hash_file(t.in_path);
        outputs[t.out_path.filename().string()] = hash_file(t.out_path);
    }
    manifest["inputs"] = inputs;
    manifest["outputs"] = outputs;
    manifest["total_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json(manifest, fs::path(out_dir) / "manifest.json");
    return kExitOk;
}

int cmd_eval(const std::string& sr_dir, const std::string& gt_dir, int crop,
             const std::string& out_csv) {
    const MetricReport report = evaluate_dataset(sr_dir, gt_dir, crop);
    if (!out_csv.empty()) write_metrics_csv(report, out_csv);
    for (const auto& e : report.per_image)
        std::printf("%s  psnr %.6f  ssim %.6f\n", e.name.c_str(), cap_psnr(e.psnr_db), e.ssim);
    std::printf("MEAN  psnr %.6f  ssim %.6f\n", report.mean_psnr_db, report.mean_ssim);
    if (!report.missing.empty()) {
        for (const auto& name : report.missing)
            std::cerr << "missing counterpart for: " << name << "\n";
        return kExitIo;
    }
    return kExitOk;
}

int cmd_kernels_gen(int count, double min_width, double max_width, std::uint64_t seed, int size,
                    const std::string& out_dir) {
    if (count < 1 || min_width <= 0 || max_width < min_width)
        throw config_error("kernels gen: need count >= 1 and 0 < min <= max");
    fs::create_directories(out_dir);
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> width(min_width, max_width);
    for (int i = 0; i < count; ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "kernel_%03d.txt", i);
        save_kernel(make_gaussian_kernel(width(gen), size), (fs::path(out_dir) / name).string());
    }
    return kExitOk;
}

int cmd_kernels_pca(const std::string& in_dir, int scale, int d, const std::string& out_path) {
    std::vector<GaussianKernel> kernels;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(in_dir))
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) kernels.push_back(load_kernel(f.string()));
    if (kernels.empty()) throw io_error("kernels pca: no .txt kernels in " + in_dir);
    if (d <= 0) {
        // retained dimensions follow the scale factor: 6/8/10 for x2/x3/x4
        if (scale == 2) d = 6;
        else if (scale == 3) d = 8;
        else if (scale == 4) d = 10;
        else throw config_error("kernels pca: --d required for scale " + std::to_string(scale));
    }
    save_codebook(pca_fit(kernels, d), out_path);
    return kExitOk;
}

int cmd_kernels_stretch(const std::string& kernel_path, const std::string& codebook_path,
                        int height, int width, const std::string& out_path) {
    const GaussianKernel k = load_kernel(kernel_path);
    const KernelCodebook cb = load_codebook(codebook_path);
    save_stretch_map(kernel_stretch(k, cb, height, width), out_path);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NARM-regularized super-resolution toolkit"};
    app.require_subcommand(1);

    // degrade
    auto* degrade = app.add_subcommand("degrade", "Apply a degradation operator to a directory");
    std::string deg_in, deg_out, deg_mode = "bicubic";
    int deg_scale = 2, deg_kernel_size = 21;
    double deg_kernel_width = 0.0, deg_noise = 0.0;
    std::uint64_t deg_seed = 0;
    degrade->add_option("--in", deg_in, "input HR directory")->required();
    degrade->add_option("--out", deg_out, "output LR directory")->required();
    degrade->add_option("--mode", deg_mode, "bicubic | direct | blur_direct");
    degrade->add_option("--scale", deg_scale, "downsampling factor")->check(CLI::Range(1, 4));
    degrade->add_option("--kernel-width", deg_kernel_width, "Gaussian width for blur_direct");
    degrade->add_option("--kernel-size", deg_kernel_size, "kernel side length (odd)");
    degrade->add_option("--noise-sigma", deg_noise, "additive Gaussian noise level on [0,1] samples");
    auto* seed_opt = degrade->add_option("--seed", deg_seed, "noise seed");

    // sr
    auto* sr = app.add_subcommand("sr", "Reconstruct a directory of LR images");
    std::string sr_in, sr_out, sr_cfg_path, sr_mode = "bicubic", sr_kernel, sr_codebook, sr_gt;
    int sr_scale = 2;
    bool sr_plus = false;
    std::map<std::string, std::string> overrides;
    sr->add_option("--in", sr_in, "LR input directory")->required();
    sr->add_option("--out", sr_out, "output directory")->required();
    sr->add_option("--config", sr_cfg_path, "solver config file (key=value)");
    sr->add_option("--degradation", sr_mode, "bicubic | direct | blur_direct");
    sr->add_option("--scale", sr_scale, "upscaling factor")->check(CLI::Range(1, 4));
    sr->add_option("--kernel", sr_kernel, "kernel file for blur_direct");
    sr->add_option("--codebook", sr_codebook, "codebook file; writes kernel stretch maps");
    sr->add_option("--gt", sr_gt, "ground-truth directory for per-stage PSNR logging");
    sr->add_flag("--plus", sr_plus, "geometric self-ensemble over 8 transforms");
    // every solver config key doubles as a flag
    {
        auto keys = config_items(SolverConfig{});
        keys.emplace_back("narm_weights_file", "");
        for (const auto& [key, value] : keys) {
            std::string flag = "--" + key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            sr->add_option_function<std::string>(
                  flag, [&overrides, key = key](const std::string& v) { overrides[key] = v; },
                  "solver config override")
                ->type_name("VALUE");
        }
    }

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "PSNR/SSIM of reconstructions against ground truth");
    std::string eval_sr, eval_gt, eval_csv;
    int eval_crop = 0;
    eval_cmd->add_option("--sr", eval_sr, "reconstruction directory")->required();
    eval_cmd->add_option("--gt", eval_gt, "ground-truth directory")->required();
    eval_cmd->add_option("--crop", eval_crop, "border crop in pixels before metrics");
    eval_cmd->add_option("--out", eval_csv, "CSV report path");

    // kernels
    auto* kernels = app.add_subcommand("kernels", "Blur-kernel tooling");
    kernels->require_subcommand(1);
    auto* kgen = kernels->add_subcommand("gen", "Sample Gaussian kernels uniformly in a width range");
    int kgen_count = 32, kgen_size = 21;
    double kgen_min = 0.2, kgen_max = 3.0;
    std::uint64_t kgen_seed = 0;
    std::string kgen_out;
    kgen->add_option("--count", kgen_count, "number of kernels");
    kgen->add_option("--min", kgen_min, "minimum width");
    kgen->add_option("--max", kgen_max, "maximum width");
    kgen->add_option("--seed", kgen_seed, "sampling seed")->required();
    kgen->add_option("--size", kgen_size, "kernel side length (odd)");
    kgen->add_option("--out", kgen_out, "output directory")->required();

    auto* kpca = kernels->add_subcommand("pca", "Fit a PCA codebook over kernel files");
    std::string kpca_in, kpca_out;
    int kpca_scale = 2, kpca_d = 0;
    kpca->add_option("--in", kpca_in, "directory of kernel .txt files")->required();
    kpca->add_option("--scale", kpca_scale, "scale factor selecting d = 6/8/10");
    kpca->add_option("--d", kpca_d, "override retained dimensions");
    kpca->add_option("--out", kpca_out, "codebook output file")->required();

    auto* kstretch = kernels->add_subcommand("stretch", "Project a kernel and broadcast to a map");
    std::string ks_kernel, ks_codebook, ks_out;
    int ks_h = 0, ks_w = 0;
    kstretch->add_option("--kernel", ks_kernel, "kernel file")->required();
    kstretch->add_option("--codebook", ks_codebook, "codebook file")->required();
    kstretch->add_option("--height", ks_h, "map height")->required();
    kstretch->add_option("--width", ks_w, "map width")->required();
    kstretch->add_option("--out", ks_out, "map output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*degrade)
            return cmd_degrade(argc, argv, deg_in, deg_out, deg_mode, deg_scale, deg_kernel_width,
                               deg_kernel_size, deg_noise, deg_seed, seed_opt->count() > 0);
        if (*sr) {
            SolverConfig cfg;
            if (!sr_cfg_path.empty()) load_solver_config(sr_cfg_path, cfg);
            for (const auto& [k, v] : overrides) set_config_key(cfg, k, v);
            const DegradationOp op = make_op(sr_mode, sr_scale, sr_kernel, 0.0, 21);
            return cmd_sr(argc, argv, sr_in, sr_out, cfg, op, sr_gt, sr_codebook, sr_plus);
        }
        if (*eval_cmd) return cmd_eval(eval_sr, eval_gt, eval_crop, eval_csv);
        if (*kgen) return cmd_kernels_gen(kgen_count, kgen_min, kgen_max, kgen_seed, kgen_size, kgen_out);
        if (*kpca) return cmd_kernels_pca(kpca_in, kpca_scale, kpca_d, kpca_out);
        if (*kstretch) return cmd_kernels_stretch(ks_kernel, ks_codebook, ks_h, ks_w, ks_out);
        std::cerr << "no subcommand selected\n";
        return kExitUsage;
    } catch (const config_error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const io_error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitIo;
    } catch (const numerical_error& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitNumerical;
    }
}
