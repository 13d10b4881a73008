// Generates the deterministic 64x64 grayscale fixture crops used by the
// quality tests: blended gradients, edges, and oriented textures with
// content across the frequency range. Output is bit-stable; the checked-in
// PGM files come from this tool.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "narmsr/image.hpp"
#include "narmsr/image_io.hpp"

namespace {

struct SplitMix {
    std::uint64_t s;
    explicit SplitMix(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        s += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(next() >> 11) / 9007199254740992.0;
        return lo + u * (hi - lo);
    }
};

narmsr::ImageGrid make_crop(int index) {
    const int n = 64;
    SplitMix rng(0xF1A7u + 977ull * static_cast<std::uint64_t>(index));
    narmsr::ImageGrid img(n, n, 1);

    // smooth base: a few low-frequency cosine ripples
    const double a0 = rng.uniform(0.35, 0.6);
    struct Wave { double fx, fy, amp, phase; };
    std::vector<Wave> base;
    for (int k = 0; k < 3; ++k)
        base.push_back({rng.uniform(-0.06, 0.06), rng.uniform(-0.06, 0.06),
                        rng.uniform(0.05, 0.16), rng.uniform(0.0, 6.283185)});

    // oriented texture patch (mid frequency, the interesting content for SR)
    const double tex_angle = rng.uniform(0.0, 3.14159);
    const double tex_freq = rng.uniform(0.35, 0.9);
    const double tex_amp = rng.uniform(0.08, 0.2);
    const double cx = rng.uniform(18, 46), cy = rng.uniform(18, 46);
    const double tex_radius = rng.uniform(14, 26);

    // a couple of hard-edged shapes
    const double disc_x = rng.uniform(12, 52), disc_y = rng.uniform(12, 52);
    const double disc_r = rng.uniform(6, 14);
    const double disc_level = rng.uniform(-0.25, 0.25);
    const double edge_pos = rng.uniform(16, 48);
    const double edge_angle = rng.uniform(0.0, 3.14159);
    const double edge_step = rng.uniform(0.1, 0.25);

    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            double v = a0;
            for (const auto& w : base)
                v += w.amp * std::cos(6.283185 * (w.fx * c + w.fy * r) + w.phase);
            const double dt = std::hypot(r - cy, c - cx);
            if (dt < tex_radius) {
                const double u = std::cos(tex_angle) * c + std::sin(tex_angle) * r;
                const double envelope = 0.5 * (1.0 + std::cos(3.14159 * dt / tex_radius));
                v += tex_amp * envelope * std::cos(6.283185 * tex_freq * u / 4.0);
            }
            if (std::hypot(r - disc_y, c - disc_x) < disc_r) v += disc_level;
            const double side = std::cos(edge_angle) * c + std::sin(edge_angle) * r - edge_pos;
            if (side > 0) v += edge_step * (side < 1.5 ? side / 1.5 : 1.0);
            img.at(r, c) = std::min(1.0, std::max(0.0, v));
        }
    }
    return img;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string out_dir = argc > 1 ? argv[1] : ".";
    for (int i = 0; i < 10; ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%s/fixture_%02d.pgm", out_dir.c_str(), i);
        narmsr::write_image(make_crop(i), name);
        std::printf("wrote %s\n", name);
    }
    return 0;
}
