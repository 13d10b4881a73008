#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "narmsr/degradation.hpp"
#include "narmsr/denoiser.hpp"
#include "narmsr/errors.hpp"
#include "narmsr/image.hpp"
#include "narmsr/metrics.hpp"
#include "narmsr/narm.hpp"

namespace narmsr {

enum class SolverMode { kMoG, kDpdnn };
enum class NarmBackend { kClosedForm, kAttention };

/// Hyperparameters of the unfolded reconstruction. The objective being
/// descended is
///   ||y - A x||^2 + mu ||y - A(x+e)||^2 + gamma ||S x - (x+e)||^2
///     + eta ||x - v||^2
/// with v refreshed by the denoiser and S rebuilt from x once per stage.
/// Absent step sizes resolve to step_safety / L, with L estimated by power
/// iteration on the composite quadratic operator at initialization.
struct SolverConfig {
    SolverMode mode = SolverMode::kMoG;
    double mu = 0.2;
    double gamma_narm = 0.1;
    double eta = 0.5;
    std::optional<double> delta;        // e-step size
    std::optional<double> delta_prime;  // x-step size
    double step_safety = 0.8;
    int power_iters = 20;
    int stages = 4;
    int inner_x_steps = 1;
    int inner_e_steps = 1;
    DenoiserSpec denoiser;
    double strength_decay = 0.8;  // denoiser strength multiplier per stage
    NarmParams narm;
    NarmBackend narm_backend = NarmBackend::kClosedForm;
    EmbeddingWeights embedding = EmbeddingWeights::uniform_default(1);
    // Comparison knob: flips the e sign inside the second fidelity residual of
    // the x update to A(x - e). The default A(x + e) matches the objective.
    bool mu_residual_minus_e = false;
};

inline void validate(const SolverConfig& cfg) {
    if (cfg.mu < 0 || cfg.gamma_narm < 0 || cfg.eta < 0)
        throw std::invalid_argument("SolverConfig: weights must be nonnegative");
    if (cfg.delta && *cfg.delta <= 0) throw std::invalid_argument("SolverConfig: delta must be positive");
    if (cfg.delta_prime && *cfg.delta_prime <= 0)
        throw std::invalid_argument("SolverConfig: delta_prime must be positive");
    if (cfg.stages < 0) throw std::invalid_argument("SolverConfig: stages must be >= 0");
    if (cfg.inner_x_steps < 1 || cfg.inner_e_steps < 1)
        throw std::invalid_argument("SolverConfig: inner step counts must be >= 1");
    if (cfg.step_safety <= 0) throw std::invalid_argument("SolverConfig: step_safety must be positive");
    if (cfg.strength_decay < 0) throw std::invalid_argument("SolverConfig: strength_decay must be >= 0");
    validate(cfg.narm);
}

/// One stage's variables: HR estimate x, denoised auxiliary v, AR modeling
/// error e, and the NARM matrix S built from the stage's input x.
struct StageState {
    ImageGrid x;
    ImageGrid v;
    ImageGrid e;
    NarmMatrix S;
    int stage_index = 0;
};

struct StageLogEntry {
    int stage = 0;
    double objective = 0.0;
    bool has_psnr = false;
    double psnr_db = 0.0;
    double seconds = 0.0;
};

struct RunLog {
    double lipschitz = 0.0;
    double delta = 0.0;
    double delta_prime = 0.0;
    double init_objective = 0.0;
    bool has_init_psnr = false;
    double init_psnr_db = 0.0;
    std::vector<StageLogEntry> stages;
    double pre_clamp_min = 0.0;
    double pre_clamp_max = 0.0;
    double total_seconds = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

inline double require_step(const std::optional<double>& step, const char* name) {
    if (!step)
        throw config_error(std::string("solver: ") + name +
                           " is unresolved; call superresolve or set it explicitly");
    return *step;
}

/// S built from the given image with the configured backend.
inline NarmMatrix build_stage_s(const ImageGrid& x, const SolverConfig& cfg) {
    if (cfg.narm_backend == NarmBackend::kAttention)
        return attention_as_S(x, cfg.embedding, cfg.narm.q);
    return build_narm_matrix(x, cfg.narm);
}

inline ImageGrid deterministic_unit_image(int h, int w, std::uint64_t seed) {
    ImageGrid v(h, w, 1);
    std::uint64_t s = seed;
    auto next = [&s]() {  // splitmix64
        s += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    };
    for (std::size_t i = 0; i < v.size(); ++i)
        v.data()[i] = static_cast<double>(next() >> 11) * (2.0 / 9007199254740992.0) - 1.0;
    const double n = norm2(v);
    return scale(v, 1.0 / n);
}

}  // namespace detail

/// Largest eigenvalue of the composite half-gradient operator
///   M = (1 + mu) A^T A + gamma (S - I)^T (S - I) + eta I
/// estimated by power iteration from a fixed pseudorandom start. Step sizes
/// up to 2/L keep the quadratic objective non-increasing; the solver uses
/// step_safety / L.
inline double estimate_lipschitz(const DegradationOp& op, const NarmMatrix& s,
                                 const SolverConfig& cfg, int hr_height, int hr_width) {
    const double mu = cfg.mode == SolverMode::kDpdnn ? 0.0 : cfg.mu;
    const double gamma = cfg.mode == SolverMode::kDpdnn ? 0.0 : cfg.gamma_narm;
    auto apply_m = [&](const ImageGrid& v) {
        ImageGrid out = scale(apply_adjoint(op, apply(op, v), hr_height, hr_width), 1.0 + mu);
        if (gamma > 0.0) {
            ImageGrid rs = subtract(s.apply(v), v);                 // (S - I) v
            ImageGrid back = subtract(s.apply_transpose(rs), rs);   // (S - I)^T rs
            out = axpy(out, gamma, back);
        }
        return axpy(out, cfg.eta, v);
    };
    ImageGrid v = detail::deterministic_unit_image(hr_height, hr_width, 0x5eedULL);
    double lambda = cfg.eta;
    for (int it = 0; it < cfg.power_iters; ++it) {
        const ImageGrid w = apply_m(v);
        lambda = dot(v, w);
        const double n = norm2(w);
        if (n < 1e-300) break;
        v = scale(w, 1.0 / n);
    }
    return std::max(lambda, 1e-12);
}

/// Resolve auto step sizes against the power-iteration bound.
inline SolverConfig resolve_steps(const SolverConfig& cfg, const DegradationOp& op,
                                  const NarmMatrix& s, int hr_height, int hr_width,
                                  double* lipschitz_out = nullptr) {
    SolverConfig out = cfg;
    if (!cfg.delta || !cfg.delta_prime || lipschitz_out) {
        const double lip = estimate_lipschitz(op, s, cfg, hr_height, hr_width);
        if (lipschitz_out) *lipschitz_out = lip;
        const double step = cfg.step_safety / lip;
        if (!out.delta) out.delta = step;
        if (!out.delta_prime) out.delta_prime = step;
    }
    return out;
}

/// Bicubic initialization: x0 is y interpolated to the HR grid, v0 = x0,
/// e0 = 0, S built from x0 (closed-form or attention backend; skipped in
/// DPDNN mode, which never reads S).
inline StageState init_state(const ImageGrid& y, const DegradationOp& op, const SolverConfig& cfg) {
    require_single_channel(y, "init_state");
    validate(op);
    validate(cfg);
    StageState st;
    st.x = bicubic_upsample(y, op.scale);
    st.v = st.x;
    st.e = ImageGrid(st.x.height(), st.x.width(), 1, 0.0);
    if (cfg.mode == SolverMode::kMoG) st.S = detail::build_stage_s(st.x, cfg);
    st.stage_index = 0;
    return st;
}

/// Error update: inner_e_steps gradient steps on
///   mu ||y - A(x+e)||^2 + gamma ||x + e - S x||^2
/// at fixed x, i.e. e <- e - delta [mu A^T(A(x+e) - y) + gamma (x + e - S x)].
inline ImageGrid update_e(const StageState& state, const ImageGrid& y, const DegradationOp& op,
                          const SolverConfig& cfg) {
    const double delta = detail::require_step(cfg.delta, "delta");
    const int h = state.x.height(), w = state.x.width();
    const ImageGrid sx = cfg.gamma_narm > 0.0 ? state.S.apply(state.x) : ImageGrid(h, w, 1, 0.0);
    ImageGrid e = state.e;
    for (int it = 0; it < cfg.inner_e_steps; ++it) {
        ImageGrid grad(h, w, 1, 0.0);
        if (cfg.mu > 0.0) {
            const ImageGrid xe = axpy(state.x, 1.0, e);
            const ImageGrid residual = subtract(apply(op, xe), y);
            grad = scale(apply_adjoint(op, residual, h, w), cfg.mu);
        }
        if (cfg.gamma_narm > 0.0) {
            ImageGrid rs = axpy(subtract(state.x, sx), 1.0, e);  // x + e - S x
            grad = axpy(grad, cfg.gamma_narm, rs);
        }
        e = axpy(e, -delta, grad);
    }
    return e;
}

/// Reconstruction update: inner_x_steps gradient steps on the full stage
/// objective at fixed v, e and S. The bracket is the exact half-gradient
///   A^T(A x - y) + mu A^T(A(x+e) - y)
///     + gamma (S - I)^T((S - I) x - e) + eta (x - v).
inline ImageGrid update_x(const StageState& state, const ImageGrid& y, const DegradationOp& op,
                          const SolverConfig& cfg) {
    const double delta_prime = detail::require_step(cfg.delta_prime, "delta_prime");
    const int h = state.x.height(), w = state.x.width();
    ImageGrid x = state.x;
    for (int it = 0; it < cfg.inner_x_steps; ++it) {
        ImageGrid grad = apply_adjoint(op, subtract(apply(op, x), y), h, w);
        if (cfg.mu > 0.0) {
            const double e_sign = cfg.mu_residual_minus_e ? -1.0 : 1.0;
            const ImageGrid xe = axpy(x, e_sign, state.e);
            grad = axpy(grad, cfg.mu, apply_adjoint(op, subtract(apply(op, xe), y), h, w));
        }
        if (cfg.gamma_narm > 0.0) {
            ImageGrid rs = subtract(subtract(state.S.apply(x), x), state.e);  // (S-I)x - e
            ImageGrid back = subtract(state.S.apply_transpose(rs), rs);
            grad = axpy(grad, cfg.gamma_narm, back);
        }
        if (cfg.eta > 0.0) grad = axpy(grad, cfg.eta, subtract(x, state.v));
        x = axpy(x, -delta_prime, grad);
    }
    return x;
}

/// Baseline update without the NARM terms:
///   x <- x - delta [A^T(A x - y) + eta (x - v)].
inline ImageGrid update_x_dpdnn(const StageState& state, const ImageGrid& y,
                                const DegradationOp& op, const SolverConfig& cfg) {
    const double delta = detail::require_step(cfg.delta, "delta");
    const int h = state.x.height(), w = state.x.width();
    ImageGrid grad = apply_adjoint(op, subtract(apply(op, state.x), y), h, w);
    if (cfg.eta > 0.0) grad = axpy(grad, cfg.eta, subtract(state.x, state.v));
    return axpy(state.x, -delta, grad);
}

/// The four data terms of the stage objective (the denoiser prior itself is
/// not evaluable):
///   ||y-Ax||^2 + mu ||y-A(x+e)||^2 + gamma ||Sx-(x+e)||^2 + eta ||x-v||^2.
inline double objective_value(const StageState& state, const ImageGrid& y,
                              const DegradationOp& op, const SolverConfig& cfg) {
    auto sq = [](const ImageGrid& g) { return dot(g, g); };
    const double mu = cfg.mode == SolverMode::kDpdnn ? 0.0 : cfg.mu;
    const double gamma = cfg.mode == SolverMode::kDpdnn ? 0.0 : cfg.gamma_narm;
    double total = sq(subtract(apply(op, state.x), y));
    if (mu > 0.0) {
        const ImageGrid xe = axpy(state.x, 1.0, state.e);
        total += mu * sq(subtract(apply(op, xe), y));
    }
    if (gamma > 0.0) {
        const ImageGrid xe = axpy(state.x, 1.0, state.e);
        total += gamma * sq(subtract(state.S.apply(state.x), xe));
    }
    if (cfg.eta > 0.0) total += cfg.eta * sq(subtract(state.x, state.v));
    return total;
}

/// One full stage in the fixed module order: denoise v from x, rebuild S from
/// x, take the e gradient step, then the x gradient step.
inline StageState run_stage(const StageState& state, const ImageGrid& y, const DegradationOp& op,
                            const SolverConfig& cfg) {
    StageState next = state;
    DenoiserSpec spec = cfg.denoiser;
    spec.strength *= std::pow(cfg.strength_decay, state.stage_index);
    next.v = denoise(spec, state.x);
    if (cfg.mode == SolverMode::kDpdnn) {
        next.x = update_x_dpdnn(next, y, op, cfg);
    } else {
        next.S = detail::build_stage_s(state.x, cfg);
        next.e = update_e(next, y, op, cfg);
        next.x = update_x(next, y, op, cfg);
    }
    next.stage_index = state.stage_index + 1;
    return next;
}

/// Full reconstruction: bicubic initialization, `stages` alternation stages,
/// final clamp to [0,1]. Optionally reports per-stage objectives and PSNR
/// against a ground-truth image (cropped by the scale factor).
inline ImageGrid superresolve(const ImageGrid& y, const DegradationOp& op, const SolverConfig& raw_cfg,
                              RunLog* log = nullptr, const ImageGrid* ground_truth = nullptr) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    StageState state = init_state(y, op, raw_cfg);
    double lipschitz = 0.0;
    const SolverConfig cfg =
        resolve_steps(raw_cfg, op, state.S, state.x.height(), state.x.width(), &lipschitz);
    if (ground_truth && !ground_truth->same_shape(state.x))
        throw std::invalid_argument("superresolve: ground truth shape mismatch");

    if (log) {
        log->lipschitz = lipschitz;
        log->delta = *cfg.delta;
        log->delta_prime = *cfg.delta_prime;
        log->init_objective = objective_value(state, y, op, cfg);
        if (ground_truth) {
            log->has_init_psnr = true;
            log->init_psnr_db = cap_psnr(psnr(clamp01(state.x), *ground_truth, op.scale));
        }
    }
    for (int t = 0; t < cfg.stages; ++t) {
        const auto s0 = clock::now();
        state = run_stage(state, y, op, cfg);
        if (log) {
            StageLogEntry entry;
            entry.stage = t + 1;
            entry.objective = objective_value(state, y, op, cfg);
            entry.seconds = std::chrono::duration<double>(clock::now() - s0).count();
            if (ground_truth) {
                entry.has_psnr = true;
                entry.psnr_db = cap_psnr(psnr(clamp01(state.x), *ground_truth, op.scale));
            }
            log->stages.push_back(entry);
        }
    }
    const auto [lo, hi] = sample_range(state.x);
    if (log) {
        log->pre_clamp_min = lo;
        log->pre_clamp_max = hi;
        log->total_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    }
    return clamp01(state.x);
}

struct EnsembleResult {
    ImageGrid image;
    std::vector<ImageGrid> branches;  // inverse-transformed branch outputs
    std::vector<std::string> warnings;
};

/// Geometric self-ensemble: reconstruct the eight dihedral transforms of y,
/// map each result back and average. Requires a transform-equivariant
/// operator to be exact; decimation-based modes are anchored at the top-left
/// sample and are therefore only approximately equivariant (warned, not
/// rejected).
inline EnsembleResult self_ensemble(const ImageGrid& y, const DegradationOp& op,
                                    const SolverConfig& cfg) {
    EnsembleResult result;
    if (op.mode != DegradationMode::kBicubic)
        result.warnings.push_back(
            "self_ensemble: decimation anchor makes this operator non-equivariant under "
            "rotations/flips; ensemble is approximate");
    std::vector<std::future<ImageGrid>> tasks;
    tasks.reserve(8);
    for (int k = 0; k < 8; ++k)
        tasks.push_back(std::async(std::launch::async, [&, k] {
            const ImageGrid yk = dihedral_transform(y, k);
            return dihedral_inverse(superresolve(yk, op, cfg), k);
        }));
    result.branches.reserve(8);
    for (auto& t : tasks) result.branches.push_back(t.get());

    // pairwise tree sum, exact for identical branches
    std::vector<ImageGrid> acc = result.branches;
    while (acc.size() > 1) {
        std::vector<ImageGrid> next;
        for (std::size_t i = 0; i + 1 < acc.size(); i += 2) next.push_back(axpy(acc[i], 1.0, acc[i + 1]));
        if (acc.size() % 2) next.push_back(acc.back());
        acc = std::move(next);
    }
    result.image = scale(acc.front(), 1.0 / 8.0);
    return result;
}

}  // namespace narmsr
