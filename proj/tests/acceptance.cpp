// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with the measured numbers. Tolerances are pinned in code.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "narmsr/narmsr.hpp"
#include "support/oracles.hpp"

using namespace narmsr;

namespace {

const std::string kFixtureDir = NARMSR_FIXTURE_DIR;

void report(int index, const char* name, bool pass, const std::string& detail) {
    std::printf("[criterion %2d] %-28s %s  (%s)\n", index, name, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<ImageGrid> load_fixtures() {
    std::vector<ImageGrid> out;
    for (int i = 0; i < 10; ++i) {
        char path[512];
        std::snprintf(path, sizeof path, "%s/fixture_%02d.pgm", kFixtureDir.c_str(), i);
        out.push_back(read_image(path));
    }
    return out;
}

struct FixtureRun {
    double init_psnr;
    std::vector<double> stage_psnr;  // after stages 1..4
};

// Shared T=4 run over the fixture set with the default configuration under
// Direct x2 degradation. Stage t's logged PSNR equals a separate run with
// stages = t (same schedule, same deterministic arithmetic), which criterion
// 8 checks explicitly on one image.
const std::vector<FixtureRun>& default_fixture_runs() {
    static const std::vector<FixtureRun> runs = [] {
        const DegradationOp op{DegradationMode::kDirect, 2, std::nullopt};
        const SolverConfig cfg;  // defaults: T = 4
        std::vector<FixtureRun> out;
        for (const ImageGrid& gt : load_fixtures()) {
            const ImageGrid y = apply(op, gt);
            RunLog log;
            superresolve(y, op, cfg, &log, &gt);
            FixtureRun run;
            run.init_psnr = log.init_psnr_db;
            for (const auto& s : log.stages) run.stage_psnr.push_back(s.psnr_db);
            out.push_back(run);
        }
        return out;
    }();
    return runs;
}

}  // namespace

TEST_CASE("criterion 1: adjoint identity suite") {
    const auto t0 = std::chrono::steady_clock::now();
    auto gen = oracle::rng(0xADu);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    double worst = 0.0;
    int violations = 0;
    for (int mode = 0; mode < 3; ++mode) {
        for (int s : {2, 3, 4}) {
            DegradationOp op;
            op.mode = static_cast<DegradationMode>(mode);
            op.scale = s;
            if (op.mode == DegradationMode::kBlurDirect) op.kernel = make_gaussian_kernel(1.3, 21);
            for (int trial = 0; trial < 100; ++trial) {
                ImageGrid x(16, 16, 1);
                for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = dist(gen);
                const ImageGrid ax = apply(op, x);
                ImageGrid y(ax.height(), ax.width(), 1);
                for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = dist(gen);
                const ImageGrid aty = apply_adjoint(op, y, 16, 16);
                const double gap = std::abs(dot(ax, y) - dot(x, aty));
                const double bound = 1e-10 * norm2(x) * norm2(y);
                worst = std::max(worst, gap / (norm2(x) * norm2(y)));
                if (gap > bound) ++violations;
            }
        }
    }
    const double elapsed = seconds_since(t0);
    const bool pass = violations == 0 && elapsed < 10.0;
    char detail[160];
    std::snprintf(detail, sizeof detail, "900 pairs, worst normalized gap %.2e <= 1e-10, %.2fs < 10s",
                  worst, elapsed);
    report(1, "adjoint identity", pass, detail);
    REQUIRE(violations == 0);
    REQUIRE(elapsed < 10.0);
}

TEST_CASE("criterion 2: ar weight solve vs dense-inverse oracle") {
    const auto t0 = std::chrono::steady_clock::now();
    auto gen = oracle::rng(0xABu);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::uniform_int_distribution<int> jdist(1, 8);
    std::uniform_int_distribution<int> side(3, 7);
    std::uniform_real_distribution<double> gdist(1e-3, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int j = jdist(gen);
        const int dim = side(gen) * side(gen);
        const double gamma = trial % 10 == 0 ? 0.0 : gdist(gen);
        std::vector<double> center(dim);
        for (auto& v : center) v = dist(gen);
        std::vector<std::vector<double>> neighbors(j, std::vector<double>(dim));
        for (auto& p : neighbors)
            for (auto& v : p) v = dist(gen);
        const auto got = solve_ar_weights(center, neighbors, gamma);

        oracle::Mat gram = oracle::zeros(j, j);
        std::vector<double> rhs(j, 0.0);
        for (int a = 0; a < j; ++a) {
            for (int b = 0; b < j; ++b)
                for (int i = 0; i < dim; ++i) gram[a][b] += neighbors[a][i] * neighbors[b][i];
            gram[a][a] += gamma;
            for (int i = 0; i < dim; ++i) rhs[a] += neighbors[a][i] * center[i];
        }
        const auto want = oracle::matvec(oracle::gauss_inverse(gram), rhs);
        worst = std::max(worst, oracle::rel_l2_diff(got, want));
    }
    const double elapsed = seconds_since(t0);
    const bool pass = worst < 1e-8 && elapsed < 5.0;
    char detail[160];
    std::snprintf(detail, sizeof detail, "200 instances, worst relative error %.2e <= 1e-8, %.2fs < 5s",
                  worst, elapsed);
    report(2, "ar weight oracle", pass, detail);
    REQUIRE(worst < 1e-8);
    REQUIRE(elapsed < 5.0);
}

TEST_CASE("criterion 3: gradient steps match finite differences") {
    const auto t0 = std::chrono::steady_clock::now();
    auto gen = oracle::rng(0xFDu);
    double worst_e = 0.0, worst_x = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const int hr = 8;
        DegradationOp op;
        op.mode = static_cast<DegradationMode>(inst % 3);
        op.scale = 2;
        if (op.mode == DegradationMode::kBlurDirect) op.kernel = make_gaussian_kernel(0.8, 5);
        SolverConfig cfg;
        cfg.mu = 0.1 + 0.4 * (inst % 5) / 4.0;
        cfg.gamma_narm = 0.05 + 0.2 * (inst % 7) / 6.0;
        cfg.eta = 0.3 + 0.4 * (inst % 2);
        cfg.narm.patch_size = 3;
        cfg.narm.search_window = 5;
        cfg.narm.neighbors = 4;
        cfg.delta = 0.2;
        cfg.delta_prime = 0.2;
        cfg.inner_e_steps = 1;
        cfg.inner_x_steps = 1;

        StageState st;
        st.x = oracle::random_image(hr, hr, gen);
        st.v = oracle::random_image(hr, hr, gen);
        st.e = oracle::random_image(hr, hr, gen, -0.1, 0.1);
        st.S = build_narm_matrix(oracle::random_image(hr, hr, gen), cfg.narm);
        const ImageGrid y = oracle::random_image(hr / 2, hr / 2, gen);

        // e step: bracket recovered from one update, FD of the error objective
        const ImageGrid sx = st.S.apply(st.x);
        auto je = [&](const ImageGrid& e) {
            const ImageGrid r1 = subtract(apply(op, axpy(st.x, 1.0, e)), y);
            const ImageGrid r2 = subtract(axpy(st.x, 1.0, e), sx);
            return cfg.mu * dot(r1, r1) + cfg.gamma_narm * dot(r2, r2);
        };
        const ImageGrid bracket_e = scale(subtract(st.e, update_e(st, y, op, cfg)), 1.0 / *cfg.delta);
        const ImageGrid fd_e = oracle::fd_gradient(je, st.e);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < fd_e.size(); ++i) {
            const double want = fd_e.data()[i] / 2.0;
            num += (bracket_e.data()[i] - want) * (bracket_e.data()[i] - want);
            den += want * want;
        }
        worst_e = std::max(worst_e, std::sqrt(num / den));

        // x step against the full stage objective
        auto jx = [&](const ImageGrid& x) {
            StageState probe = st;
            probe.x = x;
            return objective_value(probe, y, op, cfg);
        };
        const ImageGrid bracket_x =
            scale(subtract(st.x, update_x(st, y, op, cfg)), 1.0 / *cfg.delta_prime);
        const ImageGrid fd_x = oracle::fd_gradient(jx, st.x);
        num = den = 0.0;
        for (std::size_t i = 0; i < fd_x.size(); ++i) {
            const double want = fd_x.data()[i] / 2.0;
            num += (bracket_x.data()[i] - want) * (bracket_x.data()[i] - want);
            den += want * want;
        }
        worst_x = std::max(worst_x, std::sqrt(num / den));
    }
    const double elapsed = seconds_since(t0);
    const bool pass = worst_e < 1e-6 && worst_x < 1e-6 && elapsed < 30.0;
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "50 instances, worst rel err e %.2e / x %.2e <= 1e-6, %.2fs < 30s", worst_e,
                  worst_x, elapsed);
    report(3, "gradient correctness", pass, detail);
    REQUIRE(worst_e < 1e-6);
    REQUIRE(worst_x < 1e-6);
    REQUIRE(elapsed < 30.0);
}

TEST_CASE("criterion 4: descent at the step bound and exact-solver consistency") {
    auto gen = oracle::rng(0xDEu);
    int violations = 0;
    for (int inst = 0; inst < 50; ++inst) {
        const int hr = 8;
        DegradationOp op;
        op.mode = static_cast<DegradationMode>(inst % 3);
        op.scale = 2;
        if (op.mode == DegradationMode::kBlurDirect) op.kernel = make_gaussian_kernel(1.0, 5);
        SolverConfig cfg;
        cfg.mu = 0.05 + 0.5 * (inst % 4) / 3.0;
        cfg.gamma_narm = 0.02 + 0.3 * (inst % 5) / 4.0;
        cfg.eta = 0.2 + 0.6 * (inst % 3) / 2.0;
        cfg.narm.patch_size = 3;
        cfg.narm.search_window = 5;
        cfg.narm.neighbors = 4;

        StageState st;
        st.x = oracle::random_image(hr, hr, gen);
        st.v = oracle::random_image(hr, hr, gen);
        st.e = oracle::random_image(hr, hr, gen, -0.2, 0.2);
        st.S = build_narm_matrix(oracle::random_image(hr, hr, gen), cfg.narm);
        const ImageGrid y = oracle::random_image(hr / 2, hr / 2, gen);

        const double lip = estimate_lipschitz(op, st.S, cfg, hr, hr);
        cfg.delta = 1.0 / lip;  // the power-iteration bound
        cfg.delta_prime = 1.0 / lip;

        const double before = objective_value(st, y, op, cfg);
        StageState mid = st;
        mid.e = update_e(st, y, op, cfg);
        const double after_e = objective_value(mid, y, op, cfg);
        StageState done = mid;
        done.x = update_x(mid, y, op, cfg);
        const double after_x = objective_value(done, y, op, cfg);
        if (after_e > before * (1 + 1e-12) + 1e-15) ++violations;
        if (after_x > after_e * (1 + 1e-12) + 1e-15) ++violations;
    }

    // exact dense solution of the x subproblem on 12x12 instances
    double worst_rel = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
        const int n = 12;
        DegradationOp op{DegradationMode::kDirect, 2, std::nullopt};
        if (inst % 2) {
            op.mode = DegradationMode::kBlurDirect;
            op.kernel = make_gaussian_kernel(0.9, 5);
        }
        SolverConfig cfg;
        cfg.narm.patch_size = 3;
        cfg.narm.search_window = 5;
        cfg.narm.neighbors = 4;
        StageState st;
        st.x = oracle::random_image(n, n, gen);
        st.v = oracle::random_image(n, n, gen);
        st.e = oracle::random_image(n, n, gen, -0.1, 0.1);
        st.S = build_narm_matrix(oracle::random_image(n, n, gen), cfg.narm);
        const ImageGrid y = oracle::random_image(n / 2, n / 2, gen);
        double lip = 0.0;
        SolverConfig rcfg = resolve_steps(cfg, op, st.S, n, n, &lip);

        const auto w = oracle::materialize(
            [&](const ImageGrid& v) {
                ImageGrid out = scale(apply_adjoint(op, apply(op, v), n, n), 1.0 + cfg.mu);
                const ImageGrid rs = subtract(st.S.apply(v), v);
                out = axpy(out, cfg.gamma_narm, subtract(st.S.apply_transpose(rs), rs));
                return axpy(out, cfg.eta, v);
            },
            n, n);
        ImageGrid b = apply_adjoint(op, y, n, n);
        b = axpy(b, cfg.mu, apply_adjoint(op, subtract(y, apply(op, st.e)), n, n));
        b = axpy(b, cfg.gamma_narm, subtract(st.S.apply_transpose(st.e), st.e));
        b = axpy(b, cfg.eta, st.v);
        const auto exact = oracle::gauss_solve(w, std::vector<double>(b.data(), b.data() + b.size()));

        // the exact solution's objective never exceeds the single-step one
        SolverConfig one = rcfg;
        one.inner_x_steps = 1;
        StageState one_step = st;
        one_step.x = update_x(st, y, op, one);
        StageState exact_state = st;
        exact_state.x = ImageGrid::from_data(n, n, 1, exact);
        REQUIRE(objective_value(exact_state, y, op, cfg) <=
                objective_value(one_step, y, op, cfg) + 1e-12);

        SolverConfig many = rcfg;
        many.inner_x_steps = 200;
        const ImageGrid x200 = update_x(st, y, op, many);
        worst_rel = std::max(
            worst_rel, oracle::rel_l2_diff(std::vector<double>(x200.data(), x200.data() + x200.size()),
                                           exact));
    }
    const bool pass = violations == 0 && worst_rel < 1e-4;
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "0 descent violations in 100 updates; 200-step iterate within %.2e <= 1e-4",
                  worst_rel);
    report(4, "descent & exact solver", pass, detail);
    REQUIRE(violations == 0);
    REQUIRE(worst_rel < 1e-4);
}

TEST_CASE("criterion 5: nonlocal operation oracle") {
    auto gen = oracle::rng(0xA7u);
    std::uniform_real_distribution<double> wdist(-1.2, 1.2);
    double worst = 0.0, worst_row = 0.0;
    for (int q : {5, 15}) {
        for (int trial = 0; trial < 10; ++trial) {
            const ImageGrid x = oracle::random_image(10, 10, gen);
            EmbeddingWeights w;
            w.c_in = w.c_out = 1;
            w.theta = {wdist(gen)};
            w.phi = {wdist(gen)};
            w.g = {wdist(gen)};
            w.omega = {wdist(gen)};
            const ImageGrid got = nonlocal_attention(x, w, q);
            const int qh = q / 2;
            for (int r = 0; r < 10; ++r)
                for (int c = 0; c < 10; ++c) {
                    double num = 0.0, den = 0.0;
                    for (int nr = std::max(0, r - qh); nr <= std::min(9, r + qh); ++nr)
                        for (int nc = std::max(0, c - qh); nc <= std::min(9, c + qh); ++nc) {
                            const double f =
                                std::exp((w.theta[0] * x.at(r, c)) * (w.phi[0] * x.at(nr, nc)));
                            num += f * (w.g[0] * x.at(nr, nc));
                            den += f;
                        }
                    const double want = w.omega[0] * (num / den) + x.at(r, c);
                    worst = std::max(worst, std::abs(got.at(r, c) - want));
                }

            // softmax rows, exposed through the S bridge with unit scalings
            EmbeddingWeights unit = w;
            unit.g = {1.0};
            unit.omega = {1.0};
            const NarmMatrix s = attention_as_S(x, unit, q);
            for (int i = 0; i < s.size(); ++i) {
                double sum = 0.0;
                for (const auto& e : s.row(i)) {
                    sum += e.weight;
                    if (e.weight < 0.0) worst_row = 1.0;
                }
                worst_row = std::max(worst_row, std::abs(sum - 1.0));
            }
        }
    }
    const bool pass = worst < 1e-10 && worst_row <= 1e-12;
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "q in {5,15}, 20 inputs: worst |diff| %.2e <= 1e-10, row-sum gap %.2e <= 1e-12",
                  worst, worst_row);
    report(5, "nonlocal operation oracle", pass, detail);
    REQUIRE(worst < 1e-10);
    REQUIRE(worst_row <= 1e-12);
}

TEST_CASE("criterion 6: mode equivalence at zero narm weights") {
    auto gen = oracle::rng(0x6Eu);
    double worst = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
        DegradationOp op{inst % 2 ? DegradationMode::kBicubic : DegradationMode::kDirect, 2,
                         std::nullopt};
        const ImageGrid y = oracle::random_image(8, 8, gen);
        SolverConfig mog;
        mog.mu = 0.0;
        mog.gamma_narm = 0.0;
        mog.stages = 3;
        mog.narm.patch_size = 3;
        mog.narm.search_window = 7;
        mog.narm.neighbors = 4;
        SolverConfig dpdnn = mog;
        dpdnn.mode = SolverMode::kDpdnn;

        StageState sa = init_state(y, op, mog);
        StageState sb = init_state(y, op, dpdnn);
        const SolverConfig ra = resolve_steps(mog, op, sa.S, 16, 16);
        const SolverConfig rb = resolve_steps(dpdnn, op, sb.S, 16, 16);
        for (int t = 0; t < 3; ++t) {
            sa = run_stage(sa, y, op, ra);
            sb = run_stage(sb, y, op, rb);
            worst = std::max(worst, oracle::max_abs_diff(sa.x, sb.x));
        }
    }
    const bool pass = worst < 1e-12;
    char detail[160];
    std::snprintf(detail, sizeof detail, "per-stage max |diff| %.2e <= 1e-12", worst);
    report(6, "mode equivalence", pass, detail);
    REQUIRE(worst < 1e-12);
}

TEST_CASE("criterion 7: fixture quality gain over the bicubic initialization") {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& runs = default_fixture_runs();
    double mean_gain = 0.0, worst_gain = 1e9;
    for (const auto& run : runs) {
        const double gain = run.stage_psnr.back() - run.init_psnr;
        mean_gain += gain;
        worst_gain = std::min(worst_gain, gain);
    }
    mean_gain /= static_cast<double>(runs.size());
    const double elapsed = seconds_since(t0);

    // margin measured once on this fixture set and frozen as the reference
    const double kFrozenMeanGain = 1.0722;
    const bool pass = mean_gain >= 0.3 && worst_gain >= -0.1 &&
                      std::abs(mean_gain - kFrozenMeanGain) < 0.05 && elapsed < 120.0;
    char detail[200];
    std::snprintf(detail, sizeof detail,
                  "mean gain %.4f dB >= 0.3 (frozen %.4f), worst %.4f >= -0.1, %.1fs < 120s",
                  mean_gain, kFrozenMeanGain, worst_gain, elapsed);
    report(7, "fixture quality gain", pass, detail);
    REQUIRE(mean_gain >= 0.3);
    REQUIRE(worst_gain >= -0.1);
    REQUIRE(std::abs(mean_gain - kFrozenMeanGain) < 0.05);
    REQUIRE(elapsed < 120.0);
}

TEST_CASE("criterion 8: psnr is non-decreasing in the stage count") {
    const auto& runs = default_fixture_runs();
    std::vector<double> mean_by_t(4, 0.0);
    for (const auto& run : runs)
        for (int t = 0; t < 4; ++t) mean_by_t[t] += run.stage_psnr[t];
    for (auto& v : mean_by_t) v /= static_cast<double>(runs.size());

    // a separate stages=t run reproduces stage t of the full log exactly
    const DegradationOp op{DegradationMode::kDirect, 2, std::nullopt};
    const ImageGrid gt = load_fixtures()[0];
    const ImageGrid y = apply(op, gt);
    SolverConfig short_cfg;
    short_cfg.stages = 2;
    const ImageGrid two_stage = superresolve(y, op, short_cfg);
    REQUIRE(psnr(two_stage, gt, 2) == Catch::Approx(runs[0].stage_psnr[1]).margin(1e-12));

    bool monotone = true;
    for (int t = 1; t < 4; ++t)
        if (mean_by_t[t] < mean_by_t[t - 1] - 0.05) monotone = false;
    char detail[200];
    std::snprintf(detail, sizeof detail, "mean PSNR by T: %.3f %.3f %.3f %.3f (tolerance 0.05)",
                  mean_by_t[0], mean_by_t[1], mean_by_t[2], mean_by_t[3]);
    report(8, "stage-count trend", monotone, detail);
    REQUIRE(monotone);
}

TEST_CASE("criterion 9: pca codebook fidelity") {
    auto gen = oracle::rng(0x9Cu);
    std::uniform_real_distribution<double> width(0.2, 3.0);
    std::vector<GaussianKernel> kernels;
    for (int i = 0; i < 60; ++i) kernels.push_back(make_gaussian_kernel(width(gen), 21));
    const KernelCodebook cb = pca_fit(kernels, 6);

    // reconstruction error as the residual energy fraction of each kernel
    double worst_energy = 0.0;
    for (const auto& k : kernels) {
        const auto coeffs = kernel_project(k, cb);
        std::vector<double> recon = cb.mean;
        for (int r = 0; r < cb.d; ++r)
            for (int i = 0; i < cb.k2; ++i) recon[i] += coeffs[r] * cb.basis[r][i];
        double num = 0.0, den = 0.0;
        for (int i = 0; i < cb.k2; ++i) {
            num += (recon[i] - k.taps[i]) * (recon[i] - k.taps[i]);
            den += k.taps[i] * k.taps[i];
        }
        worst_energy = std::max(worst_energy, num / den);
    }
    double worst_ortho = 0.0;
    for (int a = 0; a < cb.d; ++a)
        for (int b = 0; b < cb.d; ++b) {
            double d = 0.0;
            for (int i = 0; i < cb.k2; ++i) d += cb.basis[a][i] * cb.basis[b][i];
            worst_ortho = std::max(worst_ortho, std::abs(d - (a == b ? 1.0 : 0.0)));
        }
    const bool pass = worst_energy < 1e-3 && worst_ortho < 1e-8;
    char detail[160];
    std::snprintf(detail, sizeof detail,
                  "worst residual energy fraction %.2e <= 1e-3, orthonormality gap %.2e <= 1e-8",
                  worst_energy, worst_ortho);
    report(9, "pca codebook", pass, detail);
    REQUIRE(worst_energy < 1e-3);
    REQUIRE(worst_ortho < 1e-8);
}

TEST_CASE("criterion 10: metric sanity and self-ensemble floor") {
    const auto fixtures = load_fixtures();

    // PSNR of a uniform 1/255 offset
    ImageGrid shifted = fixtures[0];
    for (std::size_t i = 0; i < shifted.size(); ++i) shifted.data()[i] += 1.0 / 255.0;
    const double offset_psnr = psnr(fixtures[0], shifted, 0);
    const bool psnr_ok = std::abs(offset_psnr - 48.13) <= 0.01;

    bool ssim_ok = true;
    for (const auto& f : fixtures) ssim_ok = ssim_ok && (ssim(f, f, 0) == 1.0);

    // ensemble never falls more than 0.05 dB behind the single run
    const DegradationOp op{DegradationMode::kBicubic, 2, std::nullopt};
    const SolverConfig cfg;
    double single_mean = 0.0, ensemble_mean = 0.0;
    for (const auto& gt : fixtures) {
        const ImageGrid y = apply(op, gt);
        single_mean += psnr(superresolve(y, op, cfg), gt, 2);
        ensemble_mean += psnr(self_ensemble(y, op, cfg).image, gt, 2);
    }
    single_mean /= static_cast<double>(fixtures.size());
    ensemble_mean /= static_cast<double>(fixtures.size());
    const bool ensemble_ok = ensemble_mean >= single_mean - 0.05;

    const bool pass = psnr_ok && ssim_ok && ensemble_ok;
    char detail[220];
    std::snprintf(detail, sizeof detail,
                  "offset PSNR %.4f dB (48.13 +- 0.01), SSIM(a,a)=1 %s, ensemble %.4f vs single %.4f",
                  offset_psnr, ssim_ok ? "exact" : "BROKEN", ensemble_mean, single_mean);
    report(10, "metrics & self-ensemble", pass, detail);
    REQUIRE(psnr_ok);
    REQUIRE(ssim_ok);
    REQUIRE(ensemble_ok);
}
