#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "narmsr/errors.hpp"
#include "narmsr/image.hpp"
#include "narmsr/linalg.hpp"

namespace narmsr {

/// Parameters of the nonlocal auto-regressive model.
struct NarmParams {
    int patch_size = 5;       // odd
    int neighbors = 10;       // J, most-similar patches kept per pixel
    int search_window = 31;   // odd window side around each pixel
    double gamma_reg = 0.01;  // ridge weight of the AR weight solve
    int q = 15;               // odd block side of the attention-style operation
};

inline void validate(const NarmParams& p) {
    if (p.patch_size < 3 || p.patch_size % 2 == 0)
        throw std::invalid_argument("NarmParams: patch_size must be odd and >= 3");
    if (p.search_window < 3 || p.search_window % 2 == 0)
        throw std::invalid_argument("NarmParams: search_window must be odd and >= 3");
    if (p.q < 1 || p.q % 2 == 0) throw std::invalid_argument("NarmParams: q must be odd");
    if (p.neighbors < 1) throw std::invalid_argument("NarmParams: neighbors must be >= 1");
    if (p.gamma_reg < 0.0) throw std::invalid_argument("NarmParams: gamma_reg must be >= 0");
}

struct NeighborEntry {
    PatchRef patch;
    double distance;  // squared Euclidean patch distance
};

/// The J most-similar patches around a center patch, ascending by distance.
struct NeighborSet {
    PatchRef center;
    std::vector<NeighborEntry> neighbors;
};

/// Sparse row-structured matrix over image pixels. Rows hold the nonlocal
/// AR weights of one pixel against its neighbor centers. Rows built from the
/// closed-form weight solve exclude the diagonal and carry at most J entries;
/// rows built from the attention path cover the q x q block (self included).
class NarmMatrix {
public:
    struct Entry {
        int col;
        double weight;
    };

    NarmMatrix() = default;
    explicit NarmMatrix(int n) : n_(n), rows_(n) {}

    int size() const { return n_; }
    std::vector<Entry>& row(int i) { return rows_[i]; }
    const std::vector<Entry>& row(int i) const { return rows_[i]; }

    /// S x as an image of the same shape as x.
    ImageGrid apply(const ImageGrid& x) const {
        require_single_channel(x, "NarmMatrix::apply");
        if (static_cast<int>(x.pixels()) != n_)
            throw std::invalid_argument("NarmMatrix::apply: pixel count mismatch");
        ImageGrid out(x.height(), x.width(), 1);
        const double* src = x.data();
        double* dst = out.data();
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (const Entry& e : rows_[i]) s += e.weight * src[e.col];
            dst[i] = s;
        }
        return out;
    }

    /// S^T x, needed by the reconstruction gradient.
    ImageGrid apply_transpose(const ImageGrid& x) const {
        require_single_channel(x, "NarmMatrix::apply_transpose");
        if (static_cast<int>(x.pixels()) != n_)
            throw std::invalid_argument("NarmMatrix::apply_transpose: pixel count mismatch");
        ImageGrid out(x.height(), x.width(), 1);
        const double* src = x.data();
        double* dst = out.data();
        std::fill(dst, dst + static_cast<std::size_t>(n_), 0.0);
        for (int i = 0; i < n_; ++i)
            for (const Entry& e : rows_[i]) dst[e.col] += e.weight * src[i];
        return out;
    }

private:
    int n_ = 0;
    std::vector<std::vector<Entry>> rows_;
};

inline ImageGrid apply_narm(const NarmMatrix& s, const ImageGrid& x) { return s.apply(x); }

namespace detail {

/// Padded view used by the patch search: image padded by the patch half-width
/// so every in-image center has a resolvable patch.
struct PaddedImage {
    ImageGrid grid;
    int half;
    double sample(int r, int c) const { return grid.at(r + half, c + half); }
    const double* row(int r, int c) const {
        return grid.data() + static_cast<std::size_t>(r + half) * grid.width() + (c + half);
    }
};

inline PaddedImage make_padded(const ImageGrid& img, int patch_size) {
    return PaddedImage{pad_symmetric(img, patch_size / 2), patch_size / 2};
}

inline double patch_ssd(const PaddedImage& p, int r0, int c0, int r1, int c1, int patch_size) {
    const int half = patch_size / 2;
    double acc = 0.0;
    for (int dr = -half; dr <= half; ++dr) {
        const double* a = p.row(r0 + dr, c0 - half);
        const double* b = p.row(r1 + dr, c1 - half);
        for (int j = 0; j < patch_size; ++j) {
            const double d = a[j] - b[j];
            acc += d * d;
        }
    }
    return acc;
}

inline std::vector<double> padded_patch(const PaddedImage& p, int r, int c, int patch_size) {
    const int half = patch_size / 2;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(patch_size) * patch_size);
    for (int dr = -half; dr <= half; ++dr) {
        const double* a = p.row(r + dr, c - half);
        for (int j = 0; j < patch_size; ++j) out.push_back(a[j]);
    }
    return out;
}

/// Candidates are the in-image centers of the search window in row-major
/// order, the center pixel excluded. Ties in distance keep scan order.
inline std::vector<NeighborEntry> search_neighbors(const PaddedImage& p, int height, int width,
                                                   int r, int c, const NarmParams& params) {
    const int wh = params.search_window / 2;
    const int r0 = std::max(0, r - wh), r1 = std::min(height - 1, r + wh);
    const int c0 = std::max(0, c - wh), c1 = std::min(width - 1, c + wh);
    std::vector<std::pair<double, int>> scored;  // (distance, flat index)
    scored.reserve(static_cast<std::size_t>(r1 - r0 + 1) * (c1 - c0 + 1));
    for (int nr = r0; nr <= r1; ++nr)
        for (int nc = c0; nc <= c1; ++nc) {
            if (nr == r && nc == c) continue;
            scored.emplace_back(patch_ssd(p, r, c, nr, nc, params.patch_size), nr * width + nc);
        }
    if (static_cast<int>(scored.size()) < params.neighbors)
        throw std::invalid_argument("find_nonlocal_neighbors: fewer candidates than requested neighbors");
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    std::vector<NeighborEntry> out;
    out.reserve(params.neighbors);
    for (int j = 0; j < params.neighbors; ++j) {
        const auto& [dist, flat] = scored[j];
        out.push_back({PatchRef{flat / width, flat % width, params.patch_size}, dist});
    }
    return out;
}

}  // namespace detail

/// The J patches in the search window closest to the center patch in squared
/// Euclidean distance, self excluded. Border patches resolve through
/// symmetric padding; the window itself clips to the image.
inline NeighborSet find_nonlocal_neighbors(const ImageGrid& img, const PatchRef& center,
                                           const NarmParams& params) {
    require_single_channel(img, "find_nonlocal_neighbors");
    validate(params);
    if (center.size != params.patch_size)
        throw std::invalid_argument("find_nonlocal_neighbors: center patch size differs from params");
    if (center.center_row < 0 || center.center_row >= img.height() || center.center_col < 0 ||
        center.center_col >= img.width())
        throw std::invalid_argument("find_nonlocal_neighbors: center outside the image");
    const auto padded = detail::make_padded(img, params.patch_size);
    NeighborSet set;
    set.center = center;
    set.neighbors = detail::search_neighbors(padded, img.height(), img.width(), center.center_row,
                                             center.center_col, params);
    return set;
}

/// Ridge-regularized AR weights: w = (X^T X + gamma I)^{-1} X^T x, where the
/// columns of X are the neighbor patches. Solved as an SPD system.
inline std::vector<double> solve_ar_weights(const std::vector<double>& center_patch,
                                            const std::vector<std::vector<double>>& neighbor_patches,
                                            double gamma_reg) {
    const int j = static_cast<int>(neighbor_patches.size());
    if (j < 1) throw std::invalid_argument("solve_ar_weights: need at least one neighbor");
    if (gamma_reg < 0.0) throw std::invalid_argument("solve_ar_weights: gamma_reg must be >= 0");
    const std::size_t dim = center_patch.size();
    for (const auto& p : neighbor_patches)
        if (p.size() != dim)
            throw std::invalid_argument("solve_ar_weights: patch length mismatch");
    DenseMatrix gram(j, j);
    std::vector<double> rhs(j, 0.0);
    for (int a = 0; a < j; ++a) {
        for (int b = a; b < j; ++b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < dim; ++i) acc += neighbor_patches[a][i] * neighbor_patches[b][i];
            gram(a, b) = gram(b, a) = acc;
        }
        gram(a, a) += gamma_reg;
        double acc = 0.0;
        for (std::size_t i = 0; i < dim; ++i) acc += neighbor_patches[a][i] * center_patch[i];
        rhs[a] = acc;
    }
    return solve_spd(std::move(gram), std::move(rhs));
}

/// Assemble the sparse NARM matrix: one neighbor search and one weight solve
/// per pixel. Rows are independent, so the work is sharded across threads;
/// the result is identical to the sequential pass.
inline NarmMatrix build_narm_matrix(const ImageGrid& img, const NarmParams& params) {
    require_single_channel(img, "build_narm_matrix");
    validate(params);
    const int h = img.height(), w = img.width();
    const auto padded = detail::make_padded(img, params.patch_size);
    NarmMatrix s(h * w);

    auto fill_rows = [&](int row_begin, int row_end) {
        std::vector<std::vector<double>> patches(params.neighbors);
        for (int r = row_begin; r < row_end; ++r) {
            for (int c = 0; c < w; ++c) {
                const auto found = detail::search_neighbors(padded, h, w, r, c, params);
                const auto center = detail::padded_patch(padded, r, c, params.patch_size);
                for (int j = 0; j < params.neighbors; ++j)
                    patches[j] = detail::padded_patch(padded, found[j].patch.center_row,
                                                      found[j].patch.center_col, params.patch_size);
                const auto weights = solve_ar_weights(center, patches, params.gamma_reg);
                auto& row = s.row(r * w + c);
                row.resize(params.neighbors);
                for (int j = 0; j < params.neighbors; ++j)
                    row[j] = {found[j].patch.center_row * w + found[j].patch.center_col, weights[j]};
            }
        }
    };

    const int threads = std::max(1u, std::min(std::thread::hardware_concurrency(), 8u));
    if (threads == 1 || h < 2 * threads) {
        fill_rows(0, h);
    } else {
        std::vector<std::future<void>> tasks;
        const int chunk = (h + threads - 1) / threads;
        for (int begin = 0; begin < h; begin += chunk)
            tasks.push_back(std::async(std::launch::async, fill_rows, begin, std::min(h, begin + chunk)));
        for (auto& t : tasks) t.get();
    }
    return s;
}

// ---------------------------------------------------------------------------
// Attention-style nonlocal operation
// ---------------------------------------------------------------------------

/// Linear embeddings of the attention-style nonlocal block. theta, phi and g
/// map a pixel feature (c_in values) to c_out values; omega maps back.
/// Defaults make the block a plain box average: zero theta/phi give uniform
/// softmax weights, identity g/omega pass values through.
struct EmbeddingWeights {
    int c_in = 1;
    int c_out = 1;
    std::vector<double> theta;  // c_out x c_in, row-major
    std::vector<double> phi;    // c_out x c_in
    std::vector<double> g;      // c_out x c_in
    std::vector<double> omega;  // c_in x c_out

    static EmbeddingWeights uniform_default(int channels = 1) {
        EmbeddingWeights w;
        w.c_in = w.c_out = channels;
        w.theta.assign(static_cast<std::size_t>(channels) * channels, 0.0);
        w.phi = w.theta;
        w.g = w.theta;
        w.omega = w.theta;
        for (int i = 0; i < channels; ++i) {
            w.g[static_cast<std::size_t>(i) * channels + i] = 1.0;
            w.omega[static_cast<std::size_t>(i) * channels + i] = 1.0;
        }
        return w;
    }
};

inline void validate(const EmbeddingWeights& w) {
    const std::size_t fwd = static_cast<std::size_t>(w.c_out) * w.c_in;
    if (w.c_in < 1 || w.c_out < 1 || w.theta.size() != fwd || w.phi.size() != fwd ||
        w.g.size() != fwd || w.omega.size() != fwd)
        throw std::invalid_argument("EmbeddingWeights: inconsistent dimensions");
    for (const auto* m : {&w.theta, &w.phi, &w.g, &w.omega})
        for (double v : *m)
            if (!std::isfinite(v)) throw std::invalid_argument("EmbeddingWeights: non-finite entry");
}

/// Weights text format: header "c_in c_out", then theta, phi, g (each c_out
/// rows of c_in values) and omega (c_in rows of c_out values).
inline void save_embedding_weights(const EmbeddingWeights& w, const std::string& path) {
    validate(w);
    std::ofstream f(path);
    if (!f) throw io_error("save_embedding_weights: cannot open " + path);
    f.precision(17);
    f << w.c_in << " " << w.c_out << "\n";
    auto dump = [&](const std::vector<double>& m, int rows, int cols) {
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) f << (c ? " " : "") << m[static_cast<std::size_t>(r) * cols + c];
            f << "\n";
        }
    };
    dump(w.theta, w.c_out, w.c_in);
    dump(w.phi, w.c_out, w.c_in);
    dump(w.g, w.c_out, w.c_in);
    dump(w.omega, w.c_in, w.c_out);
    if (!f) throw io_error("save_embedding_weights: write failed for " + path);
}

inline EmbeddingWeights load_embedding_weights(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("load_embedding_weights: cannot open " + path);
    EmbeddingWeights w;
    if (!(f >> w.c_in >> w.c_out) || w.c_in < 1 || w.c_out < 1)
        throw io_error("load_embedding_weights: malformed header in " + path);
    auto slurp = [&](std::vector<double>& m, std::size_t count) {
        m.resize(count);
        for (double& v : m)
            if (!(f >> v)) throw io_error("load_embedding_weights: truncated matrix in " + path);
    };
    const std::size_t fwd = static_cast<std::size_t>(w.c_out) * w.c_in;
    slurp(w.theta, fwd);
    slurp(w.phi, fwd);
    slurp(w.g, fwd);
    slurp(w.omega, fwd);
    return w;
}

namespace detail {

inline void embed(const std::vector<double>& m, int rows, int cols, const double* feat,
                  double* out) {
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (int c = 0; c < cols; ++c) acc += m[static_cast<std::size_t>(r) * cols + c] * feat[c];
        out[r] = acc;
    }
}

}  // namespace detail

/// Attention-style nonlocal operation restricted to the q x q block around
/// each pixel (clipped at the borders): softmax over embedded-Gaussian
/// similarities, a weighted sum of embedded values, a linear map back and a
/// residual add of the input.
inline ImageGrid nonlocal_attention(const ImageGrid& x, const EmbeddingWeights& w, int q) {
    validate(w);
    if (q < 1 || q % 2 == 0) throw std::invalid_argument("nonlocal_attention: q must be odd");
    if (x.channels() != w.c_in)
        throw std::invalid_argument("nonlocal_attention: channel count does not match embedding");
    const int h = x.height(), width = x.width(), cin = w.c_in, cout = w.c_out;
    const int qh = q / 2;
    ImageGrid out(h, width, cin);

    std::vector<double> feat(cin), ti(cout), pj(cout), gj(cout), y(cout);
    std::vector<double> logits, gvals;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < width; ++c) {
            for (int ch = 0; ch < cin; ++ch) feat[ch] = x.at(r, c, ch);
            detail::embed(w.theta, cout, cin, feat.data(), ti.data());
            const int r0 = std::max(0, r - qh), r1 = std::min(h - 1, r + qh);
            const int c0 = std::max(0, c - qh), c1 = std::min(width - 1, c + qh);
            logits.clear();
            gvals.clear();
            double max_logit = -std::numeric_limits<double>::infinity();
            for (int nr = r0; nr <= r1; ++nr)
                for (int nc = c0; nc <= c1; ++nc) {
                    for (int ch = 0; ch < cin; ++ch) feat[ch] = x.at(nr, nc, ch);
                    detail::embed(w.phi, cout, cin, feat.data(), pj.data());
                    detail::embed(w.g, cout, cin, feat.data(), gj.data());
                    double dotv = 0.0;
                    for (int k = 0; k < cout; ++k) dotv += ti[k] * pj[k];
                    logits.push_back(dotv);
                    max_logit = std::max(max_logit, dotv);
                    gvals.insert(gvals.end(), gj.begin(), gj.end());
                }
            double denom = 0.0;
            for (double& l : logits) {
                l = std::exp(l - max_logit);
                denom += l;
            }
            std::fill(y.begin(), y.end(), 0.0);
            for (std::size_t j = 0; j < logits.size(); ++j) {
                const double alpha = logits[j] / denom;
                for (int k = 0; k < cout; ++k) y[k] += alpha * gvals[j * cout + k];
            }
            for (int ch = 0; ch < cin; ++ch) {
                double acc = 0.0;
                for (int k = 0; k < cout; ++k) acc += w.omega[static_cast<std::size_t>(ch) * cout + k] * y[k];
                out.at(r, c, ch) = acc + x.at(r, c, ch);
            }
        }
    }
    return out;
}

/// The attention weights as a sparse S matrix, for the single-channel case
/// where every embedding collapses to a scalar. Row i carries
/// (omega * g * softmax weight) over the q x q block, self included, so that
/// apply_narm(S, x) equals nonlocal_attention(x) minus its residual term.
inline NarmMatrix attention_as_S(const ImageGrid& x, const EmbeddingWeights& w, int q) {
    validate(w);
    require_single_channel(x, "attention_as_S");
    if (w.c_in != 1 || w.c_out != 1)
        throw config_error("attention_as_S: only scalar embeddings (c_in = c_out = 1) are supported");
    if (q < 1 || q % 2 == 0) throw std::invalid_argument("attention_as_S: q must be odd");
    const int h = x.height(), width = x.width();
    const int qh = q / 2;
    const double wt = w.theta[0], wp = w.phi[0], wg = w.g[0], wo = w.omega[0];
    NarmMatrix s(h * width);
    std::vector<double> logits;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < width; ++c) {
            const double ti = wt * x.at(r, c);
            const int r0 = std::max(0, r - qh), r1 = std::min(h - 1, r + qh);
            const int c0 = std::max(0, c - qh), c1 = std::min(width - 1, c + qh);
            logits.clear();
            double max_logit = -std::numeric_limits<double>::infinity();
            for (int nr = r0; nr <= r1; ++nr)
                for (int nc = c0; nc <= c1; ++nc) {
                    const double l = ti * (wp * x.at(nr, nc));
                    logits.push_back(l);
                    max_logit = std::max(max_logit, l);
                }
            double denom = 0.0;
            for (double& l : logits) {
                l = std::exp(l - max_logit);
                denom += l;
            }
            auto& row = s.row(r * width + c);
            row.reserve(logits.size());
            std::size_t j = 0;
            for (int nr = r0; nr <= r1; ++nr)
                for (int nc = c0; nc <= c1; ++nc, ++j)
                    row.push_back({nr * width + nc, wo * wg * (logits[j] / denom)});
        }
    }
    return s;
}

}  // namespace narmsr
