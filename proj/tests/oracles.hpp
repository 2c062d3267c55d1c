#pragma once
// Independent reference implementations used by the tests. Everything here is
// written as plain loops over std::vector/double and shares no code with the
// library beyond its data types.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "texbench/cnn/tensor.hpp"
#include "texbench/image.hpp"
#include "texbench/random.hpp"

namespace oracle {

using texbench::Tensor;

inline Tensor random_tensor(std::vector<int> shape, texbench::SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.values) v = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape != b.shape) return std::numeric_limits<double>::infinity();
    double m = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.values[i]) - b.values[i]));
    return m;
}

/// Direct convolution: output channel, output row, output column, input
/// channel in group, kernel row, kernel column.
inline Tensor conv(const Tensor& in, const Tensor& w, const Tensor& b, int sh, int sw, int ph, int pw, int groups) {
    const int C = in.shape[0], H = in.shape[1], W = in.shape[2];
    const int O = w.shape[0], Cg = w.shape[1], KH = w.shape[2], KW = w.shape[3];
    const int OH = (H + 2 * ph - KH) / sh + 1, OW = (W + 2 * pw - KW) / sw + 1;
    const int Og = O / groups;
    (void)C;
    Tensor out({O, OH, OW});
    for (int o = 0; o < O; ++o)
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                double s = b.values[static_cast<std::size_t>(o)];
                const int g = o / Og;
                for (int c = 0; c < Cg; ++c)
                    for (int ky = 0; ky < KH; ++ky)
                        for (int kx = 0; kx < KW; ++kx) {
                            const int y = oy * sh - ph + ky, x = ox * sw - pw + kx;
                            if (y < 0 || y >= H || x < 0 || x >= W) continue;
                            const double wv = w.values[((static_cast<std::size_t>(o) * Cg + c) * KH + ky) * KW + kx];
                            s += wv * in.at(g * Cg + c, y, x);
                        }
                out.at(o, oy, ox) = static_cast<float>(s);
            }
    return out;
}

inline Tensor lrn(const Tensor& in, int n, double alpha, double beta, double k) {
    const int C = in.shape[0], H = in.shape[1], W = in.shape[2];
    Tensor out(in.shape);
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double s = 0.0;
                for (int cc = c - n / 2; cc <= c + n / 2; ++cc)
                    if (cc >= 0 && cc < C) s += static_cast<double>(in.at(cc, y, x)) * in.at(cc, y, x);
                out.at(c, y, x) = static_cast<float>(in.at(c, y, x) / std::pow(k + alpha / n * s, beta));
            }
    return out;
}

/// Output length of ceil-mode pooling, including the rule that the last
/// window may not start inside the right padding.
inline int pooled_length(int in, int k, int s, int p) {
    int out = static_cast<int>(std::ceil(static_cast<double>(in + 2 * p - k) / s)) + 1;
    if ((out - 1) * s >= in + p) --out;
    return out;
}

inline Tensor pool(const Tensor& in, int kh, int kw, int sh, int sw, int ph, int pw, bool average) {
    const int C = in.shape[0], H = in.shape[1], W = in.shape[2];
    const int OH = pooled_length(H, kh, sh, ph), OW = pooled_length(W, kw, sw, pw);
    Tensor out({C, OH, OW});
    for (int c = 0; c < C; ++c)
        for (int oy = 0; oy < OH; ++oy)
            for (int ox = 0; ox < OW; ++ox) {
                double best = -std::numeric_limits<double>::infinity(), sum = 0.0;
                for (int ky = 0; ky < kh; ++ky)
                    for (int kx = 0; kx < kw; ++kx) {
                        const int y = oy * sh - ph + ky, x = ox * sw - pw + kx;
                        if (y < 0 || y >= H || x < 0 || x >= W) continue;
                        best = std::max(best, static_cast<double>(in.at(c, y, x)));
                        sum += in.at(c, y, x);
                    }
                out.at(c, oy, ox) = static_cast<float>(average ? sum / (kh * kw) : best);
            }
    return out;
}

inline Tensor fc(const Tensor& in, const Tensor& w, const Tensor& b) {
    const int O = w.shape[0], I = w.shape[1];
    Tensor out({O});
    for (int o = 0; o < O; ++o) {
        double s = b.values[static_cast<std::size_t>(o)];
        for (int i = 0; i < I; ++i) s += static_cast<double>(w.values[static_cast<std::size_t>(o) * I + i]) * in.values[static_cast<std::size_t>(i)];
        out.values[static_cast<std::size_t>(o)] = static_cast<float>(s);
    }
    return out;
}

/// Bilinear sample at half-pixel centres with clamped source coordinates.
inline double bilinear_sample(const texbench::ImagePatch& p, double sx, double sy, int c) {
    sx = std::clamp(sx, 0.0, static_cast<double>(p.width - 1));
    sy = std::clamp(sy, 0.0, static_cast<double>(p.height - 1));
    const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
    const int x1 = std::min(x0 + 1, p.width - 1), y1 = std::min(y0 + 1, p.height - 1);
    const double fx = sx - x0, fy = sy - y0;
    return (1 - fy) * ((1 - fx) * p.at(x0, y0, c) + fx * p.at(x1, y0, c)) +
           fy * ((1 - fx) * p.at(x0, y1, c) + fx * p.at(x1, y1, c));
}

/// Diagonal GMM parametrised by standard deviations, all in double.
struct Gmm {
    std::vector<double> w;                 // k
    std::vector<std::vector<double>> mu;   // k x d
    std::vector<std::vector<double>> sd;   // k x d
};

inline double log_likelihood(const Gmm& g, const std::vector<std::vector<double>>& x) {
    double total = 0.0;
    for (const auto& xi : x) {
        std::vector<double> lp(g.w.size());
        for (std::size_t j = 0; j < g.w.size(); ++j) {
            double s = std::log(g.w[j]);
            for (std::size_t r = 0; r < xi.size(); ++r) {
                const double z = (xi[r] - g.mu[j][r]) / g.sd[j][r];
                s += -0.5 * z * z - std::log(g.sd[j][r]) - 0.5 * std::log(2.0 * std::numbers::pi);
            }
            lp[j] = s;
        }
        const double m = *std::max_element(lp.begin(), lp.end());
        double acc = 0.0;
        for (double v : lp) acc += std::exp(v - m);
        total += m + std::log(acc);
    }
    return total;
}

/// Fisher vector before normalization from central finite differences of
/// the log-likelihood: d/dmu scaled by sd / (n sqrt(w)), d/dsd scaled by
/// sd / (n sqrt(2 w)). Means first, then deviations.
inline std::vector<double> fisher_by_differences(const Gmm& g, const std::vector<std::vector<double>>& x, double h) {
    const std::size_t k = g.w.size(), d = g.mu[0].size();
    const double n = static_cast<double>(x.size());
    std::vector<double> out(2 * k * d);
    for (std::size_t j = 0; j < k; ++j)
        for (std::size_t r = 0; r < d; ++r) {
            Gmm a = g, b = g;
            a.mu[j][r] += h;
            b.mu[j][r] -= h;
            const double dmu = (log_likelihood(a, x) - log_likelihood(b, x)) / (2 * h);
            out[j * d + r] = dmu * g.sd[j][r] / (n * std::sqrt(g.w[j]));
            a = g;
            b = g;
            a.sd[j][r] += h;
            b.sd[j][r] -= h;
            const double dsd = (log_likelihood(a, x) - log_likelihood(b, x)) / (2 * h);
            out[(k + j) * d + r] = dsd * g.sd[j][r] / (n * std::sqrt(2.0 * g.w[j]));
        }
    return out;
}

/// Reference for the bias-regularized L1-hinge SVM: accelerated projected
/// gradient on the box-constrained dual, then the primal objective of the
/// recovered (w, b). Returns {objective, w..., b}.
inline std::vector<double> svm_reference(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double C,
                                         int iterations = 20000) {
    const std::size_t n = x.size(), d = x[0].size();
    std::vector<std::vector<double>> Q(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 1.0;
            for (std::size_t r = 0; r < d; ++r) dot += x[i][r] * x[j][r];
            Q[i][j] = y[i] * y[j] * dot;
        }
    double L = 0.0; // Gershgorin bound on the largest eigenvalue
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += std::abs(Q[i][j]);
        L = std::max(L, s);
    }
    std::vector<double> a(n, 0.0), z = a, prev = a;
    double t = 1.0;
    for (int it = 0; it < iterations; ++it) {
        // Dual: maximise sum(a) - 1/2 a'Qa over 0 <= a <= C.
        std::vector<double> next(n);
        for (std::size_t i = 0; i < n; ++i) {
            double grad = 1.0;
            for (std::size_t j = 0; j < n; ++j) grad -= Q[i][j] * z[j];
            next[i] = std::clamp(z[i] + grad / L, 0.0, C);
        }
        const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
        for (std::size_t i = 0; i < n; ++i) z[i] = next[i] + (t - 1.0) / t_next * (next[i] - a[i]);
        a = next;
        t = t_next;
    }
    std::vector<double> w(d + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t r = 0; r < d; ++r) w[r] += a[i] * y[i] * x[i][r];
        w[d] += a[i] * y[i];
    }
    double obj = 0.0;
    for (double v : w) obj += 0.5 * v * v;
    for (std::size_t i = 0; i < n; ++i) {
        double f = w[d];
        for (std::size_t r = 0; r < d; ++r) f += w[r] * x[i][r];
        obj += C * std::max(0.0, 1.0 - y[i] * f);
    }
    std::vector<double> out{obj};
    out.insert(out.end(), w.begin(), w.end());
    return out;
}

/// Small binary SVM instance: n in [2, 20], dim in [1, 3], overlapping classes
/// so some hinge terms stay active, both labels present.
struct SvmInstance {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
    double C = 1.0;
};

inline SvmInstance random_svm_instance(texbench::SplitMix64& rng) {
    SvmInstance s;
    const int n = 2 + static_cast<int>(rng.below(19));
    const int d = 1 + static_cast<int>(rng.below(3));
    const double Cs[] = {0.1, 1.0, 10.0};
    s.C = Cs[rng.below(3)];
    for (int i = 0; i < n; ++i) {
        const int label = i == 0 ? 1 : i == 1 ? -1 : (rng.below(2) ? 1 : -1);
        std::vector<double> row(static_cast<std::size_t>(d));
        for (auto& v : row) v = rng.normal() + 0.8 * label;
        s.x.push_back(row);
        s.y.push_back(label);
    }
    return s;
}

} // namespace oracle
