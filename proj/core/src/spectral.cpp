#include "donet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "donet/svd.hpp"

namespace donet {

namespace {

double dist_sq(const Matrix& pts, std::size_t i, std::size_t j) {
    double d = 0.0;
    for (std::size_t r = 0; r < pts.rows(); ++r) {
        const double t = pts(r, i) - pts(r, j);
        d += t * t;
    }
    return d;
}

} // namespace

KnnResult knn(const Matrix& points, std::size_t k) {
    const std::size_t m = points.cols();
    if (k >= m) throw std::invalid_argument("knn: k must be < number of points");
    KnnResult res;
    res.neighbors.resize(m);
    std::vector<std::pair<double, std::size_t>> cand(m - 1);
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t c = 0;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const double d = dist_sq(points, i, j);
            if (d == 0.0) res.has_duplicates = true;
            cand[c++] = {d, j};
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        res.neighbors[i].resize(k);
        for (std::size_t l = 0; l < k; ++l) res.neighbors[i][l] = cand[l].second;
    }
    return res;
}

double tv_frequency(const Matrix& points, const std::vector<double>& y, std::size_t k) {
    const std::size_t m = points.cols();
    if (y.size() != m) throw std::invalid_argument("tv_frequency: y size mismatch");
    const KnnResult g = knn(points, k);
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j : g.neighbors[i]) {
            const double d = std::sqrt(dist_sq(points, i, j));
            if (d == 0.0)
                throw std::runtime_error("tv_frequency: zero distance between points " +
                                         std::to_string(i) + " and " + std::to_string(j));
            sum += std::abs(y[i] - y[j]) / d;
        }
    return sum / (double(m) * double(k));
}

double laplacian_energy(const Matrix& points, const std::vector<double>& y, std::size_t k) {
    const std::size_t m = points.cols();
    if (m < 2) throw std::invalid_argument("laplacian_energy: need at least 2 points");
    if (y.size() != m) throw std::invalid_argument("laplacian_energy: y size mismatch");
    const double yy = dot(y, y);
    if (yy == 0.0) throw std::invalid_argument("laplacian_energy: y must be nonzero");
    const KnnResult g = knn(points, k);
    // y^T L y with L = (L0 + L0^T)/2 equals y^T L0 y, evaluated in the
    // difference form so constant signals give exactly zero.
    double quad = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double scale = 0.0;
        for (std::size_t j : g.neighbors[i]) scale += dist_sq(points, i, j);
        double row = 0.0;
        for (std::size_t j : g.neighbors[i]) {
            const double w = scale > 0.0
                                 ? std::exp(-(double(k) / 2.0) * dist_sq(points, i, j) / scale)
                                 : 1.0;
            row += w * (y[i] - y[j]);
        }
        quad += y[i] * row;
    }
    return quad / yy;
}

double projected_fourier(const Matrix& points, const std::vector<double>& y,
                         const std::vector<std::vector<double>>& projections,
                         const std::vector<double>& freq_grid) {
    if (projections.empty()) throw std::invalid_argument("projected_fourier: no projections");
    if (freq_grid.empty()) throw std::invalid_argument("projected_fourier: empty frequency grid");
    const std::size_t m = points.cols();
    if (y.size() != m) throw std::invalid_argument("projected_fourier: y size mismatch");

    std::vector<double> power(freq_grid.size(), 0.0);
    std::vector<double> s(m);
    for (const std::vector<double>& u : projections) {
        if (u.size() != points.rows())
            throw std::invalid_argument("projected_fourier: projection dimension mismatch");
        for (std::size_t i = 0; i < m; ++i) {
            double p = 0.0;
            for (std::size_t r = 0; r < points.rows(); ++r) p += u[r] * points(r, i);
            s[i] = p;
        }
        for (std::size_t f = 0; f < freq_grid.size(); ++f) {
            double re = 0.0, im = 0.0;
            const double w = 2.0 * std::numbers::pi * freq_grid[f];
            for (std::size_t i = 0; i < m; ++i) {
                re += y[i] * std::cos(w * s[i]);
                im -= y[i] * std::sin(w * s[i]);
            }
            power[f] += (re * re + im * im) / double(projections.size());
        }
    }
    double num = 0.0, den = 0.0;
    for (std::size_t f = 0; f < freq_grid.size(); ++f) {
        num += power[f] * freq_grid[f];
        den += power[f];
    }
    if (den == 0.0) throw std::invalid_argument("projected_fourier: zero spectrum (y = 0?)");
    return num / den;
}

std::vector<std::vector<double>> default_projections(const Matrix& points, std::size_t z) {
    const SvdFactors f = svd(points);
    if (z > f.s.size()) throw std::invalid_argument("default_projections: z exceeds rank bound");
    std::vector<std::vector<double>> out(z);
    for (std::size_t j = 0; j < z; ++j) out[j] = f.u.column(j);
    return out;
}

std::vector<double> default_freq_grid(const Matrix& points, const std::vector<double>& projection,
                                      std::size_t count) {
    const std::size_t m = points.cols();
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double p = 0.0;
        for (std::size_t r = 0; r < points.rows(); ++r) p += projection[r] * points(r, i);
        if (i == 0) lo = hi = p;
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    const double range = hi - lo;
    if (range <= 0.0) throw std::invalid_argument("default_freq_grid: degenerate projected range");
    const double f_max = double(m) / (2.0 * range);
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = f_max * double(i) / double(count - 1);
    return grid;
}

std::vector<double> dictated_frequencies(const SyntheticSpec& spec) {
    if (spec.f0 <= 0.0) throw std::invalid_argument("dictated_frequencies: f0 must be positive");
    std::vector<double> f(spec.n_modes);
    for (std::size_t j = 1; j <= spec.n_modes; ++j) {
        const double e = spec.alpha > 0.0 ? spec.alpha * double(j - 1)
                                          : spec.alpha * (double(j) - 1.0 - double(spec.n_modes));
        f[j - 1] = spec.f0 * std::exp(e);
    }
    return f;
}

namespace {

void gram_schmidt_pass(Matrix& v) {
    for (std::size_t j = 0; j < v.cols(); ++j) {
        std::vector<double> col = v.column(j);
        for (std::size_t l = 0; l < j; ++l) {
            const std::vector<double> prev = v.column(l);
            const double c = dot(col, prev);
            for (std::size_t i = 0; i < col.size(); ++i) col[i] -= c * prev[i];
        }
        const double nrm = norm2(col);
        if (nrm == 0.0) throw std::runtime_error("synth_rsf: column became zero in Gram-Schmidt");
        for (double& x : col) x /= nrm;
        v.set_column(j, col);
    }
}

} // namespace

SynthRsf synth_rsf(const SyntheticSpec& spec, Rng& rng) {
    if (spec.trials < 1) throw std::invalid_argument("synth_rsf: need at least 1 trial");
    const std::size_t m = spec.m;
    const std::size_t dim = spec.input_dim;
    SynthRsf out;
    out.points = Matrix(dim, m);
    for (std::size_t i = 0; i < m; ++i) {
        const double a = rng.uniform();
        for (std::size_t r = 0; r < dim; ++r)
            out.points(r, i) = a * (1.0 + 0.1 * rng.uniform(-1.0, 1.0));
    }

    const std::vector<double> freqs = dictated_frequencies(spec);
    out.v = Matrix(m, spec.n_modes);
    std::vector<double> w(m);
    for (std::size_t j = 0; j < spec.n_modes; ++j) {
        bool accepted = false;
        for (std::size_t trial = 0; trial < spec.trials && !accepted; ++trial) {
            std::vector<double> d(dim);
            for (double& x : d) x = 1.0 + rng.normal();
            for (std::size_t i = 0; i < m; ++i) {
                double p = 0.0;
                for (std::size_t r = 0; r < dim; ++r) p += d[r] * out.points(r, i);
                w[i] = std::sin(2.0 * std::numbers::pi * freqs[j] * p);
            }
            const double nrm = norm2(w);
            if (nrm == 0.0) continue;
            for (double& x : w) x /= nrm;
            double worst = 0.0;
            for (std::size_t l = 0; l < j; ++l) {
                const std::vector<double> prev = out.v.column(l);
                worst = std::max(worst, std::abs(dot(w, prev)));
            }
            if (worst < spec.threshold) {
                out.v.set_column(j, w);
                accepted = true;
            }
        }
        if (!accepted)
            throw std::runtime_error("synth_rsf: no acceptable candidate for mode " +
                                     std::to_string(j + 1) + " after " +
                                     std::to_string(spec.trials) + " trials");
    }
    gram_schmidt_pass(out.v);
    gram_schmidt_pass(out.v); // re-orthogonalization pass
    return out;
}

SynthBundle synth_dataset(const SyntheticSpec& spec, Rng& rng, std::size_t n_grid) {
    if (spec.beta == 0.0) throw std::invalid_argument("synth_dataset: beta must be nonzero");
    SynthRsf rsf = synth_rsf(spec, rng);
    SynthBundle out;
    const std::size_t n = n_grid == 0 ? spec.n_modes : n_grid;
    if (n < spec.n_modes) throw std::invalid_argument("synth_dataset: n_grid < n_modes");
    out.points = std::move(rsf.points);
    out.v = std::move(rsf.v);
    out.frequencies = dictated_frequencies(spec);
    out.sigma.resize(spec.n_modes);
    for (std::size_t j = 0; j < spec.n_modes; ++j) out.sigma[j] = std::exp(spec.beta * double(j + 1));
    out.phi = Matrix(n, spec.n_modes);
    for (std::size_t j = 0; j < spec.n_modes; ++j) out.phi(j, j) = 1.0;
    out.a = Matrix(n, spec.m);
    for (std::size_t j = 0; j < spec.n_modes; ++j)
        for (std::size_t i = 0; i < spec.m; ++i) out.a(j, i) = out.sigma[j] * out.v(i, j);
    return out;
}

void save_frequencies_csv(const std::vector<double>& tv, const std::vector<double>& le,
                          const std::vector<double>& pf, const std::vector<double>* dictated,
                          const std::string& path) {
    const std::size_t n = tv.size();
    if (le.size() != n || pf.size() != n || (dictated && dictated->size() != n))
        throw std::invalid_argument("save_frequencies_csv: column length mismatch");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("save_frequencies_csv: cannot open " + path);
    f << "mode,tv_k3,le_k50,proj_fourier" << (dictated ? ",dictated" : "") << "\n";
    char buf[200];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g", i + 1, tv[i], le[i], pf[i]);
        f << buf;
        if (dictated) {
            std::snprintf(buf, sizeof buf, ",%.17g", (*dictated)[i]);
            f << buf;
        }
        f << "\n";
    }
}

} // namespace donet
