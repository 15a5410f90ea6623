#include "donet/pde.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

#include "donet/svd.hpp"

namespace donet {

namespace {

constexpr double kPi = std::numbers::pi;

// PDE coefficients (fixed by the problem definitions).
constexpr double kAdvSpeed = 4.0 / (2.0 * kPi);           // AD advection
constexpr double kAdDiffusion = 0.01 / (4.0 * kPi * kPi); // AD diffusion
constexpr double kKdvAdvScale = 1.0 / (2.0 * kPi);        // KdV u/2pi
const double kKdvDispersion = 0.01 / (8.0 * kPi * kPi * kPi);
constexpr double kBurgersViscosity = 0.01;

void validate_input_spec(const InputSpec& s) {
    if (s.frequencies.size() != s.n_modes)
        throw std::invalid_argument("input spec: frequency count != n_modes");
    for (std::size_t i = 0; i < s.frequencies.size(); ++i) {
        if (!(s.frequencies[i] > 0.0))
            throw std::invalid_argument("input spec: frequencies must be strictly positive");
        for (std::size_t j = i + 1; j < s.frequencies.size(); ++j)
            if (s.frequencies[i] == s.frequencies[j])
                throw std::invalid_argument("input spec: frequencies must be distinct");
    }
}

std::vector<double> harmonic_frequencies(std::size_t l, double base) {
    std::vector<double> f(l);
    for (std::size_t i = 0; i < l; ++i) f[i] = base * double(i + 1);
    return f;
}

// RK4 on du/dt = rhs(u), with divergence detection.
template <class Rhs>
std::vector<double> integrate_rk4(std::vector<double> u, double tau, double dt_max, Rhs rhs) {
    const std::size_t steps = std::max<std::size_t>(1, std::size_t(std::ceil(tau / dt_max)));
    const double dt = tau / double(steps);
    const std::size_t n = u.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t step = 0; step < steps; ++step) {
        rhs(u, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + 0.5 * dt * k2[i];
        rhs(tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + dt * k3[i];
        rhs(tmp, k4);
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            ok = ok && std::isfinite(u[i]);
        }
        if (!ok)
            throw std::runtime_error("solver instability at step " + std::to_string(step + 1) +
                                     " of " + std::to_string(steps));
    }
    return u;
}

double ad_dt(const ProblemSpec& spec) {
    if (spec.dt > 0.0) return spec.dt;
    const double h = 1.0 / double(spec.grid_points);
    const double lam_re = 4.0 * kAdDiffusion / (h * h);
    const double lam_im = kAdvSpeed / h;
    return 0.5 * std::min(2.785 / lam_re, 2.82 / lam_im);
}

double kdv_dt(const ProblemSpec& spec) {
    if (spec.dt > 0.0) return spec.dt;
    const double h = 1.0 / double(spec.grid_points);
    // max |sin(2t)-2sin(t)| = 3*sqrt(3)/2 for the 5-point third-derivative
    // stencil. The advective bound allows |u| up to 4x the initial bound
    // sum |a_i| <= L: the weak dispersion lets near-shocks steepen and
    // overshoot well past the initial amplitude before they disperse.
    const double lam_disp = kKdvDispersion * 2.5981 / (h * h * h);
    const double lam_adv = 4.0 * kKdvAdvScale * double(spec.input.n_modes) / h;
    return 0.5 * 2.82 / (lam_disp + lam_adv);
}

std::vector<double> solve_burgers(const ProblemSpec& spec, const std::vector<double>& coeffs) {
    const std::size_t nb = spec.spectral_basis;
    if (nb == 0) throw std::invalid_argument("burgers: spectral_basis must be positive");
    const double dt = spec.dt > 0.0 ? spec.dt : 1e-5;
    // Collocation mesh for the pseudospectral product (DST-I points).
    const std::size_t q = 2 * nb + 1;
    std::vector<double> xq(q);
    for (std::size_t i = 0; i < q; ++i) xq[i] = double(i + 1) / double(q + 1);

    // sin(k pi x_q) tables.
    Matrix sk(nb, q), ck(nb, q);
    for (std::size_t k = 0; k < nb; ++k)
        for (std::size_t i = 0; i < q; ++i) {
            sk(k, i) = std::sin(double(k + 1) * kPi * xq[i]);
            ck(k, i) = std::cos(double(k + 1) * kPi * xq[i]);
        }

    // Project the initial condition onto the sine basis.
    const std::vector<double> u0 = evaluate_input(coeffs, spec.input, xq);
    std::vector<double> c(nb, 0.0);
    const double w = 2.0 / double(q + 1);
    for (std::size_t k = 0; k < nb; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < q; ++i) s += u0[i] * sk(k, i);
        c[k] = w * s;
    }

    const std::size_t steps = std::max<std::size_t>(1, std::size_t(std::ceil(spec.tau / dt)));
    const double h = spec.tau / double(steps);
    std::vector<double> ug(q), uxg(q), nl(nb);
    for (std::size_t step = 0; step < steps; ++step) {
        for (std::size_t i = 0; i < q; ++i) {
            double s = 0.0, sx = 0.0;
            for (std::size_t k = 0; k < nb; ++k) {
                s += c[k] * sk(k, i);
                sx += c[k] * double(k + 1) * kPi * ck(k, i);
            }
            ug[i] = s;
            uxg[i] = sx;
        }
        for (std::size_t k = 0; k < nb; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < q; ++i) s += ug[i] * uxg[i] * sk(k, i);
            nl[k] = w * s;
        }
        bool ok = true;
        for (std::size_t k = 0; k < nb; ++k) {
            const double kp = double(k + 1) * kPi;
            c[k] += h * (-nl[k] - kBurgersViscosity * kp * kp * c[k]);
            ok = ok && std::isfinite(c[k]);
        }
        if (!ok)
            throw std::runtime_error("solver instability at step " + std::to_string(step + 1) +
                                     " of " + std::to_string(steps));
    }

    const std::vector<double> grid = solution_grid(spec);
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < nb; ++k) s += c[k] * std::sin(double(k + 1) * kPi * grid[i]);
        out[i] = s;
    }
    return out;
}

} // namespace

ProblemKind problem_kind_from_string(const std::string& s) {
    if (s == "ad" || s == "advection-diffusion") return ProblemKind::AdvectionDiffusion;
    if (s == "kdv") return ProblemKind::KdV;
    if (s == "burgers") return ProblemKind::Burgers;
    throw std::invalid_argument("unknown problem kind: " + s);
}

std::string to_string(ProblemKind k) {
    switch (k) {
        case ProblemKind::AdvectionDiffusion: return "ad";
        case ProblemKind::KdV: return "kdv";
        case ProblemKind::Burgers: return "burgers";
    }
    return "?";
}

ProblemSpec default_problem_spec(ProblemKind kind, double tau) {
    ProblemSpec s;
    s.kind = kind;
    s.tau = tau;
    switch (kind) {
        case ProblemKind::AdvectionDiffusion:
            s.grid_points = 200;
            s.input_dim = 200;
            s.input.n_modes = 20;
            s.input.frequencies = harmonic_frequencies(20, 2.0 * kPi);
            break;
        case ProblemKind::KdV:
            s.grid_points = 400;
            s.input_dim = 400;
            s.input.n_modes = 5;
            s.input.frequencies = harmonic_frequencies(5, 2.0 * kPi);
            break;
        case ProblemKind::Burgers:
            s.grid_points = 200;
            s.input_dim = 50;
            s.spectral_basis = 100;
            s.input.n_modes = 5;
            s.input.frequencies = harmonic_frequencies(5, kPi);
            break;
    }
    return s;
}

std::vector<double> solution_grid(const ProblemSpec& spec) {
    const std::size_t n = spec.grid_points;
    std::vector<double> g(n);
    if (spec.kind == ProblemKind::Burgers) {
        for (std::size_t j = 0; j < n; ++j) g[j] = double(j + 1) / double(n + 1);
    } else {
        for (std::size_t j = 0; j < n; ++j) g[j] = double(j) / double(n);
    }
    return g;
}

std::vector<double> encoding_mesh(std::size_t m_points) {
    std::vector<double> g(m_points);
    for (std::size_t j = 0; j < m_points; ++j) g[j] = double(j + 1) / double(m_points + 1);
    return g;
}

Matrix sample_inputs(const InputSpec& spec, std::size_t m, Rng& rng) {
    validate_input_spec(spec);
    Matrix c(spec.n_modes, m);
    // Column order so each input function consumes a contiguous draw block.
    for (std::size_t j = 0; j < m; ++j)
        for (std::size_t i = 0; i < spec.n_modes; ++i)
            c(i, j) = rng.uniform(spec.coeff_low, spec.coeff_high);
    return c;
}

static Matrix encoding_matrix(const InputSpec& spec, const std::vector<double>& pts) {
    Matrix psi(pts.size(), spec.n_modes);
    for (std::size_t j = 0; j < pts.size(); ++j)
        for (std::size_t i = 0; i < spec.n_modes; ++i)
            psi(j, i) = std::sin(spec.frequencies[i] * pts[j]);
    return psi;
}

Matrix encode_inputs(const Matrix& coeffs, const InputSpec& spec,
                     const std::vector<double>& sample_points) {
    validate_input_spec(spec);
    if (sample_points.size() < spec.n_modes)
        throw std::invalid_argument("encode_inputs: M < L would lose information");
    if (coeffs.rows() != spec.n_modes)
        throw std::invalid_argument("encode_inputs: coefficient rows != L");
    return multiply(encoding_matrix(spec, sample_points), coeffs);
}

Matrix decode_inputs(const Matrix& p_hat, const InputSpec& spec,
                     const std::vector<double>& sample_points) {
    validate_input_spec(spec);
    if (sample_points.size() < spec.n_modes)
        throw std::invalid_argument("decode_inputs: M < L cannot be inverted");
    if (p_hat.rows() != sample_points.size())
        throw std::invalid_argument("decode_inputs: p_hat rows != M");
    return multiply(pseudoinverse(encoding_matrix(spec, sample_points)), p_hat);
}

std::vector<double> evaluate_input(const std::vector<double>& coeffs, const InputSpec& spec,
                                   const std::vector<double>& grid) {
    if (coeffs.size() != spec.n_modes)
        throw std::invalid_argument("evaluate_input: coefficient count != L");
    std::vector<double> u(grid.size(), 0.0);
    for (std::size_t i = 0; i < spec.n_modes; ++i)
        for (std::size_t j = 0; j < grid.size(); ++j)
            u[j] += coeffs[i] * std::sin(spec.frequencies[i] * grid[j]);
    return u;
}

std::vector<double> solve(const ProblemSpec& spec, const std::vector<double>& input_coeffs) {
    if (spec.kind == ProblemKind::Burgers) return solve_burgers(spec, input_coeffs);

    const std::size_t n = spec.grid_points;
    const double h = 1.0 / double(n);
    const std::vector<double> grid = solution_grid(spec);
    std::vector<double> u0 = evaluate_input(input_coeffs, spec.input, grid);

    if (spec.kind == ProblemKind::AdvectionDiffusion) {
        auto rhs = [n, h](const std::vector<double>& u, std::vector<double>& out) {
            for (std::size_t j = 0; j < n; ++j) {
                const double up = u[(j + 1) % n];
                const double um = u[(j + n - 1) % n];
                const double ux = (up - um) / (2.0 * h);
                const double uxx = (up - 2.0 * u[j] + um) / (h * h);
                out[j] = -kAdvSpeed * ux + kAdDiffusion * uxx;
            }
        };
        return integrate_rk4(std::move(u0), spec.tau, ad_dt(spec), rhs);
    }

    // KdV: dxxx via (-u_{j-2} + 2u_{j-1} - 2u_{j+1} + u_{j+2}) / (2h^3).
    // The advective coefficient uses the three-point average
    // (u_{j-1}+u_j+u_{j+1})/3 (Zabusky-Kruskal form): the semi-discrete
    // nonlinearity then conserves both sum(u) and sum(u^2) exactly, which
    // keeps the weakly-dispersive problem from pumping grid-scale energy
    // on coarse meshes.
    auto rhs = [n, h](const std::vector<double>& u, std::vector<double>& out) {
        const double inv2h = 1.0 / (2.0 * h);
        const double inv2h3 = 1.0 / (2.0 * h * h * h);
        for (std::size_t j = 0; j < n; ++j) {
            const double up1 = u[(j + 1) % n];
            const double um1 = u[(j + n - 1) % n];
            const double up2 = u[(j + 2) % n];
            const double um2 = u[(j + n - 2) % n];
            const double ux = (up1 - um1) * inv2h;
            const double uavg = (um1 + u[j] + up1) / 3.0;
            const double uxxx = (-um2 + 2.0 * um1 - 2.0 * up1 + up2) * inv2h3;
            out[j] = -kKdvAdvScale * uavg * ux - kKdvDispersion * uxxx;
        }
    };
    return integrate_rk4(std::move(u0), spec.tau, kdv_dt(spec), rhs);
}

std::vector<double> analytic_ad(const std::vector<double>& input_coeffs, double tau,
                                const std::vector<double>& grid) {
    std::vector<double> u(grid.size(), 0.0);
    for (std::size_t i = 0; i < input_coeffs.size(); ++i) {
        const double k = double(i + 1);
        const double amp = input_coeffs[i] * std::exp(-0.01 * k * k * tau);
        for (std::size_t j = 0; j < grid.size(); ++j)
            u[j] += amp * std::sin(2.0 * kPi * k * (grid[j] - tau * kAdvSpeed));
    }
    return u;
}

std::pair<Dataset, Dataset> build_dataset(const ProblemSpec& spec, std::size_t m_train,
                                          std::size_t m_test, Rng& rng) {
    validate_input_spec(spec.input);
    if (spec.input_dim < spec.input.n_modes)
        throw std::invalid_argument("build_dataset: M < L");
    if (spec.kind == ProblemKind::AdvectionDiffusion && spec.input_dim < 2 * spec.input.n_modes)
        throw std::invalid_argument("build_dataset: AD requires M >= 2L");

    auto build = [&](std::size_t m, std::uint64_t stream) {
        Dataset ds;
        ds.meta = spec;
        ds.seed = rng.seed();
        ds.grid = solution_grid(spec);
        Rng sub = rng.split(stream);
        ds.coeffs = sample_inputs(spec.input, m, sub);
        ds.p_hat = encode_inputs(ds.coeffs, spec.input, encoding_mesh(spec.input_dim));
        ds.a = Matrix(spec.grid_points, m);
        for (std::size_t j = 0; j < m; ++j)
            ds.a.set_column(j, solve(spec, ds.coeffs.column(j)));
        return ds;
    };
    return {build(m_train, 1), build(m_test, 2)};
}

void save_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json meta = {
        {"problem", to_string(ds.meta.kind)},
        {"tau", ds.meta.tau},
        {"grid_points", ds.meta.grid_points},
        {"input_dim", ds.meta.input_dim},
        {"spectral_basis", ds.meta.spectral_basis},
        {"dt", ds.meta.dt},
        {"n_modes", ds.meta.input.n_modes},
        {"frequencies", ds.meta.input.frequencies},
        {"seed", ds.seed},
        {"m", ds.a.cols()},
    };
    std::ofstream(dir + "/meta.json") << meta.dump(2) << "\n";
    save_csv(ds.a, dir + "/A.csv");
    save_csv(ds.p_hat, dir + "/P.csv");
    save_csv(ds.coeffs, dir + "/coeffs.csv");
    Matrix g(1, ds.grid.size());
    std::copy(ds.grid.begin(), ds.grid.end(), g.data());
    save_csv(g, dir + "/grid.csv");
}

Dataset load_dataset(const std::string& dir) {
    std::ifstream mf(dir + "/meta.json");
    if (!mf) throw std::runtime_error("load_dataset: cannot open " + dir + "/meta.json");
    nlohmann::json meta = nlohmann::json::parse(mf);
    Dataset ds;
    ds.meta.kind = problem_kind_from_string(meta.at("problem"));
    ds.meta.tau = meta.at("tau");
    ds.meta.grid_points = meta.at("grid_points");
    ds.meta.input_dim = meta.at("input_dim");
    ds.meta.spectral_basis = meta.at("spectral_basis");
    ds.meta.dt = meta.at("dt");
    ds.meta.input.n_modes = meta.at("n_modes");
    ds.meta.input.frequencies = meta.at("frequencies").get<std::vector<double>>();
    ds.seed = meta.at("seed");
    ds.a = load_csv(dir + "/A.csv");
    ds.p_hat = load_csv(dir + "/P.csv");
    ds.coeffs = load_csv(dir + "/coeffs.csv");
    const Matrix g = load_csv(dir + "/grid.csv");
    ds.grid.assign(g.data(), g.data() + g.size());
    return ds;
}

} // namespace donet
