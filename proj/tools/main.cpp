// Command-line front end: dataset generation, training runs, sweeps, and
// the spectral toolkit, all writing CSV/JSON artifacts per run directory.
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"

#include "donet/experiment.hpp"

namespace fs = std::filesystem;
using namespace donet;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string preset_name;
    std::vector<std::string> series;
};

// Shared config options. Each flag only overrides the JSON/preset value
// when the user actually passed it, so flags win over files.
void add_config_options(CLI::App* cmd, CommonOpts& opts, ExperimentConfig& cfg) {
    cmd->add_option("--config", opts.config_path, "JSON config file");
    cmd->add_option("--preset", opts.preset_name, "named preset (desk-kdv, ...)");
    cmd->add_option("--problem", cfg.problem, "ad | kdv | burgers");
    cmd->add_option("--tau", cfg.tau, "final time");
    cmd->add_option("--n-grid", cfg.n_grid, "solution grid points (0 = default)");
    cmd->add_option("--input-dim", cfg.input_dim, "branch input samples M (0 = default)");
    cmd->add_option("--spectral-basis", cfg.spectral_basis, "Burgers solver modes");
    cmd->add_option("--dt", cfg.dt, "solver step (0 = stability-based)");
    cmd->add_option("--m-train", cfg.m_train, "training samples");
    cmd->add_option("--m-test", cfg.m_test, "test samples");
    cmd->add_option("--n-modes,-N", cfg.n_modes, "inner dimension");
    cmd->add_option("--trunk", cfg.trunk,
                    "learned | svd-scaled | svd-unscaled | legendre | chebyshev | cosine");
    cmd->add_flag("--stacked", cfg.stacked, "one branch net per mode");
    cmd->add_option("--width", cfg.width, "branch width");
    cmd->add_option("--depth", cfg.depth, "hidden layers");
    cmd->add_option("--optimizer", cfg.optimizer, "gd | adam | adagrad");
    cmd->add_option("--alpha1", cfg.alpha1, "initial learning rate");
    cmd->add_option("--reweight-e", cfg.reweight_e, "mode-loss weighting exponent");
    cmd->add_option("--epochs", cfg.epochs, "training epochs");
    cmd->add_option("--seed", cfg.seed, "RNG seed (required)");
    cmd->add_option("--out", cfg.out_dir, "output directory");
    cmd->add_option("--mode-snapshot-every", cfg.mode_snapshot_every, "mode-loss cadence");
    cmd->add_option("--coupling-every", cfg.coupling_every, "coupling sampling cadence");
    cmd->add_option("--coupling-alpha", cfg.coupling_alpha, "step size in the coupling matrix");
    cmd->add_option("--series", opts.series,
                    "plot series to emit (mode_losses, loss_curves, coupling, basis_sweep)");
}

// Base config from file/preset, then re-parse flags on top of it.
ExperimentConfig resolve_config(CLI::App* cmd, const CommonOpts& opts, const ExperimentConfig& cli_cfg) {
    ExperimentConfig cfg;
    if (!opts.preset_name.empty()) cfg = preset(opts.preset_name);
    if (!opts.config_path.empty()) {
        if (!opts.preset_name.empty()) throw ConfigError("--config and --preset are exclusive");
        cfg = load_config(opts.config_path);
    }
    auto took = [&](const std::string& flag) { return cmd->count(flag) > 0; };
    if (took("--problem")) cfg.problem = cli_cfg.problem;
    if (took("--tau")) cfg.tau = cli_cfg.tau;
    if (took("--n-grid")) cfg.n_grid = cli_cfg.n_grid;
    if (took("--input-dim")) cfg.input_dim = cli_cfg.input_dim;
    if (took("--spectral-basis")) cfg.spectral_basis = cli_cfg.spectral_basis;
    if (took("--dt")) cfg.dt = cli_cfg.dt;
    if (took("--m-train")) cfg.m_train = cli_cfg.m_train;
    if (took("--m-test")) cfg.m_test = cli_cfg.m_test;
    if (took("--n-modes")) cfg.n_modes = cli_cfg.n_modes;
    if (took("--trunk")) cfg.trunk = cli_cfg.trunk;
    if (took("--stacked")) cfg.stacked = cli_cfg.stacked;
    if (took("--width")) cfg.width = cli_cfg.width;
    if (took("--depth")) cfg.depth = cli_cfg.depth;
    if (took("--optimizer")) cfg.optimizer = cli_cfg.optimizer;
    if (took("--alpha1")) cfg.alpha1 = cli_cfg.alpha1;
    if (took("--reweight-e")) cfg.reweight_e = cli_cfg.reweight_e;
    if (took("--epochs")) cfg.epochs = cli_cfg.epochs;
    if (took("--seed")) {
        cfg.seed = cli_cfg.seed;
        cfg.has_seed = true;
    }
    if (took("--out")) cfg.out_dir = cli_cfg.out_dir;
    if (took("--mode-snapshot-every")) cfg.mode_snapshot_every = cli_cfg.mode_snapshot_every;
    if (took("--coupling-every")) cfg.coupling_every = cli_cfg.coupling_every;
    if (took("--coupling-alpha")) cfg.coupling_alpha = cli_cfg.coupling_alpha;
    if (!cfg.has_seed) throw ConfigError("missing config field: seed");
    return cfg;
}

void emit_requested_series(const std::string& dir, const std::vector<std::string>& series) {
    for (const std::string& kind : series) emit_plot_series(dir, kind);
}

void print_run(const RunReport& r) {
    std::printf("run %s: train delta=%.3e (trunk %.3e, branch %.3e), "
                "test delta=%.3e%s, %.1fs -> %s\n",
                r.hash.c_str(), r.err_train.delta_total, r.err_train.delta_trunk,
                r.err_train.delta_branch, r.err_test.delta_total,
                r.history.diverged ? " [DIVERGED]" : "", r.wall_seconds, r.out_dir.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DeepONet error-decomposition toolkit"};
    app.require_subcommand(1);

    // gen-data has its own small surface.
    auto* gen = app.add_subcommand("gen-data", "generate and save a dataset pair");
    CommonOpts gen_opts;
    ExperimentConfig gen_cfg;
    add_config_options(gen, gen_opts, gen_cfg);

    struct Sub {
        CLI::App* cmd;
        CommonOpts opts;
        ExperimentConfig cfg;
    };
    auto make = [&](const char* name, const char* desc) {
        auto s = std::make_unique<Sub>();
        s->cmd = app.add_subcommand(name, desc);
        add_config_options(s->cmd, s->opts, s->cfg);
        return s;
    };
    auto train_cmd = make("train", "train one model and decompose its error");
    auto bases_cmd = make("sweep-bases", "error decomposition across trunk bases and N");
    std::vector<std::string> bases_list;
    std::vector<std::size_t> n_list;
    bases_cmd->cmd->add_option("--bases", bases_list, "trunk kinds to sweep");
    bases_cmd->cmd->add_option("--n-list", n_list, "inner dimensions to sweep");
    auto exps_cmd = make("sweep-exponents", "mode-loss runs across weighting exponents");
    std::vector<double> e_list;
    exps_cmd->cmd->add_option("--e-list", e_list, "weighting exponents")->required();
    auto opts_cmd = make("sweep-optimizers", "mode-loss runs across optimizers");
    std::vector<std::string> opt_list;
    opts_cmd->cmd->add_option("--optimizers", opt_list, "optimizers to sweep")->required();
    auto widths_cmd = make("sweep-widths", "coupling runs across branch widths");
    std::vector<std::size_t> width_list;
    widths_cmd->cmd->add_option("--widths", width_list, "widths to sweep")->required();
    auto coup_cmd = make("coupling", "train while sampling the mode-coupling matrix");

    auto* spec_cmd = app.add_subcommand("spectral", "frequency estimates for dataset modes");
    std::string spec_dataset, spec_out = "spectral";
    std::size_t spec_modes = 8, spec_tv_k = 3, spec_le_k = 50;
    spec_cmd->add_option("--dataset", spec_dataset, "dataset directory (gen-data layout)")
        ->required();
    spec_cmd->add_option("--out", spec_out, "output directory");
    spec_cmd->add_option("--n-modes,-N", spec_modes, "modes to analyze");
    spec_cmd->add_option("--tv-k", spec_tv_k, "TV neighbors");
    spec_cmd->add_option("--le-k", spec_le_k, "Laplacian-energy neighbors");

    auto* synth_cmd = app.add_subcommand("synth", "synthetic dataset with dictated frequencies");
    SyntheticSpec synth_spec;
    std::uint64_t synth_seed = 0;
    std::string synth_out = "synth";
    synth_cmd->add_option("--n-modes,-N", synth_spec.n_modes, "number of modes");
    synth_cmd->add_option("--f0", synth_spec.f0, "minimum frequency");
    synth_cmd->add_option("--alpha", synth_spec.alpha, "frequency growth rate");
    synth_cmd->add_option("--beta", synth_spec.beta, "singular-value rate (nonzero)");
    synth_cmd->add_option("--m", synth_spec.m, "samples");
    synth_cmd->add_option("--input-dim", synth_spec.input_dim, "input dimension");
    synth_cmd->add_option("--trials", synth_spec.trials, "acceptance trials per mode");
    synth_cmd->add_option("--seed", synth_seed, "RNG seed (required)");
    synth_cmd->add_option("--out", synth_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            ExperimentConfig cfg = resolve_config(gen, gen_opts, gen_cfg);
            ProblemKind kind = problem_kind_from_string(cfg.problem);
            ProblemSpec ps = default_problem_spec(kind, cfg.tau);
            if (cfg.n_grid > 0) ps.grid_points = cfg.n_grid;
            if (cfg.input_dim > 0) ps.input_dim = cfg.input_dim;
            if (cfg.spectral_basis > 0) ps.spectral_basis = cfg.spectral_basis;
            if (cfg.dt > 0.0) ps.dt = cfg.dt;
            Rng rng(cfg.seed);
            const auto [tr, te] = build_dataset(ps, cfg.m_train, cfg.m_test, rng);
            const std::string dir = resolve_out_dir(cfg);
            save_dataset(tr, dir + "/train");
            save_dataset(te, dir + "/test");
            std::printf("wrote %zu train / %zu test snapshots to %s\n", tr.a.cols(), te.a.cols(),
                        dir.c_str());
        } else if (train_cmd->cmd->parsed() || coup_cmd->cmd->parsed()) {
            Sub& s = train_cmd->cmd->parsed() ? *train_cmd : *coup_cmd;
            ExperimentConfig cfg = resolve_config(s.cmd, s.opts, s.cfg);
            if (coup_cmd->cmd->parsed() && cfg.coupling_every == 0) cfg.coupling_every = 10;
            const RunReport r = run(cfg);
            print_run(r);
            emit_requested_series(r.out_dir, s.opts.series);
        } else if (bases_cmd->cmd->parsed()) {
            ExperimentConfig cfg = resolve_config(bases_cmd->cmd, bases_cmd->opts, bases_cmd->cfg);
            if (!bases_list.empty()) cfg.basis_list = bases_list;
            if (!n_list.empty()) cfg.n_list = n_list;
            const auto rows = basis_sweep(cfg);
            std::printf("sweep wrote %zu rows to %s/sweep.csv\n", rows.size(),
                        resolve_out_dir(cfg).c_str());
            emit_requested_series(resolve_out_dir(cfg), bases_cmd->opts.series);
        } else if (exps_cmd->cmd->parsed() || opts_cmd->cmd->parsed() ||
                   widths_cmd->cmd->parsed()) {
            Sub& s = exps_cmd->cmd->parsed() ? *exps_cmd
                     : opts_cmd->cmd->parsed() ? *opts_cmd : *widths_cmd;
            ExperimentConfig base = resolve_config(s.cmd, s.opts, s.cfg);
            std::vector<ExperimentConfig> jobs;
            if (exps_cmd->cmd->parsed()) {
                for (double e : e_list) {
                    ExperimentConfig sub = base;
                    sub.reweight_e = e;
                    sub.out_dir = base.out_dir + "/e_" + std::to_string(e);
                    jobs.push_back(sub);
                }
            } else if (opts_cmd->cmd->parsed()) {
                for (const std::string& o : opt_list) {
                    ExperimentConfig sub = base;
                    sub.optimizer = o;
                    sub.out_dir = base.out_dir + "/" + o;
                    jobs.push_back(sub);
                }
            } else {
                for (std::size_t w : width_list) {
                    ExperimentConfig sub = base;
                    sub.width = w;
                    if (sub.coupling_every == 0) sub.coupling_every = 10;
                    sub.out_dir = base.out_dir + "/w_" + std::to_string(w);
                    jobs.push_back(sub);
                }
            }
            for (const ExperimentConfig& job : jobs) {
                const RunReport r = run(job);
                print_run(r);
                emit_requested_series(r.out_dir, s.opts.series);
            }
        } else if (spec_cmd->parsed()) {
            const Dataset ds = load_dataset(spec_dataset);
            const SvdFactors f = svd(ds.a);
            if (spec_modes > f.s.size()) throw ConfigError("--n-modes exceeds dataset rank bound");
            const Matrix& points = ds.p_hat;
            std::vector<double> tv(spec_modes), le(spec_modes), pf(spec_modes);
            const auto projections = default_projections(points, std::min<std::size_t>(
                                                                     ds.meta.input.n_modes,
                                                                     points.rows()));
            const auto grid = default_freq_grid(points, projections.front());
            for (std::size_t j = 0; j < spec_modes; ++j) {
                const std::vector<double> y = f.v.column(j);
                tv[j] = tv_frequency(points, y, spec_tv_k);
                le[j] = laplacian_energy(points, y, spec_le_k);
                pf[j] = projected_fourier(points, y, projections, grid);
            }
            fs::create_directories(spec_out);
            save_frequencies_csv(tv, le, pf, nullptr, spec_out + "/frequencies.csv");
            std::printf("wrote %zu mode frequency estimates to %s/frequencies.csv\n", spec_modes,
                        spec_out.c_str());
        } else if (synth_cmd->parsed()) {
            if (synth_cmd->count("--seed") == 0) throw ConfigError("missing config field: seed");
            Rng rng(synth_seed);
            const SynthBundle b = synth_dataset(synth_spec, rng);
            fs::create_directories(synth_out);
            save_csv(b.a, synth_out + "/A.csv");
            save_csv(b.points, synth_out + "/X.csv");
            save_csv(b.v, synth_out + "/V.csv");
            std::vector<double> tv(b.v.cols()), le(b.v.cols()), pf(b.v.cols());
            const auto projections = default_projections(b.points, b.points.rows());
            const auto grid = default_freq_grid(b.points, projections.front());
            for (std::size_t j = 0; j < b.v.cols(); ++j) {
                const std::vector<double> y = b.v.column(j);
                tv[j] = tv_frequency(b.points, y, 3);
                le[j] = laplacian_energy(b.points, y, std::min<std::size_t>(50, b.points.cols() - 1));
                pf[j] = projected_fourier(b.points, y, projections, grid);
            }
            save_frequencies_csv(tv, le, pf, &b.frequencies, synth_out + "/frequencies.csv");
            std::printf("wrote synthetic bundle (%zu modes, %zu samples) to %s\n", b.v.cols(),
                        b.points.cols(), synth_out.c_str());
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    }
    return 0;
}
