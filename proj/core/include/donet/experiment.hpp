#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "donet/coupling.hpp"
#include "donet/deeponet.hpp"
#include "donet/errdecomp.hpp"
#include "donet/spectral.hpp"

namespace donet {

/// Invalid configuration (maps to exit code 2, vs 3 for numerical failure).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    int version = 1;
    std::string problem = "kdv";
    double tau = 0.2;
    std::size_t n_grid = 0;         // 0 = problem default
    std::size_t input_dim = 0;      // 0 = problem default
    std::size_t spectral_basis = 0; // 0 = problem default (Burgers)
    double dt = 0.0;                // 0 = stability-based
    std::size_t m_train = 900;
    std::size_t m_test = 100;
    std::size_t n_modes = 50;
    std::string trunk = "svd-scaled";
    bool stacked = false;
    std::size_t width = 335;
    std::size_t depth = 5;
    std::string optimizer = "adam";
    double alpha1 = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double eps_bar = 0.0;
    double reweight_e = 0.0;
    std::size_t epochs = 0;
    bool has_seed = false;
    std::uint64_t seed = 0;
    std::string out_dir = "run";
    std::size_t mode_snapshot_every = 0;
    std::size_t coupling_every = 0; // 0 = no coupling sampling
    double coupling_alpha = 1e-4;
    // Sweep axes; empty = use the scalar field.
    std::vector<std::size_t> n_list;
    std::vector<std::string> basis_list;
    std::vector<double> e_list;
    std::vector<std::size_t> width_list;
    std::vector<std::string> optimizer_list;
};

/// Named configurations: desk-kdv, desk-ad, desk-burgers (reduced sizes)
/// and paper-kdv (reference scale). Throws ConfigError on unknown names.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// JSON round trip. Parsing rejects unknown fields and version mismatches;
/// seed is mandatory.
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a hash of the canonical serialization, as fixed-width hex.
std::string config_hash(const ExperimentConfig& cfg);

/// out_dir resolved against the DONET_OUT_ROOT environment variable when
/// it is set and out_dir is relative.
std::string resolve_out_dir(const ExperimentConfig& cfg);

struct RunReport {
    std::string hash;
    ErrorReport err_train, err_test;
    ModeLossReport modes; // populated for the SVD-scaled trunk
    TrainHistory history;
    std::vector<std::pair<std::size_t, CouplingReport>> coupling;
    double wall_seconds = 0.0;
    std::string out_dir;
};

/// Builds the dataset, trains one model, decomposes the final error, and
/// writes report.json / history.csv / modes.csv (plus coupling files when
/// sampled) into the resolved output directory.
RunReport run(const ExperimentConfig& cfg);

/// Validates report.json against the versioned schema (unknown fields and
/// version mismatches rejected); returns the raw JSON text.
std::string load_report(const std::string& path);

struct SweepRow {
    std::string basis;
    std::size_t n_modes = 0;
    double delta_tr = 0.0, delta_trunk_tr = 0.0, delta_branch_tr = 0.0;
    double delta_te = 0.0, delta_trunk_te = 0.0, delta_branch_te = 0.0;
};

/// One run() per (basis, N) pair over a bounded worker pool; rows in
/// (basis, N) order. Writes sweep.csv in the parent output directory.
std::vector<SweepRow> basis_sweep(const ExperimentConfig& cfg);

/// Long-format plot series (label, x, y) generated from the files of a
/// finished run. kind: mode_losses | loss_curves | coupling | frequencies
/// | basis_sweep. Writes series_<kind>.csv into the run directory.
void emit_plot_series(const std::string& run_dir, const std::string& kind);

} // namespace donet
