#include "donet/experiment.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace donet {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    c.has_seed = true;
    c.seed = 1;
    c.optimizer = "adam";
    c.alpha1 = 1e-4;
    c.depth = 5;
    c.out_dir = name;
    if (name == "desk-kdv") {
        c.problem = "kdv";
        c.tau = 0.2;
        c.n_grid = 100;
        c.input_dim = 50;
        c.m_train = 120;
        c.m_test = 30;
        c.n_modes = 20;
        c.width = 64;
        c.epochs = 800;
    } else if (name == "desk-ad") {
        c.problem = "ad";
        c.tau = 0.5;
        c.n_grid = 200;
        c.input_dim = 40;
        c.m_train = 200;
        c.m_test = 50;
        c.n_modes = 20;
        c.width = 64;
        c.epochs = 800;
    } else if (name == "desk-burgers") {
        c.problem = "burgers";
        c.tau = 0.3;
        c.n_grid = 100;
        c.input_dim = 50;
        c.spectral_basis = 60;
        c.m_train = 120;
        c.m_test = 30;
        c.n_modes = 20;
        c.width = 64;
        c.epochs = 800;
    } else if (name == "paper-kdv") {
        c.problem = "kdv";
        c.tau = 0.2;
        c.m_train = 900;
        c.m_test = 100;
        c.n_modes = 50;
        c.width = 335;
        c.epochs = 4000;
    } else {
        throw ConfigError("unknown preset: " + name);
    }
    return c;
}

std::vector<std::string> preset_names() {
    return {"desk-kdv", "desk-ad", "desk-burgers", "paper-kdv"};
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["version"] = c.version;
    j["problem"] = c.problem;
    j["tau"] = c.tau;
    j["n_grid"] = c.n_grid;
    j["input_dim"] = c.input_dim;
    j["spectral_basis"] = c.spectral_basis;
    j["dt"] = c.dt;
    j["m_train"] = c.m_train;
    j["m_test"] = c.m_test;
    j["n_modes"] = c.n_modes;
    j["trunk"] = c.trunk;
    j["stacked"] = c.stacked;
    j["width"] = c.width;
    j["depth"] = c.depth;
    j["optimizer"] = c.optimizer;
    j["alpha1"] = c.alpha1;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["eps"] = c.eps;
    j["eps_bar"] = c.eps_bar;
    j["reweight_e"] = c.reweight_e;
    j["epochs"] = c.epochs;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["mode_snapshot_every"] = c.mode_snapshot_every;
    j["coupling_every"] = c.coupling_every;
    j["coupling_alpha"] = c.coupling_alpha;
    j["n_list"] = c.n_list;
    j["basis_list"] = c.basis_list;
    j["e_list"] = c.e_list;
    j["width_list"] = c.width_list;
    j["optimizer_list"] = c.optimizer_list;
    return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    try {
        for (const auto& [key, val] : j.items()) {
            if (key == "version") {
                c.version = val.get<int>();
                if (c.version != 1) throw ConfigError("unsupported config version");
            } else if (key == "problem") c.problem = val.get<std::string>();
            else if (key == "tau") c.tau = val.get<double>();
            else if (key == "n_grid") c.n_grid = val.get<std::size_t>();
            else if (key == "input_dim") c.input_dim = val.get<std::size_t>();
            else if (key == "spectral_basis") c.spectral_basis = val.get<std::size_t>();
            else if (key == "dt") c.dt = val.get<double>();
            else if (key == "m_train") c.m_train = val.get<std::size_t>();
            else if (key == "m_test") c.m_test = val.get<std::size_t>();
            else if (key == "n_modes") c.n_modes = val.get<std::size_t>();
            else if (key == "trunk") c.trunk = val.get<std::string>();
            else if (key == "stacked") c.stacked = val.get<bool>();
            else if (key == "width") c.width = val.get<std::size_t>();
            else if (key == "depth") c.depth = val.get<std::size_t>();
            else if (key == "optimizer") c.optimizer = val.get<std::string>();
            else if (key == "alpha1") c.alpha1 = val.get<double>();
            else if (key == "beta1") c.beta1 = val.get<double>();
            else if (key == "beta2") c.beta2 = val.get<double>();
            else if (key == "eps") c.eps = val.get<double>();
            else if (key == "eps_bar") c.eps_bar = val.get<double>();
            else if (key == "reweight_e") c.reweight_e = val.get<double>();
            else if (key == "epochs") c.epochs = val.get<std::size_t>();
            else if (key == "seed") { c.seed = val.get<std::uint64_t>(); c.has_seed = true; }
            else if (key == "out_dir") c.out_dir = val.get<std::string>();
            else if (key == "mode_snapshot_every") c.mode_snapshot_every = val.get<std::size_t>();
            else if (key == "coupling_every") c.coupling_every = val.get<std::size_t>();
            else if (key == "coupling_alpha") c.coupling_alpha = val.get<double>();
            else if (key == "n_list") c.n_list = val.get<std::vector<std::size_t>>();
            else if (key == "basis_list") c.basis_list = val.get<std::vector<std::string>>();
            else if (key == "e_list") c.e_list = val.get<std::vector<double>>();
            else if (key == "width_list") c.width_list = val.get<std::vector<std::size_t>>();
            else if (key == "optimizer_list")
                c.optimizer_list = val.get<std::vector<std::string>>();
            else throw ConfigError("unknown config field: " + key);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field type error: ") + e.what());
    }
    if (!c.has_seed) throw ConfigError("missing config field: seed");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return config_from_json(ss.str());
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string s = config_to_json(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string resolve_out_dir(const ExperimentConfig& cfg) {
    fs::path p(cfg.out_dir);
    if (p.is_absolute()) return p.string();
    if (const char* root = std::getenv("DONET_OUT_ROOT")) return (fs::path(root) / p).string();
    return p.string();
}

namespace {

ProblemSpec problem_from_config(const ExperimentConfig& cfg) {
    ProblemKind kind;
    try {
        kind = problem_kind_from_string(cfg.problem);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    ProblemSpec ps = default_problem_spec(kind, cfg.tau);
    if (cfg.n_grid > 0) ps.grid_points = cfg.n_grid;
    if (cfg.input_dim > 0) ps.input_dim = cfg.input_dim;
    if (cfg.spectral_basis > 0) ps.spectral_basis = cfg.spectral_basis;
    if (cfg.dt > 0.0) ps.dt = cfg.dt;
    return ps;
}

Model model_from_config(const ExperimentConfig& cfg, const TrainData& data, TrunkKind tk,
                        Rng& rng) {
    Model model;
    model.trunk_kind = tk;
    model.inner_dim = cfg.n_modes;
    const std::size_t in_dim = data.p_tr.rows();
    if (tk == TrunkKind::Learned) {
        Rng trunk_rng = rng.split(4);
        model.trunk_net = init_mlp(MlpShape{1, cfg.width, cfg.depth, cfg.n_modes}, trunk_rng);
    } else {
        model.trunk = trunk_matrix(tk, data.grid, &data.split, cfg.n_modes);
    }
    Rng branch_rng = rng.split(3);
    model.stacked = cfg.stacked;
    if (cfg.stacked) {
        for (std::size_t k = 0; k < cfg.n_modes; ++k)
            model.branch.push_back(init_mlp(MlpShape{in_dim, cfg.width, cfg.depth, 1}, branch_rng));
    } else {
        model.branch.push_back(init_mlp(MlpShape{in_dim, cfg.width, cfg.depth, cfg.n_modes},
                                        branch_rng));
    }
    return model;
}

json error_to_json(const ErrorReport& e) {
    return json{{"eps_total", e.eps_total},   {"eps_trunk", e.eps_trunk},
                {"eps_branch", e.eps_branch}, {"eps_c", e.eps_c},
                {"eps_d", e.eps_d},           {"delta_total", e.delta_total},
                {"delta_trunk", e.delta_trunk}, {"delta_branch", e.delta_branch}};
}

} // namespace

RunReport run(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!cfg.has_seed) throw ConfigError("missing config field: seed");
    TrunkKind tk;
    OptimizerKind ok;
    try {
        tk = trunk_kind_from_string(cfg.trunk);
        ok = optimizer_kind_from_string(cfg.optimizer);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (cfg.n_modes == 0) throw ConfigError("n_modes must be positive");

    const ProblemSpec ps = problem_from_config(cfg);
    Rng rng(cfg.seed);
    const auto [tr, te] = build_dataset(ps, cfg.m_train, cfg.m_test, rng);
    const TrainData data = make_train_data(tr, te, cfg.n_modes);
    Model model = model_from_config(cfg, data, tk, rng);

    RunReport report;
    report.hash = config_hash(cfg);
    report.out_dir = resolve_out_dir(cfg);

    TrainConfig tc;
    tc.opt = OptimizerConfig{ok, cfg.alpha1, cfg.beta1, cfg.beta2, cfg.eps, cfg.eps_bar};
    tc.reweight_e = cfg.reweight_e;
    tc.epochs = cfg.epochs;
    tc.mode_snapshot_every = cfg.mode_snapshot_every;
    if (cfg.coupling_every > 0 && tk == TrunkKind::SvdScaled) {
        tc.observer = [&](std::size_t epoch, const Model& m) {
            if (epoch % cfg.coupling_every != 0 && epoch != cfg.epochs) return;
            CouplingReport rep = taylor_check(m, data, cfg.coupling_alpha);
            rep.epoch = epoch;
            report.coupling.emplace_back(epoch, rep);
        };
    }
    report.history = train(model, data, tc);

    const Matrix trunk = trunk_eval(model, data.grid);
    const Matrix b_tr = branch_outputs(model, data.p_tr);
    const Matrix b_te = branch_outputs(model, data.p_te);
    report.err_train = decompose(trunk, b_tr, data.a_tr);
    report.err_test = decompose(trunk, b_te, data.a_te);
    if (tk == TrunkKind::SvdScaled && !model.trunk_net)
        report.modes = merge_mode_reports(
            mode_losses_train(b_tr, data.split.v1, data.split.sigma1),
            mode_losses_test(b_te, data.w1, data.a_tr.cols(), data.a_te.cols(),
                             data.split.sigma1));

    fs::create_directories(report.out_dir);
    save_history_csv(report.history, report.out_dir + "/history.csv");
    if (report.modes.has_train) save_mode_report(report.modes, report.out_dir + "/modes.csv");
    if (!report.coupling.empty()) {
        std::vector<CouplingReport> series;
        for (const auto& [epoch, rep] : report.coupling) {
            series.push_back(rep);
            save_csv(rep.s, report.out_dir + "/S_epoch" + std::to_string(epoch) + ".csv");
        }
        save_coupling_csv(series, report.out_dir + "/coupling.csv");
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json rj;
    rj["version"] = 1;
    rj["config"] = json::parse(config_to_json(cfg));
    rj["config_hash"] = report.hash;
    rj["wall_seconds"] = report.wall_seconds;
    rj["diverged"] = report.history.diverged;
    rj["final_train_loss"] = report.history.train_loss.back();
    rj["final_test_loss"] = report.history.test_loss.back();
    rj["error_train"] = error_to_json(report.err_train);
    rj["error_test"] = error_to_json(report.err_test);
    std::ofstream(report.out_dir + "/report.json") << rj.dump(2) << "\n";
    return report;
}

std::string load_report(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open report: " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("report parse error: ") + e.what());
    }
    static const std::vector<std::string> keys = {
        "version",    "config",           "config_hash",     "wall_seconds", "diverged",
        "final_train_loss", "final_test_loss", "error_train", "error_test"};
    for (const auto& [key, val] : j.items())
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError("unknown report field: " + key);
    for (const std::string& k : keys)
        if (!j.contains(k)) throw ConfigError("missing report field: " + k);
    if (j["version"].get<int>() != 1) throw ConfigError("unsupported report version");
    config_from_json(j["config"].dump()); // validates nested config
    return ss.str();
}

std::vector<SweepRow> basis_sweep(const ExperimentConfig& cfg) {
    const std::vector<std::string> bases =
        cfg.basis_list.empty() ? std::vector<std::string>{cfg.trunk} : cfg.basis_list;
    const std::vector<std::size_t> ns =
        cfg.n_list.empty() ? std::vector<std::size_t>{cfg.n_modes} : cfg.n_list;

    std::vector<ExperimentConfig> jobs;
    for (const std::string& basis : bases)
        for (std::size_t n : ns) {
            ExperimentConfig sub = cfg;
            sub.trunk = basis;
            sub.n_modes = n;
            sub.basis_list.clear();
            sub.n_list.clear();
            sub.out_dir = cfg.out_dir + "/" + basis + "_N" + std::to_string(n);
            jobs.push_back(std::move(sub));
        }

    std::vector<RunReport> reports(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    const std::size_t workers =
        std::min({jobs.size(), std::size_t(4),
                  std::size_t(std::max(1u, std::thread::hardware_concurrency()))});
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
            try {
                reports[i] = run(jobs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        SweepRow r;
        r.basis = jobs[i].trunk;
        r.n_modes = jobs[i].n_modes;
        r.delta_tr = reports[i].err_train.delta_total;
        r.delta_trunk_tr = reports[i].err_train.delta_trunk;
        r.delta_branch_tr = reports[i].err_train.delta_branch;
        r.delta_te = reports[i].err_test.delta_total;
        r.delta_trunk_te = reports[i].err_test.delta_trunk;
        r.delta_branch_te = reports[i].err_test.delta_branch;
        rows.push_back(r);
    }

    ExperimentConfig parent = cfg;
    const std::string dir = resolve_out_dir(parent);
    fs::create_directories(dir);
    std::ofstream f(dir + "/sweep.csv");
    f << "basis,N,delta_train,delta_trunk_train,delta_branch_train,"
         "delta_test,delta_trunk_test,delta_branch_test\n";
    char buf[320];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.basis.c_str(), r.n_modes, r.delta_tr, r.delta_trunk_tr, r.delta_branch_tr,
                      r.delta_te, r.delta_trunk_te, r.delta_branch_te);
        f << buf;
    }
    return rows;
}

namespace {

std::vector<std::vector<std::string>> read_table(const std::string& path,
                                                 std::vector<std::string>& header) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    std::string line;
    std::vector<std::vector<std::string>> rows;
    bool first = true;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (first) {
            header = cells;
            first = false;
        } else {
            rows.push_back(cells);
        }
    }
    return rows;
}

} // namespace

void emit_plot_series(const std::string& run_dir, const std::string& kind) {
    std::vector<std::string> header;
    std::vector<std::array<std::string, 3>> out; // label, x, y
    if (kind == "loss_curves") {
        const auto rows = read_table(run_dir + "/history.csv", header);
        for (const char* label : {"train_loss", "test_loss", "lr"}) {
            std::size_t col = label == std::string("train_loss") ? 1
                              : label == std::string("test_loss") ? 2 : 3;
            for (const auto& r : rows) out.push_back({label, r[0], r[col]});
        }
    } else if (kind == "mode_losses") {
        const auto rows = read_table(run_dir + "/modes.csv", header);
        // columns: i,sigma,L_train,L_test,weighted_train,weighted_test,base_train,base_test
        const std::vector<std::pair<std::string, std::size_t>> series = {
            {"weighted_train", 4}, {"weighted_test", 5}, {"base_train", 6},
            {"base_test", 7},      {"L_train", 2},       {"L_test", 3}};
        for (const auto& [label, col] : series)
            for (const auto& r : rows)
                if (col < r.size() && !r[col].empty()) out.push_back({label, r[0], r[col]});
    } else if (kind == "coupling") {
        const auto rows = read_table(run_dir + "/coupling.csv", header);
        const std::vector<std::pair<std::string, std::size_t>> series = {
            {"d", 1}, {"omega", 2}, {"gamma", 3}, {"taylor_pred", 4}, {"measured_dl", 5}};
        for (const auto& [label, col] : series)
            for (const auto& r : rows)
                if (col < r.size() && !r[col].empty() && r[col] != "undefined")
                    out.push_back({label, r[0], r[col]});
    } else if (kind == "frequencies") {
        const auto rows = read_table(run_dir + "/frequencies.csv", header);
        for (std::size_t col = 1; col < header.size(); ++col)
            for (const auto& r : rows)
                if (col < r.size()) out.push_back({header[col], r[0], r[col]});
    } else if (kind == "basis_sweep") {
        const auto rows = read_table(run_dir + "/sweep.csv", header);
        for (std::size_t col = 2; col < header.size(); ++col)
            for (const auto& r : rows)
                if (col < r.size()) out.push_back({r[0] + ":" + header[col], r[1], r[col]});
    } else {
        throw ConfigError("unknown plot series kind: " + kind);
    }
    std::ofstream f(run_dir + "/series_" + kind + ".csv");
    f << "label,x,y\n";
    for (const auto& row : out) f << row[0] << "," << row[1] << "," << row[2] << "\n";
}

} // namespace donet
