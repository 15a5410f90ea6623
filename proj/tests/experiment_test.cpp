#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "donet/experiment.hpp"

using namespace donet;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    fs::path p = fs::temp_directory_path() / ("donet_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

ExperimentConfig tiny_config(const fs::path& out) {
    ExperimentConfig cfg = preset("desk-kdv");
    cfg.n_grid = 40;
    cfg.input_dim = 40;
    cfg.m_train = 12;
    cfg.m_test = 6;
    cfg.n_modes = 4;
    cfg.width = 8;
    cfg.depth = 2;
    cfg.epochs = 3;
    cfg.optimizer = "gd";
    cfg.alpha1 = 1e-4;
    cfg.has_seed = true;
    cfg.seed = 7;
    cfg.out_dir = out.string();
    return cfg;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config JSON round trip preserves every field") {
    ExperimentConfig cfg = preset("desk-ad");
    cfg.has_seed = true;
    cfg.seed = 42;
    cfg.reweight_e = -0.5;
    cfg.e_list = {0.0, -1.0};
    cfg.basis_list = {"legendre", "cosine"};
    cfg.n_list = {2, 4};
    cfg.width_list = {8, 16};
    cfg.optimizer_list = {"gd", "adam"};
    cfg.coupling_every = 5;

    const ExperimentConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.problem == cfg.problem);
    CHECK(back.tau == cfg.tau);
    CHECK(back.seed == 42);
    CHECK(back.has_seed);
    CHECK(back.reweight_e == -0.5);
    CHECK(back.e_list == cfg.e_list);
    CHECK(back.basis_list == cfg.basis_list);
    CHECK(back.n_list == cfg.n_list);
    CHECK(back.width_list == cfg.width_list);
    CHECK(back.optimizer_list == cfg.optimizer_list);
    CHECK(back.coupling_every == 5);
    CHECK(config_hash(back) == config_hash(cfg));
}

TEST_CASE("config parsing rejects bad inputs") {
    ExperimentConfig cfg = preset("desk-kdv");
    cfg.has_seed = true;
    cfg.seed = 1;
    const std::string good = config_to_json(cfg);

    SUBCASE("unknown field") {
        std::string bad = good;
        bad.insert(bad.find('{') + 1, "\"typo_field\": 3,");
        CHECK_THROWS_AS(config_from_json(bad), ConfigError);
    }
    SUBCASE("missing seed") {
        std::string bad = good;
        const auto pos = bad.find("\"seed\"");
        REQUIRE(pos != std::string::npos);
        bad.erase(pos, bad.find('\n', pos) - pos + 1);
        CHECK_THROWS_AS(config_from_json(bad), ConfigError);
    }
    SUBCASE("version mismatch") {
        std::string bad = good;
        const auto pos = bad.find("\"version\": 1");
        REQUIRE(pos != std::string::npos);
        bad.replace(pos, 12, "\"version\": 2");
        CHECK_THROWS_AS(config_from_json(bad), ConfigError);
    }
    SUBCASE("not JSON at all") { CHECK_THROWS_AS(config_from_json("not json"), ConfigError); }
}

TEST_CASE("presets carry the documented shapes") {
    for (const std::string& name : preset_names()) CHECK_NOTHROW(preset(name));
    CHECK_THROWS_AS(preset("desk-nope"), ConfigError);

    const ExperimentConfig desk = preset("desk-kdv");
    CHECK(desk.problem == "kdv");
    CHECK(desk.n_grid == 100);
    CHECK(desk.m_train == 120);
    CHECK(desk.m_test == 30);
    CHECK(desk.n_modes == 20);
    CHECK(desk.width == 64);
    CHECK(desk.epochs == 800);

    const ExperimentConfig ref = preset("paper-kdv");
    CHECK(ref.n_modes == 50);
    CHECK(ref.width == 335);
    CHECK(ref.epochs == 4000);
    CHECK(ref.m_train == 900);
    CHECK(ref.m_test == 100);
}

TEST_CASE("config hash is stable and sensitive") {
    ExperimentConfig a = preset("desk-kdv");
    a.has_seed = true;
    a.seed = 3;
    ExperimentConfig b = a;
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    b.seed = 4;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("output directory resolution honors DONET_OUT_ROOT") {
    ExperimentConfig cfg = preset("desk-kdv");
    cfg.out_dir = "rel/run1";
    unsetenv("DONET_OUT_ROOT");
    CHECK(resolve_out_dir(cfg) == "rel/run1");
    setenv("DONET_OUT_ROOT", "/tmp/donet_root", 1);
    CHECK(resolve_out_dir(cfg) == "/tmp/donet_root/rel/run1");
    cfg.out_dir = "/abs/run1";
    CHECK(resolve_out_dir(cfg) == "/abs/run1");
    unsetenv("DONET_OUT_ROOT");
}

TEST_CASE("run produces the full artifact set, deterministically") {
    const fs::path out = fresh_dir("run_a");
    ExperimentConfig cfg = tiny_config(out);
    cfg.mode_snapshot_every = 2;
    cfg.coupling_every = 2;
    const RunReport r = run(cfg);

    CHECK(fs::exists(out / "report.json"));
    CHECK(fs::exists(out / "history.csv"));
    CHECK(fs::exists(out / "modes.csv"));
    CHECK(fs::exists(out / "coupling.csv"));
    CHECK(r.history.epoch.size() == 4);
    CHECK(r.err_train.eps_total > 0.0);
    CHECK(!r.coupling.empty());
    CHECK_NOTHROW(load_report((out / "report.json").string()));

    // Same seed, second run: identical history file bit for bit.
    const fs::path out2 = fresh_dir("run_b");
    ExperimentConfig cfg2 = cfg;
    cfg2.out_dir = out2.string();
    run(cfg2);
    CHECK(read_file(out / "history.csv") == read_file(out2 / "history.csv"));
    CHECK(read_file(out / "modes.csv") == read_file(out2 / "modes.csv"));

    fs::remove_all(out);
    fs::remove_all(out2);
}

TEST_CASE("report validation rejects tampered files") {
    const fs::path out = fresh_dir("run_c");
    run(tiny_config(out));
    const fs::path rp = out / "report.json";
    const std::string text = load_report(rp.string());

    SUBCASE("unknown top-level field") {
        std::string bad = text;
        bad.insert(bad.find('{') + 1, "\"extra\": 1,");
        std::ofstream(rp) << bad;
        CHECK_THROWS_AS(load_report(rp.string()), ConfigError);
    }
    SUBCASE("missing field") {
        const auto pos = text.find("\"diverged\"");
        REQUIRE(pos != std::string::npos);
        std::string bad = text;
        bad.erase(pos, bad.find('\n', pos) - pos + 1);
        std::ofstream(rp) << bad;
        CHECK_THROWS_AS(load_report(rp.string()), ConfigError);
    }
    fs::remove_all(out);
}

TEST_CASE("basis sweep rows line up with individual runs") {
    const fs::path out = fresh_dir("sweep");
    ExperimentConfig cfg = tiny_config(out);
    cfg.epochs = 2;
    cfg.basis_list = {"svd-scaled"};
    cfg.n_list = {2, 4};
    const std::vector<SweepRow> rows = basis_sweep(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].basis == "svd-scaled");
    CHECK(rows[0].n_modes == 2);
    CHECK(rows[1].n_modes == 4);
    // More SVD modes can only shrink the trunk error.
    CHECK(rows[1].delta_trunk_tr <= rows[0].delta_trunk_tr + 1e-12);
    CHECK(fs::exists(out / "sweep.csv"));

    std::ifstream f(out / "sweep.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header ==
          "basis,N,delta_train,delta_trunk_train,delta_branch_train,"
          "delta_test,delta_trunk_test,delta_branch_test");

    // Cross-check the first row against a standalone run of the same config.
    const fs::path solo = fresh_dir("sweep_solo");
    ExperimentConfig one = cfg;
    one.basis_list.clear();
    one.n_list.clear();
    one.trunk = "svd-scaled";
    one.n_modes = 2;
    one.out_dir = solo.string();
    const RunReport r = run(one);
    CHECK(rows[0].delta_tr == doctest::Approx(r.err_train.delta_total).epsilon(1e-12));
    CHECK(rows[0].delta_branch_te == doctest::Approx(r.err_test.delta_branch).epsilon(1e-12));

    fs::remove_all(out);
    fs::remove_all(solo);
}

TEST_CASE("plot series generation") {
    const fs::path out = fresh_dir("series");
    ExperimentConfig cfg = tiny_config(out);
    cfg.mode_snapshot_every = 1;
    cfg.coupling_every = 1;
    run(cfg);

    emit_plot_series(out.string(), "loss_curves");
    emit_plot_series(out.string(), "mode_losses");
    emit_plot_series(out.string(), "coupling");
    for (const char* kind : {"loss_curves", "mode_losses", "coupling"}) {
        const fs::path p = out / (std::string("series_") + kind + ".csv");
        REQUIRE(fs::exists(p));
        std::ifstream f(p);
        std::string header;
        std::getline(f, header);
        CHECK(header == "label,x,y");
        std::string line;
        std::size_t rows = 0;
        while (std::getline(f, line))
            if (!line.empty()) ++rows;
        CHECK(rows > 0);
    }
    CHECK_THROWS_AS(emit_plot_series(out.string(), "nope"), ConfigError);
    fs::remove_all(out);
}
