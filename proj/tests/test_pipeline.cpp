#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mlepi/config.hpp"
#include "mlepi/csv.hpp"
#include "mlepi/pipeline.hpp"

using namespace mlepi;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("MLEPI_CLI");
    REQUIRE(p != nullptr);
    return p;
}

int run_cli(const std::string& args) {
    int rc = std::system((cli_path() + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

struct TempDir {
    fs::path path;
    TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("mlepi_test_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string small_config() {
    return "network.n_students = 120\n"
           "network.school_year_size = poisson:20:2\n"
           "epidemic.k = 4\n"
           "epidemic.max_weeks = 30\n"
           "gbt.n_trees = 20\n"
           "gbt.min_node_size = 5\n"
           "gbt.train_fraction = 0.3\n";
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("config parses sections, comments, and values") {
    auto cfg = Config::from_string("# leading comment\n"
                                   "a.x = 3\n"
                                   "a.y = hello world\n"
                                   "\n"
                                   "b.z = 2.5\n");
    CHECK(cfg.get_int("a.x", 0) == 3);
    CHECK(cfg.get_str("a.y", "") == "hello world");
    CHECK(cfg.get_double("b.z", 0) == doctest::Approx(2.5));
    CHECK(cfg.get_int("missing.key", 42) == 42);
    CHECK(cfg.has("a.x"));
    CHECK(!cfg.has("a.q"));
}

TEST_CASE("config errors carry the line number") {
    try {
        Config::from_string("a.x = 1\nnot an assignment\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
    CHECK_THROWS_AS(Config::from_string("keywithoutdot = 1\n"), ConfigError);
}

TEST_CASE("config overrides and strict numeric parsing") {
    Config cfg;
    cfg.apply_override("epidemic.k=25");
    CHECK(cfg.get_int("epidemic.k", 0) == 25);
    CHECK_THROWS_AS(cfg.apply_override("no_equals_sign"), ConfigError);
    CHECK_THROWS_AS(cfg.apply_override("nodot=3"), ConfigError);

    cfg.set("a.bad", "12abc");
    CHECK_THROWS_AS(cfg.get_int("a.bad", 0), ConfigError);
    CHECK_THROWS_AS(cfg.get_double("a.bad", 0), ConfigError);
}

TEST_CASE("config hash is order-insensitive and value-sensitive") {
    auto c1 = Config::from_string("a.x = 1\nb.y = 2\n");
    auto c2 = Config::from_string("b.y = 2\na.x = 1\n");
    auto c3 = Config::from_string("a.x = 1\nb.y = 3\n");
    CHECK(c1.hash() == c2.hash());
    CHECK(c1.hash() != c3.hash());
}

TEST_CASE("csv round-trips with stable double formatting") {
    TempDir tmp("csv");
    fs::path p = tmp.path / "t.csv";
    {
        csv::Writer w(p.string(), {"a", "b"});
        w.field(0.1);
        w.field(std::string("x,y"));
        w.end_row();
    }
    auto t = csv::read(p.string());
    REQUIRE(t.header.size() == 2);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][0] == "0.1"); // shortest round-trip form
    CHECK(csv::format_double(0.1) == "0.1");
    CHECK(csv::format_double(1.0 / 3.0) == csv::format_double(1.0 / 3.0));
}

TEST_CASE("cli: evaluate before simulate exits 3 with guidance") {
    TempDir tmp("order");
    fs::path cfgp = tmp.path / "cfg";
    std::ofstream(cfgp) << small_config();
    std::string base =
        "--config " + cfgp.string() + " --output " + (tmp.path / "out").string();

    // evaluate with no artifacts at all
    CHECK(run_cli("evaluate " + base) == exit_missing_artifact);
    // stats with no network
    CHECK(run_cli("stats " + base) == exit_missing_artifact);

    // now produce the prerequisites step by step
    CHECK(run_cli("generate " + base) == exit_ok);
    CHECK(run_cli("stats " + base) == exit_ok);
    CHECK(run_cli("centrality " + base) == exit_ok);
    // evaluate still needs simulate
    CHECK(run_cli("evaluate " + base) == exit_missing_artifact);
    CHECK(run_cli("simulate " + base) == exit_ok);
    CHECK(run_cli("evaluate " + base) == exit_ok);
    CHECK(run_cli("gbt " + base) == exit_ok);
}

TEST_CASE("cli: bad config and bad flags exit 2") {
    TempDir tmp("badcfg");
    fs::path cfgp = tmp.path / "cfg";
    std::ofstream(cfgp) << "this is not a config\n";
    CHECK(run_cli("generate --config " + cfgp.string()) == exit_config_error);
    CHECK(run_cli("generate --config /nonexistent/path.cfg") == exit_config_error);
    CHECK(run_cli("definitely-not-a-subcommand") == exit_config_error);
    TempDir tmp2("badset");
    CHECK(run_cli("generate --output " + (tmp2.path / "o").string() +
                  " --set network.n_students=abc") == exit_config_error);
}

TEST_CASE("cli: full pipeline is deterministic across runs and thread counts") {
    TempDir tmp("det");
    fs::path cfgp = tmp.path / "cfg";
    std::ofstream(cfgp) << small_config();

    auto run_all = [&](const std::string& outdir, const std::string& extra) {
        return run_cli("all --config " + cfgp.string() + " --seed 31 --output " +
                       (tmp.path / outdir).string() + " " + extra);
    };
    REQUIRE(run_all("a", "--threads 1") == exit_ok);
    REQUIRE(run_all("b", "--threads 4") == exit_ok);

    auto ma = read_file(tmp.path / "a" / "manifest.txt");
    auto mb = read_file(tmp.path / "b" / "manifest.txt");
    CHECK(!ma.empty());
    CHECK(ma == mb); // byte-identical artifact checksums

    // and the artifacts themselves match
    for (const char* f : {"centrality.csv", "infections.csv", "cox_grid.csv",
                          "gbt_metrics.csv"}) {
        CHECK(read_file(tmp.path / "a" / f) == read_file(tmp.path / "b" / f));
    }

    // a different seed changes the outputs
    REQUIRE(run_cli("all --config " + cfgp.string() + " --seed 32 --output " +
                    (tmp.path / "c").string()) == exit_ok);
    CHECK(read_file(tmp.path / "c" / "infections.csv") !=
          read_file(tmp.path / "a" / "infections.csv"));
}

TEST_CASE("cli: artifacts have the documented shapes") {
    TempDir tmp("shape");
    fs::path cfgp = tmp.path / "cfg";
    std::ofstream(cfgp) << small_config();
    fs::path out = tmp.path / "out";
    REQUIRE(run_cli("all --config " + cfgp.string() + " --seed 5 --output " +
                    out.string()) == exit_ok);

    auto stats = csv::read((out / "stats.csv").string());
    CHECK(stats.header[0] == "layer");
    REQUIRE(stats.rows.size() == 5); // 4 layers + aggregate
    CHECK(stats.rows[4][0] == "aggregate");

    auto cent = csv::read((out / "centrality.csv").string());
    REQUIRE(cent.header ==
            std::vector<std::string>{"node_id", "measure", "structure", "score"});
    auto reg = read_file(out / "network" / "registry.txt");
    std::size_t n_nodes = static_cast<std::size_t>(
        std::count(reg.begin(), reg.end(), '\n'));
    CHECK(cent.rows.size() == 6 * n_nodes);

    auto grid = csv::read((out / "cox_grid.csv").string());
    CHECK(grid.rows.size() == 50); // 25 models x 2 structures

    auto corr = csv::read((out / "correlations.csv").string());
    std::size_t pair_rows = 0, tti_rows = 0;
    for (const auto& row : corr.rows) {
        if (row[0] == "centrality_pair") ++pair_rows;
        if (row[0] == "time_to_infection") ++tti_rows;
    }
    CHECK(pair_rows == 15);
    CHECK(tti_rows == 6);

    auto gbtm = csv::read((out / "gbt_metrics.csv").string());
    CHECK(gbtm.rows.size() == 8); // 4 replicates x 2 structures

    auto imp = csv::read((out / "gbt_importance.csv").string());
    CHECK(imp.rows.size() == 8 * 3); // x 3 features

    // manifest lists the config hash, seed, and artifact checksums
    auto manifest = read_file(out / "manifest.txt");
    CHECK(manifest.find("config_hash ") != std::string::npos);
    CHECK(manifest.find("master_seed 5") != std::string::npos);
    CHECK(manifest.find("centrality.csv ") != std::string::npos);
}

TEST_CASE("cli: --set overrides config values") {
    TempDir tmp("set");
    fs::path cfgp = tmp.path / "cfg";
    std::ofstream(cfgp) << small_config();
    fs::path out = tmp.path / "out";
    REQUIRE(run_cli("generate --config " + cfgp.string() +
                    " --set network.n_students=40 --output " + out.string()) ==
            exit_ok);
    auto reg = read_file(out / "network" / "registry.txt");
    auto n = static_cast<std::size_t>(std::count(reg.begin(), reg.end(), '\n'));
    CHECK(n >= 40);  // 40 students plus their adults
    CHECK(n < 400);  // far below the 120-student default population
}

TEST_CASE("run_pipeline can be driven in-process") {
    TempDir tmp("inproc");
    RunOptions opts;
    opts.output_dir = (tmp.path / "out").string();
    opts.output_set = true;
    opts.seed = 1;
    opts.seed_set = true;
    opts.overrides = {"network.n_students=60", "epidemic.k=2",
                      "epidemic.max_weeks=20"};
    std::ostringstream log;
    CHECK(run_pipeline("generate", opts, log) == exit_ok);
    CHECK(run_pipeline("centrality", opts, log) == exit_ok);
    CHECK(log.str().find("generated network") != std::string::npos);
    CHECK(run_pipeline("gbt", opts, log) == exit_missing_artifact);
}
