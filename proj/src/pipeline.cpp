#include "mlepi/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mlepi/centrality.hpp"
#include "mlepi/csv.hpp"
#include "mlepi/epidemic.hpp"
#include "mlepi/gbt.hpp"
#include "mlepi/netgen.hpp"
#include "mlepi/survival.hpp"

namespace fs = std::filesystem;

namespace mlepi {

namespace {

const std::vector<std::string> kLayerNames = {"family", "household", "school", "work"};

struct Context {
    Config cfg;
    uint64_t master_seed;
    uint32_t threads;
    fs::path out;
    std::ostream* log;
};

fs::path network_dir(const Context& ctx) { return ctx.out / "network"; }

void require(bool ok, const std::string& what, const std::string& producer) {
    if (!ok)
        throw MissingArtifactError("missing " + what + "; run `" + producer + "`");
}

GenParams gen_params_from_config(const Context& ctx) {
    GenParams p;
    p.n_students = ctx.cfg.get_u64("network.n_students", 1000);
    if (ctx.cfg.has("network.school_year_size"))
        p.school_year_size = IntDist::parse(ctx.cfg.get_str("network.school_year_size", ""));
    if (ctx.cfg.has("network.household_size"))
        p.household_size = IntDist::parse(ctx.cfg.get_str("network.household_size", ""));
    if (ctx.cfg.has("network.siblings_per_student"))
        p.siblings_per_student =
            IntDist::parse(ctx.cfg.get_str("network.siblings_per_student", ""));
    if (ctx.cfg.has("network.workplace_size"))
        p.workplace_size = IntDist::parse(ctx.cfg.get_str("network.workplace_size", ""));
    p.parents_per_student =
        static_cast<uint32_t>(ctx.cfg.get_u64("network.parents_per_student", 2));
    p.work_degree_cap =
        static_cast<uint32_t>(ctx.cfg.get_u64("network.work_degree_cap", 100));
    p.bridge_components = ctx.cfg.get_str("network.bridge", "true") == "true";
    p.rng_seed = ctx.master_seed;
    return p;
}

void write_edge_lists(const Context& ctx, const std::vector<LayerEdgeList>& lists,
                      const std::vector<NodeId>& registry) {
    fs::create_directories(network_dir(ctx));
    for (const auto& layer : lists) {
        csv::Writer w((network_dir(ctx) / (layer.name + ".csv")).string(),
                      {"src", "dst"});
        for (auto [a, b] : layer.edges) {
            w.field(a);
            w.field(b);
            w.end_row();
        }
    }
    std::ofstream reg(network_dir(ctx) / "registry.txt");
    for (NodeId id : registry) reg << id << '\n';
}

MultiplexNetwork load_network(const Context& ctx) {
    fs::path dir;
    if (ctx.cfg.get_str("network.source", "generate") == "files")
        dir = ctx.cfg.get_str("network.dir", "");
    else
        dir = network_dir(ctx);
    require(fs::exists(dir / "registry.txt"), "network files in " + dir.string(),
            "generate");

    std::vector<NodeId> registry;
    std::ifstream reg(dir / "registry.txt");
    std::string line;
    while (std::getline(reg, line)) {
        if (line.empty()) continue;
        registry.push_back(std::stoull(line));
    }

    std::vector<LayerEdgeList> lists;
    for (const auto& name : kLayerNames) {
        fs::path p = dir / (name + ".csv");
        require(fs::exists(p), "edge list " + p.string(), "generate");
        auto table = csv::read(p.string());
        LayerEdgeList l;
        l.name = name;
        for (const auto& row : table.rows)
            l.edges.emplace_back(std::stoull(row[0]), std::stoull(row[1]));
        lists.push_back(std::move(l));
    }
    return build_multiplex(lists, registry);
}

SolverConfig solver_config(const Context& ctx) {
    SolverConfig cfg;
    cfg.tolerance = ctx.cfg.get_double("centrality.tolerance", 1e-10);
    cfg.max_iterations = ctx.cfg.get_u64("centrality.max_iter", 10000);
    cfg.teleport_rate = ctx.cfg.get_double("centrality.r", 0.85);
    cfg.coupling_weight = ctx.cfg.get_double("centrality.coupling_weight", 1.0);
    return cfg;
}

EpiParams epi_params(const Context& ctx) {
    EpiParams p;
    for (const auto& layer : kLayerNames) {
        double def = p.tau_by_layer.count(layer) ? p.tau_by_layer[layer] : 0.0;
        p.tau_by_layer[layer] = ctx.cfg.get_double("epidemic.tau." + layer, def);
    }
    p.weibull_shape = ctx.cfg.get_double("epidemic.weibull_shape", 1.0);
    p.weibull_scale = ctx.cfg.get_double("epidemic.weibull_scale", 5.0);
    p.n_seeds = static_cast<uint32_t>(ctx.cfg.get_u64("epidemic.n_seeds", 10));
    p.max_weeks = static_cast<uint32_t>(ctx.cfg.get_u64("epidemic.max_weeks", 200));
    p.rng_seed = ctx.master_seed;
    return p;
}

// ---- subcommands ----

void cmd_generate(const Context& ctx) {
    auto params = gen_params_from_config(ctx);
    auto res = generate(params);
    write_edge_lists(ctx, res.edge_lists, res.registry);
    *ctx.log << "generated network: " << res.net.n_nodes() << " nodes ("
             << res.n_students << " students, " << res.n_adults << " adults), "
             << res.net.total_edges() << " edges, " << res.bridge_edges_added
             << " bridge edges\n";
}

void cmd_stats(const Context& ctx) {
    auto net = load_network(ctx);
    auto stats = descriptive_stats(net);
    csv::Writer w((ctx.out / "stats.csv").string(),
                  {"layer", "nodes", "ties", "clustering", "components",
                   "pct_giant_component", "deg_p5", "deg_mean", "deg_median",
                   "deg_p95", "deg_sd"});
    for (const auto& s : stats) {
        w.field(s.layer);
        w.field(static_cast<uint64_t>(s.active_nodes));
        w.field(static_cast<uint64_t>(s.ties));
        w.field(s.clustering);
        w.field(static_cast<uint64_t>(s.components));
        w.field(s.giant_share);
        w.field(s.deg_p5);
        w.field(s.deg_mean);
        w.field(s.deg_median);
        w.field(s.deg_p95);
        w.field(s.deg_sd);
        w.end_row();
    }
    *ctx.log << "stats.csv written (" << stats.size() << " rows)\n";
}

void cmd_centrality(const Context& ctx) {
    auto net = load_network(ctx);
    auto cfg = solver_config(ctx);
    auto vectors = all_centralities(net, cfg);
    csv::Writer w((ctx.out / "centrality.csv").string(),
                  {"node_id", "measure", "structure", "score"});
    for (const auto& cv : vectors) {
        const std::string m = to_string(cv.measure);
        const std::string s = to_string(cv.structure);
        for (std::size_t i = 0; i < cv.scores.size(); ++i) {
            w.field(net.node_ids[i]);
            w.field(m);
            w.field(s);
            w.field(cv.scores[i]);
            w.end_row();
        }
    }
    *ctx.log << "centrality.csv written (6 measure/structure pairs, "
             << net.n_nodes() << " nodes)\n";
}

void cmd_simulate(const Context& ctx) {
    auto net = load_network(ctx);
    auto params = epi_params(ctx);
    auto k = static_cast<uint32_t>(ctx.cfg.get_u64("epidemic.k", 100));
    auto records = run_ensemble(net, params, k, ctx.threads);

    {
        csv::Writer w((ctx.out / "infections.csv").string(),
                      {"replicate", "node_id", "infection_week", "recovery_week",
                       "event"});
        for (uint32_t r = 0; r < records.size(); ++r) {
            const auto& rec = records[r];
            for (std::size_t i = 0; i < net.n_nodes(); ++i) {
                w.field(static_cast<uint64_t>(r));
                w.field(net.node_ids[i]);
                if (rec.infection_week[i] != kNeverInfected)
                    w.field(static_cast<uint64_t>(rec.infection_week[i]));
                else
                    w.field(std::string());
                if (rec.recovery_week[i] != kNeverInfected)
                    w.field(static_cast<uint64_t>(rec.recovery_week[i]));
                else
                    w.field(std::string());
                w.field(static_cast<uint64_t>(rec.event(i) ? 1 : 0));
                w.end_row();
            }
        }
    }
    {
        csv::Writer w((ctx.out / "curves.csv").string(),
                      {"replicate", "week", "S", "I", "R"});
        for (uint32_t r = 0; r < records.size(); ++r)
            for (const auto& wc : records[r].curve) {
                w.field(static_cast<uint64_t>(r));
                w.field(static_cast<uint64_t>(wc.week));
                w.field(wc.susceptible);
                w.field(wc.infected);
                w.field(wc.recovered);
                w.end_row();
            }
    }
    {
        auto s = epidemic_summary(records);
        csv::Writer w((ctx.out / "epidemic_summary.csv").string(),
                      {"statistic", "min", "mean", "median", "max", "sd"});
        auto row = [&w](const std::string& name, const EpidemicSummary::Stat& st) {
            w.field(name);
            w.field(st.min);
            w.field(st.mean);
            w.field(st.median);
            w.field(st.max);
            w.field(st.sd);
            w.end_row();
        };
        row("duration_weeks", s.duration_weeks);
        row("pct_infected", s.pct_infected);
        row("mean_time_to_infection_weeks", s.mean_time_to_infection);
        row("pct_infected_at_peak", s.pct_infected_at_peak);
        row("peak_week", s.peak_week);
    }
    *ctx.log << "simulate: " << k << " replicates written\n";
}

struct CentralityTable {
    // measure -> structure -> per-node scores in registry order
    std::map<std::string, std::map<std::string, std::vector<double>>> scores;
    std::vector<NodeId> node_ids;
};

CentralityTable load_centralities(const Context& ctx) {
    fs::path p = ctx.out / "centrality.csv";
    require(fs::exists(p), "centrality scores", "centrality");
    auto table = csv::read(p.string());
    CentralityTable out;
    std::map<NodeId, std::size_t> index;
    for (const auto& row : table.rows) {
        NodeId id = std::stoull(row[0]);
        if (!index.count(id)) {
            index[id] = 0; // assigned below
        }
    }
    out.node_ids.reserve(index.size());
    for (auto& [id, idx] : index) {
        idx = out.node_ids.size();
        out.node_ids.push_back(id);
    }
    for (const auto& row : table.rows) {
        auto& vec = out.scores[row[1]][row[2]];
        if (vec.empty()) vec.assign(out.node_ids.size(), 0.0);
        vec[index[std::stoull(row[0])]] = std::stod(row[3]);
    }
    return out;
}

struct Outcomes {
    std::vector<ReplicateOutcome> reps; // aligned with CentralityTable order
};

Outcomes load_outcomes(const Context& ctx, const std::vector<NodeId>& node_ids) {
    Outcomes out;
    std::map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < node_ids.size(); ++i) index[node_ids[i]] = i;

    const std::string events_file = ctx.cfg.get_str("eval.events_file", "");
    if (!events_file.empty()) {
        // external observed-event table: node_id,time,event
        auto table = csv::read(events_file);
        int ct = table.column("time"), ce = table.column("event"),
            cn = table.column("node_id");
        if (ct < 0 || ce < 0 || cn < 0)
            throw ConfigError("events file needs columns node_id,time,event");
        ReplicateOutcome rep;
        rep.time.assign(node_ids.size(), 0.0);
        rep.event.assign(node_ids.size(), 0);
        double max_time = 0.0;
        for (const auto& row : table.rows)
            max_time = std::max(max_time, std::stod(row[static_cast<std::size_t>(ct)]));
        for (auto& t : rep.time) t = max_time;
        for (const auto& row : table.rows) {
            auto it = index.find(std::stoull(row[static_cast<std::size_t>(cn)]));
            if (it == index.end()) continue;
            rep.time[it->second] = std::stod(row[static_cast<std::size_t>(ct)]);
            rep.event[it->second] =
                static_cast<uint8_t>(std::stoul(row[static_cast<std::size_t>(ce)]));
        }
        out.reps.push_back(std::move(rep));
        return out;
    }

    fs::path pi = ctx.out / "infections.csv";
    require(fs::exists(pi), "infection records", "simulate");
    fs::path pc = ctx.out / "curves.csv";
    require(fs::exists(pc), "weekly curves", "simulate");

    // censor week per replicate = last week in its curve
    std::map<uint32_t, double> censor_week;
    {
        auto curves = csv::read(pc.string());
        for (const auto& row : curves.rows) {
            auto r = static_cast<uint32_t>(std::stoul(row[0]));
            censor_week[r] = std::max(censor_week[r], std::stod(row[1]));
        }
    }

    auto table = csv::read(pi.string());
    for (const auto& row : table.rows) {
        auto r = static_cast<uint32_t>(std::stoul(row[0]));
        if (out.reps.size() <= r) out.reps.resize(r + 1);
        auto& rep = out.reps[r];
        if (rep.time.empty()) {
            rep.time.assign(node_ids.size(), censor_week[r]);
            rep.event.assign(node_ids.size(), 0);
        }
        auto it = index.find(std::stoull(row[1]));
        if (it == index.end()) continue;
        if (row[4] == "1") {
            rep.event[it->second] = 1;
            rep.time[it->second] = std::stod(row[2]);
        }
    }
    return out;
}

void cmd_evaluate(const Context& ctx) {
    auto cents = load_centralities(ctx);
    auto outcomes = load_outcomes(ctx, cents.node_ids);

    const std::vector<std::string> measures = {"degree", "eigenvector", "pagerank"};
    const std::vector<std::string> structures = {"multi", "single"};

    // correlations.csv: pairwise centrality correlations plus Fisher-mean
    // correlations with time to infection (event nodes only)
    {
        csv::Writer w((ctx.out / "correlations.csv").string(),
                      {"kind", "measure_a", "structure_a", "measure_b", "structure_b",
                       "mean", "ci_low", "ci_high"});
        for (std::size_t a = 0; a < 6; ++a) {
            for (std::size_t b = 0; b < a; ++b) {
                const auto& ma = measures[a % 3];
                const auto& sa = structures[a / 3];
                const auto& mb = measures[b % 3];
                const auto& sb = structures[b / 3];
                double rho = spearman_rho(cents.scores[ma][sa], cents.scores[mb][sb]);
                w.field(std::string("centrality_pair"));
                w.field(ma);
                w.field(sa);
                w.field(mb);
                w.field(sb);
                w.field(rho);
                w.field(std::string());
                w.field(std::string());
                w.end_row();
            }
        }
        for (const auto& s : structures) {
            for (const auto& m : measures) {
                std::vector<double> rhos;
                for (const auto& rep : outcomes.reps) {
                    std::vector<double> tti, cent;
                    for (std::size_t i = 0; i < rep.time.size(); ++i)
                        if (rep.event[i]) {
                            tti.push_back(rep.time[i]);
                            cent.push_back(cents.scores[m][s][i]);
                        }
                    if (tti.size() < 2) continue;
                    try {
                        rhos.push_back(spearman_rho(cent, tti));
                    } catch (const std::invalid_argument&) {
                        // constant vector in a degenerate replicate
                    }
                }
                if (rhos.empty()) continue;
                auto fm = fisher_z_mean(rhos, FisherKind::correlation);
                w.field(std::string("time_to_infection"));
                w.field(m);
                w.field(s);
                w.field(std::string("tti"));
                w.field(std::string());
                w.field(fm.mean);
                w.field(fm.ci_low);
                w.field(fm.ci_high);
                w.end_row();
            }
        }
    }

    // Cox model grid
    std::vector<ModelSpec> specs;
    const std::string grid_file = ctx.cfg.get_str("eval.grid_file", "");
    if (!grid_file.empty())
        specs = load_model_grid(grid_file);
    else
        specs = default_model_grid();

    GridOptions gopts;
    gopts.truncation = ctx.cfg.get_double("eval.truncation", 0.0);
    gopts.n_threads = ctx.threads;

    std::vector<std::vector<double>> multi_cols, single_cols;
    for (const auto& m : measures) {
        multi_cols.push_back(cents.scores[m]["multi"]);
        single_cols.push_back(cents.scores[m]["single"]);
    }
    auto grid =
        evaluate_grid(specs, measures, multi_cols, single_cols, outcomes.reps, gopts);

    csv::Writer w((ctx.out / "cox_grid.csv").string(),
                  {"model", "structure", "c_mean", "ci_low", "ci_high",
                   "replicates_ok", "replicates_failed"});
    for (const auto& cell : grid) {
        w.field(static_cast<uint64_t>(cell.model_id));
        w.field(cell.structure);
        w.field(cell.c.mean);
        w.field(cell.c.ci_low);
        w.field(cell.c.ci_high);
        w.field(static_cast<uint64_t>(cell.n_replicates_ok));
        w.field(static_cast<uint64_t>(cell.n_replicates_failed));
        w.end_row();
    }
    *ctx.log << "evaluate: " << grid.size() << " grid cells written\n";
}

void cmd_gbt(const Context& ctx) {
    auto cents = load_centralities(ctx);
    auto outcomes = load_outcomes(ctx, cents.node_ids);

    const std::vector<std::string> measures = {"degree", "eigenvector", "pagerank"};
    std::vector<std::vector<double>> multi_cols, single_cols;
    for (const auto& m : measures) {
        multi_cols.push_back(cents.scores[m]["multi"]);
        single_cols.push_back(cents.scores[m]["single"]);
    }

    std::vector<std::string> feature_names = measures;
    std::vector<std::vector<double>> extra_cols;
    const std::string extra_file = ctx.cfg.get_str("gbt.extra_file", "");
    if (!extra_file.empty()) {
        auto table = csv::read(extra_file);
        int cn = table.column("node_id");
        if (cn < 0) throw ConfigError("gbt.extra_file needs a node_id column");
        std::map<NodeId, std::size_t> index;
        for (std::size_t i = 0; i < cents.node_ids.size(); ++i)
            index[cents.node_ids[i]] = i;
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (static_cast<int>(c) == cn) continue;
            feature_names.push_back(table.header[c]);
            std::vector<double> col(cents.node_ids.size(), 0.0);
            for (const auto& row : table.rows) {
                auto it = index.find(std::stoull(row[static_cast<std::size_t>(cn)]));
                if (it != index.end()) col[it->second] = std::stod(row[c]);
            }
            extra_cols.push_back(std::move(col));
        }
    }

    ProtocolOptions opts;
    opts.gbt.n_trees = static_cast<uint32_t>(ctx.cfg.get_u64("gbt.n_trees", 500));
    opts.gbt.min_node_size =
        static_cast<uint32_t>(ctx.cfg.get_u64("gbt.min_node_size", 20));
    opts.gbt.max_depth = static_cast<uint32_t>(ctx.cfg.get_u64("gbt.max_depth", 4));
    opts.gbt.learning_rate = ctx.cfg.get_double("gbt.learning_rate", 0.1);
    opts.gbt.min_loss_reduction = ctx.cfg.get_double("gbt.min_loss_reduction", 0.0);
    opts.gbt.row_subsample = ctx.cfg.get_double("gbt.row_subsample", 0.5);
    opts.include_censored = ctx.cfg.get_str("gbt.include_censored", "false") == "true";
    opts.train_fraction = ctx.cfg.get_double("gbt.train_fraction", 0.10);
    opts.n_threads = ctx.threads;
    opts.master_seed = ctx.master_seed;

    std::vector<ReplicateTarget> targets;
    for (auto& rep : outcomes.reps)
        targets.push_back({rep.time, rep.event});

    auto rows = evaluate_protocol(feature_names, multi_cols, single_cols, targets,
                                  extra_cols, opts);

    {
        csv::Writer w((ctx.out / "gbt_metrics.csv").string(),
                      {"replicate", "structure", "r2", "rmse"});
        for (const auto& row : rows) {
            w.field(static_cast<uint64_t>(row.replicate));
            w.field(row.structure);
            w.field(row.r2);
            w.field(row.rmse);
            w.end_row();
        }
    }
    {
        csv::Writer w((ctx.out / "gbt_importance.csv").string(),
                      {"replicate", "structure", "feature", "cover", "frequency",
                       "gain"});
        for (const auto& row : rows) {
            for (std::size_t f = 0; f < row.cover.size(); ++f) {
                w.field(static_cast<uint64_t>(row.replicate));
                w.field(row.structure);
                w.field(feature_names[f]);
                w.field(row.cover[f]);
                w.field(row.frequency[f]);
                w.field(row.gain[f]);
                w.end_row();
            }
        }
    }
    *ctx.log << "gbt: " << rows.size() << " replicate/structure fits written\n";
}

void write_manifest(const Context& ctx) {
    static const char* kArtifacts[] = {
        "network/family.csv", "network/household.csv", "network/school.csv",
        "network/work.csv",   "network/registry.txt",  "stats.csv",
        "centrality.csv",     "infections.csv",        "curves.csv",
        "epidemic_summary.csv", "correlations.csv",    "cox_grid.csv",
        "gbt_metrics.csv",    "gbt_importance.csv"};
    std::ofstream m(ctx.out / "manifest.txt");
    m << "config_hash " << std::hex << ctx.cfg.hash() << std::dec << '\n';
    m << "master_seed " << ctx.master_seed << '\n';
    for (const char* a : kArtifacts) {
        fs::path p = ctx.out / a;
        if (!fs::exists(p)) continue;
        m << a << ' ' << std::hex << file_checksum(p.string()) << std::dec << '\n';
    }
}

} // namespace

uint64_t file_checksum(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        auto got = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

int run_pipeline(const std::string& subcommand, const RunOptions& opts,
                 std::ostream& log) {
    Context ctx;
    ctx.log = &log;
    try {
        if (!opts.config_path.empty())
            ctx.cfg = Config::from_file(opts.config_path);
        for (const auto& o : opts.overrides) ctx.cfg.apply_override(o);

        ctx.master_seed = opts.seed_set ? opts.seed
                                        : ctx.cfg.get_u64("run.master_seed", 0);
        ctx.cfg.set("run.master_seed", std::to_string(ctx.master_seed));
        ctx.threads = opts.threads_set
                          ? opts.threads
                          : static_cast<uint32_t>(ctx.cfg.get_u64("run.threads", 1));
        if (ctx.threads < 1) ctx.threads = 1;
        ctx.out = opts.output_set ? opts.output_dir
                                  : ctx.cfg.get_str("run.output_dir", "out");
        fs::create_directories(ctx.out);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return exit_config_error;
    }

    try {
        if (subcommand == "generate") {
            cmd_generate(ctx);
        } else if (subcommand == "stats") {
            cmd_stats(ctx);
        } else if (subcommand == "centrality") {
            cmd_centrality(ctx);
        } else if (subcommand == "simulate") {
            cmd_simulate(ctx);
        } else if (subcommand == "evaluate") {
            cmd_evaluate(ctx);
        } else if (subcommand == "gbt") {
            cmd_gbt(ctx);
        } else if (subcommand == "all") {
            if (ctx.cfg.get_str("network.source", "generate") != "files")
                cmd_generate(ctx);
            cmd_stats(ctx);
            cmd_centrality(ctx);
            cmd_simulate(ctx);
            cmd_evaluate(ctx);
            cmd_gbt(ctx);
        } else {
            log << "unknown subcommand: " << subcommand << '\n';
            return exit_config_error;
        }
        write_manifest(ctx);
        return exit_ok;
    } catch (const MissingArtifactError& e) {
        log << "error: " << e.what() << '\n';
        return exit_missing_artifact;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return exit_config_error;
    } catch (const ConvergenceError& e) {
        log << "numerical failure: " << e.what() << '\n';
        return exit_numerical_failure;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return exit_config_error;
    }
}

} // namespace mlepi
