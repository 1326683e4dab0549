// ddam: distributed dynamic associative memory simulator.
//
// Subcommands:
//   run              execute an experiment config, write reports + figures
//   trees            print per-agent routing-tree designs for a config
//   gen-data         materialize synthetic or periodic-traffic datasets
//   validate-config  parse and validate a config file
//   version          print the tool version
//
// Exit codes: 0 success, 1 runtime error, 2 usage/config error.
#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ddam/config.hpp"
#include "ddam/csv.hpp"
#include "ddam/harness.hpp"
#include "ddam/traffic.hpp"

namespace fs = std::filesystem;
using namespace ddam;

namespace {

ExperimentConfig load_with_overrides(const std::string& path,
                                     const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config file not found: " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    for (const auto& ov : overrides) apply_override(j, ov);
    return parse_config(j);
}

std::string default_out_dir() {
    const char* env = std::getenv("DDAM_OUT_DIR");
    return env ? env : "out";
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& overrides,
            std::string out_dir, bool force) {
    const ExperimentConfig cfg = load_with_overrides(config_path, overrides);
    if (out_dir.empty()) out_dir = default_out_dir();
    fs::create_directories(out_dir);

    const auto t_start = std::chrono::steady_clock::now();
    auto last = t_start;
    auto rows = run_experiment(cfg, [&](const ReportRow& r) {
        const auto now = std::chrono::steady_clock::now();
        const double sec = std::chrono::duration<double>(now - last).count();
        last = now;
        std::cout << "protocol=" << protocol_name(r.protocol) << " T=" << r.horizon
                  << " rho=" << format_double(r.rho) << " y0=" << format_double(r.y0)
                  << " omega=" << r.omega << " seed=" << r.seed << " steps=" << r.steps_run
                  << " c_max=" << r.c_max << " sreg=" << format_double(r.static_regret)
                  << " avg=" << format_double(r.avg_regret) << " [" << format_double(sec)
                  << "s]\n";
    });

    write_reports_csv(rows, (fs::path(out_dir) / "reports.csv").string(), force);
    write_metadata(cfg, (fs::path(out_dir) / "metadata.json").string(), force);
    for (const auto& fig_name : cfg.figures) {
        const Figure fig = figure_from_name(fig_name);
        emit_plotdata(rows, fig, (fs::path(out_dir) / (fig_name + ".csv")).string(), force);
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                             .count();
    std::cout << rows.size() << " rows -> " << out_dir << " (" << format_double(total) << "s)\n";
    return 0;
}

int cmd_trees(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& csv_path, bool force) {
    const ExperimentConfig cfg = load_with_overrides(config_path, overrides);
    const PhysicalGraph graph = build_graph(cfg.graph);
    const int N = graph.n_nodes;
    // trees are seed/y0-dependent only through the weights; use the first
    // sweep point, matching what a run at that point would build
    const LogicalWeights W =
        detail::make_weights(cfg, N, cfg.sweep_y0.front(), cfg.seeds.front());

    std::vector<RoutingTree> steiner, star;
    for (int n = 0; n < N; ++n) {
        std::vector<AgentId> terms;
        for (AgentId m : W.support[static_cast<size_t>(n)])
            if (m != n) terms.push_back(m);
        try {
            steiner.push_back(steiner_tree(graph, n, terms));
            star.push_back(sumdelay_tree(graph, n, terms));
        } catch (const TopologyError& e) {
            throw TopologyError("agent " + std::to_string(n) + ": " + e.what());
        }
    }
    const long cap_st = link_capacity(steiner, W);
    const long cap_star = link_capacity(star, W);

    std::unique_ptr<CsvWriter> csv;
    if (!csv_path.empty())
        csv = std::make_unique<CsvWriter>(
            csv_path,
            std::vector<std::string>{"agent", "design", "edges", "tau_sum", "tau_max",
                                     "delta_tau"},
            force);
    for (int n = 0; n < N; ++n) {
        const auto& sup = W.support[static_cast<size_t>(n)];
        for (int design = 0; design < 2; ++design) {
            const auto& tree = design == 0 ? steiner[static_cast<size_t>(n)] : star[static_cast<size_t>(n)];
            const char* name = design == 0 ? "steiner" : "sumdelay";
            const auto s = delay_summary(tree, sup);
            std::string edges;
            for (const auto& e : tree.tree_edges) {
                if (!edges.empty()) edges += ' ';
                edges += std::to_string(e.first) + "-" + std::to_string(e.second);
            }
            std::cout << "agent " << n << " " << name << ": edges=[" << edges
                      << "] tau_sum=" << s.tau_sum << " tau_max=" << s.tau_max
                      << " delta_tau=" << s.delta_tau << "\n";
            if (csv)
                csv->row({std::to_string(n), name, edges, std::to_string(s.tau_sum),
                          std::to_string(s.tau_max), std::to_string(s.delta_tau)});
        }
    }
    if (csv) csv->close();
    std::cout << "network C_max: steiner=" << cap_st << " sumdelay=" << cap_star << "\n";
    return 0;
}

int cmd_gen_data(const std::string& kind, const std::string& out_path, bool force, int aps,
                 int days, std::uint64_t seed, const std::string& config_path,
                 const std::vector<std::string>& overrides, long T) {
    if (!force && fs::exists(out_path))
        throw IoError("refusing to overwrite " + out_path + " (use --force)");
    if (kind == "periodic-traffic") {
        save_traffic(gen_periodic_traffic(aps, days, seed), out_path);
    } else if (kind == "synthetic") {
        if (config_path.empty())
            throw ConfigError("gen-data synthetic requires --config for dimensions");
        const ExperimentConfig cfg = load_with_overrides(config_path, overrides);
        SyntheticConfig sc;
        sc.n_agents = cfg.graph.nodes > 0 ? cfg.graph.nodes : build_graph(cfg.graph).n_nodes;
        sc.d_k = cfg.d_k;
        sc.d_v = cfg.d_v;
        sc.rho = cfg.sweep_rho.front();
        sc.noise_var = cfg.noise_var;
        sc.seed = seed;
        const auto streams = gen_stream(sc, gen_ground_truth(sc), T);
        std::vector<std::string> cols{"agent", "t"};
        for (int j = 0; j < sc.d_k; ++j) cols.push_back("k" + std::to_string(j));
        for (int i = 0; i < sc.d_v; ++i) cols.push_back("v" + std::to_string(i));
        CsvWriter csv(out_path, cols, force);
        for (int n = 0; n < sc.n_agents; ++n)
            for (TimeStep t = 1; t <= T; ++t) {
                const auto& kv = streams.at(n, t);
                std::vector<std::string> cells{std::to_string(n), std::to_string(t)};
                for (int j = 0; j < sc.d_k; ++j) cells.push_back(format_double(kv.key(j)));
                for (int i = 0; i < sc.d_v; ++i) cells.push_back(format_double(kv.value(i)));
                csv.row(cells);
            }
        csv.close();
    } else {
        throw ConfigError("gen-data: unknown kind '" + kind +
                          "' (expected periodic-traffic or synthetic)");
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributed dynamic associative memory simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, csv_path, kind = "periodic-traffic", out_path;
    std::vector<std::string> overrides;
    bool force = false;
    int aps = 2, days = 1;
    std::uint64_t seed = 1;
    long T = 100;

    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("--config", config_path, "experiment config (json)")->required();
    run->add_option("--out", out_dir, "output directory (default $DDAM_OUT_DIR or ./out)");
    run->add_option("--override", overrides, "key.path=value applied before validation");
    run->add_flag("--force", force, "overwrite existing outputs");

    auto* trees = app.add_subcommand("trees", "inspect routing-tree designs");
    trees->add_option("--config", config_path, "experiment config (json)")->required();
    trees->add_option("--override", overrides, "key.path=value applied before validation");
    trees->add_option("--csv", csv_path, "also write the report as csv");
    trees->add_flag("--force", force, "overwrite existing outputs");

    auto* gen = app.add_subcommand("gen-data", "materialize datasets to csv");
    gen->add_option("--kind", kind, "periodic-traffic | synthetic");
    gen->add_option("--out", out_path, "output csv path")->required();
    gen->add_option("--aps", aps, "periodic traffic: number of APs");
    gen->add_option("--days", days, "periodic traffic: number of days");
    gen->add_option("--seed", seed, "generator seed");
    gen->add_option("--config", config_path, "synthetic: config for dimensions");
    gen->add_option("--override", overrides, "key.path=value applied before validation");
    gen->add_option("--horizon", T, "synthetic: steps per agent");
    gen->add_flag("--force", force, "overwrite existing outputs");

    auto* validate = app.add_subcommand("validate-config", "parse and validate a config");
    validate->add_option("--config", config_path, "experiment config (json)")->required();
    validate->add_option("--override", overrides, "key.path=value applied before validation");

    auto* version = app.add_subcommand("version", "print version");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, overrides, out_dir, force);
        if (trees->parsed()) return cmd_trees(config_path, overrides, csv_path, force);
        if (gen->parsed())
            return cmd_gen_data(kind, out_path, force, aps, days, seed, config_path, overrides,
                                T);
        if (validate->parsed()) {
            load_with_overrides(config_path, overrides);
            std::cout << "ok\n";
            return 0;
        }
        if (version->parsed()) {
            std::cout << "ddam " << kVersion << "\n";
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
