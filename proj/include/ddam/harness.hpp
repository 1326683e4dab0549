#ifndef DDAM_HARNESS_HPP
#define DDAM_HARNESS_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ddam/analytics.hpp"
#include "ddam/config.hpp"
#include "ddam/csv.hpp"
#include "ddam/datagen.hpp"
#include "ddam/protocols.hpp"
#include "ddam/routing.hpp"
#include "ddam/traffic.hpp"

namespace ddam {

struct ReportRow {
    long horizon = 0;
    Protocol protocol = Protocol::OGD;
    double static_regret = 0.0;
    double dynamic_regret = 0.0;
    double avg_regret = 0.0;  // static_regret / steps_run
    double pl = 0.0;          // network path length of the dynamic comparator
    double bound = 0.0;       // protocol-matched bound at measured path length
    double self_nmse = 0.0;
    double cross_nmse = 0.0;
    long c_max = 0;
    std::uint64_t seed = 0;
    double rho = 0.0;
    double y0 = 0.0;
    long omega = 0;
    double eta = 0.0;  // mean learning rate across agents
    long steps_run = 0;
    double alpha = std::numeric_limits<double>::quiet_NaN();  // cdogd contraction
};

inline double avg_dynamic_regret(const ReportRow& r) {
    return r.dynamic_regret / static_cast<double>(r.steps_run);
}

inline double scaled_pl(const ReportRow& r) {
    return (1.0 + r.pl) / std::sqrt(static_cast<double>(r.steps_run));
}

struct SweepPoint {
    Protocol protocol = Protocol::OGD;
    long T = 0;
    double rho = 0.0;
    double y0 = 0.0;
    long omega = 0;
    std::uint64_t seed = 0;

    std::string key() const {
        return protocol_name(protocol) + "/" + std::to_string(T) + "/" + format_double(rho) +
               "/" + format_double(y0) + "/" + std::to_string(omega) + "/" +
               std::to_string(seed);
    }
};

namespace detail {

inline bool is_togd(Protocol p) {
    return p == Protocol::TogdSteiner || p == Protocol::TogdStar;
}

struct RunContext {
    PhysicalGraph graph;
    Mat mixing;
    double mixing_alpha = 0.0;
    StreamSet traffic_streams;  // traffic scenarios only, shared across runs
};

inline RunContext build_context(const ExperimentConfig& cfg) {
    RunContext ctx;
    ctx.graph = build_graph(cfg.graph);
    ctx.mixing = cfg.mixing == MixingConfig::Metropolis
                     ? metropolis_weights(ctx.graph)
                     : Mat::Identity(ctx.graph.n_nodes, ctx.graph.n_nodes);
    ctx.mixing_alpha = spectral_contraction(ctx.mixing);
    if (cfg.scenario != Scenario::Synthetic) {
        std::vector<TrafficRecord> records;
        if (cfg.traffic.source == TrafficConfig::Source::Periodic)
            records = gen_periodic_traffic(cfg.traffic.aps, cfg.traffic.days, cfg.traffic.seed);
        else
            records = load_traffic(cfg.traffic.path);
        ctx.traffic_streams = build_kv(records);
        if (ctx.traffic_streams.agents() != ctx.graph.n_nodes)
            throw ConfigError("traffic: " + std::to_string(ctx.traffic_streams.agents()) +
                              " APs but graph has " + std::to_string(ctx.graph.n_nodes) +
                              " nodes");
    }
    return ctx;
}

inline LogicalWeights make_weights(const ExperimentConfig& cfg, int N, double y0,
                                   std::uint64_t seed) {
    LogicalWeights lw;
    switch (cfg.weights.type) {
        case WeightsConfig::Type::Identity: lw = identity_weights(N); break;
        case WeightsConfig::Type::Uniform: lw = uniform_weights(N); break;
        case WeightsConfig::Type::Rows:
            if (cfg.weights.rows.rows() != N)
                throw ConfigError("weights.matrix size does not match the graph");
            lw = validate_weights(cfg.weights.rows);
            break;
        case WeightsConfig::Type::Dirichlet: {
            SyntheticConfig sc;
            sc.n_agents = N;
            sc.seed = seed;
            sc.dirichlet_y0 = y0;
            sc.dirichlet_y1 = cfg.weights.y1;
            lw = gen_weights(sc);
            break;
        }
    }
    return sparsify_weights(lw, cfg.weights.support_threshold);
}

inline std::vector<LossSpec> make_specs(const ExperimentConfig& cfg, int N) {
    LossSpec spec;
    spec.variant = cfg.loss_variant;
    spec.gating = cfg.gating;
    spec.feature_map = cfg.feature_map;
    return std::vector<LossSpec>(static_cast<size_t>(N), spec);
}

inline Trajectory run_ogd_like(std::vector<AgentState>& states, const LogicalWeights& W,
                               const std::vector<LossSpec>& specs, const StreamSet& streams,
                               long steps, double B, const Mat* mixing) {
    Trajectory traj;
    traj.X.resize(states.size());
    for (auto& v : traj.X) v.reserve(static_cast<size_t>(steps));
    for (TimeStep t = 1; t <= steps; ++t) {
        for (size_t n = 0; n < states.size(); ++n) traj.X[n].push_back(states[n].X);
        if (mixing) {
            cdogd_step(states, *mixing, specs, streams, t, B);
        } else {
            for (auto& s : states) ogd_step(s, W, specs, streams, t, B);
        }
    }
    return traj;
}

inline ReportRow run_point(const ExperimentConfig& cfg, const RunContext& ctx,
                           const SweepPoint& pt) {
    const int N = ctx.graph.n_nodes;
    const double B = cfg.domain_bound;
    ReportRow row;
    row.horizon = pt.T;
    row.protocol = pt.protocol;
    row.seed = pt.seed;
    row.rho = pt.rho;
    row.y0 = pt.y0;
    row.omega = pt.omega;

    const LogicalWeights W = make_weights(cfg, N, pt.y0, pt.seed);
    std::vector<LossSpec> specs = make_specs(cfg, N);

    // Trees, capacity, and the fairness-scaled horizon.
    std::vector<RoutingTree> trees;
    long steps = pt.T;
    long c_max = 0;
    if (is_togd(pt.protocol)) {
        for (int n = 0; n < N; ++n) {
            std::vector<AgentId> terms;
            for (AgentId m : W.support[static_cast<size_t>(n)])
                if (m != n) terms.push_back(m);
            trees.push_back(pt.protocol == Protocol::TogdStar
                                ? sumdelay_tree(ctx.graph, n, terms)
                                : steiner_tree(ctx.graph, n, terms));
        }
        c_max = link_capacity(trees, W);
        if (cfg.horizon_scaling && c_max > 0) steps = pt.T / c_max;
        if (steps < 1)
            throw ConfigError("horizon " + std::to_string(pt.T) +
                              " too small for link capacity " + std::to_string(c_max));
    } else if (pt.protocol == Protocol::CDOGD) {
        c_max = 2;  // one parameter each way on every edge
    }
    row.c_max = c_max;
    row.steps_run = steps;

    // Stream for this run.
    StreamSet streams;
    if (cfg.scenario == Scenario::Synthetic) {
        SyntheticConfig sc;
        sc.n_agents = N;
        sc.d_k = cfg.d_k;
        sc.d_v = cfg.d_v;
        sc.rho = pt.rho;
        sc.noise_var = cfg.noise_var;
        sc.seed = pt.seed;
        sc.drift =
            cfg.drift == DriftMode::SignSwap ? DriftKind::SignSwapHalf : DriftKind::None;
        streams = gen_stream(sc, gen_ground_truth(sc), steps);
    } else {
        if (ctx.traffic_streams.horizon() < steps)
            throw DataError("traffic stream has " +
                            std::to_string(ctx.traffic_streams.horizon()) +
                            " hours, run needs " + std::to_string(steps));
        streams = ctx.traffic_streams;
    }

    // Assumption-3 gradient bounds: configured, or the per-stream bound over
    // the feasible ball (sound for every iterate the run can visit).
    if (cfg.grad_bound.mode == GradBoundConfig::Mode::Fixed) {
        for (auto& s : specs) s.grad_bound = cfg.grad_bound.value;
    } else {
        for (int m = 0; m < N; ++m) {
            double g = 0.0;
            for (TimeStep t = 1; t <= steps; ++t) {
                const auto& kv = streams.at(m, t);
                g = std::max(g, grad_bound_on_ball(specs[static_cast<size_t>(m)], B, kv.key,
                                                   kv.value));
            }
            specs[static_cast<size_t>(m)].grad_bound = g;
        }
    }

    // Delay summaries and bound constants.
    std::vector<DelaySummary> summaries(static_cast<size_t>(N));
    if (is_togd(pt.protocol))
        for (int n = 0; n < N; ++n)
            summaries[static_cast<size_t>(n)] =
                delay_summary(trees[static_cast<size_t>(n)], W.support[static_cast<size_t>(n)]);
    auto constants = bound_constants(W, specs, summaries, B);

    // Learning rates (fixed per protocol, or the corollary schedules).
    std::vector<double> etas(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n) {
        double e;
        if (cfg.lr.mode == LrConfig::Mode::Fixed) {
            e = pt.protocol == Protocol::OGD ? cfg.lr.ogd
                : pt.protocol == Protocol::CDOGD ? cfg.lr.cdogd
                                                 : cfg.lr.togd;
        } else if (pt.protocol == Protocol::OGD) {
            e = lr_ogd(B, constants[static_cast<size_t>(n)].Gbar, steps);
        } else if (pt.protocol == Protocol::CDOGD) {
            e = lr_cdogd(steps);
        } else {
            const auto& cn = constants[static_cast<size_t>(n)];
            e = lr_togd(B, cn.Q, cn.J, cn.delays.delta_tau, steps);
        }
        etas[static_cast<size_t>(n)] = e;
        constants[static_cast<size_t>(n)].eta = e;
        row.eta += e;
    }
    row.eta /= N;

    // Simulate, recording the pre-update iterate at each step.
    const int d_v = cfg.scenario == Scenario::Synthetic
                        ? cfg.d_v
                        : static_cast<int>(streams.at(0, 1).value.size());
    const int d_feat =
        static_cast<int>(detail::spec_key(specs[0], streams.at(0, 1).key).size());
    std::vector<AgentState> states;
    for (int n = 0; n < N; ++n)
        states.push_back({n, Mat::Zero(d_v, d_feat), etas[static_cast<size_t>(n)], {}});
    Trajectory traj;
    if (pt.protocol == Protocol::OGD) {
        traj = run_ogd_like(states, W, specs, streams, steps, B, nullptr);
    } else if (pt.protocol == Protocol::CDOGD) {
        traj = run_ogd_like(states, W, specs, streams, steps, B, &ctx.mixing);
    } else {
        TogdNetwork net(states, trees, W, specs, B);
        traj.X.resize(static_cast<size_t>(N));
        for (TimeStep t = 1; t <= steps; ++t) {
            for (int n = 0; n < N; ++n)
                traj.X[static_cast<size_t>(n)].push_back(net.agents()[static_cast<size_t>(n)].X);
            net.step(streams, t);
        }
    }

    // Comparators and analytics.
    const auto stat_cmp = static_comparator(streams, W, specs, B, steps);
    row.static_regret = dynamic_regret(traj, streams, W, specs, stat_cmp);
    std::vector<double> pl(static_cast<size_t>(N), 0.0);
    if (cfg.comparator == ComparatorConfig::Windowed) {
        const auto dyn_cmp = windowed_comparator(streams, W, specs, B, steps, pt.omega);
        row.dynamic_regret = dynamic_regret(traj, streams, W, specs, dyn_cmp);
        pl = path_length(dyn_cmp);
    } else {
        row.dynamic_regret = row.static_regret;  // constant comparator, same sum
    }
    row.avg_regret = row.static_regret / static_cast<double>(steps);
    for (double x : pl) row.pl += x;

    if (cfg.nmse_mode == NmseMode::Final) {
        Trajectory fin;
        fin.X.resize(static_cast<size_t>(N));
        for (int n = 0; n < N; ++n)
            fin.X[static_cast<size_t>(n)].assign(static_cast<size_t>(steps), traj.at(n, steps));
        const auto r = nmse(fin, streams, W, specs);
        row.self_nmse = r.self_nmse;
        row.cross_nmse = r.cross_nmse;
    } else {
        const auto r = nmse(traj, streams, W, specs);
        row.self_nmse = r.self_nmse;
        row.cross_nmse = r.cross_nmse;
    }

    // Theoretical bound at the measured path length.
    if (pt.protocol == Protocol::CDOGD) {
        row.alpha = ctx.mixing_alpha;
        row.bound = ctx.mixing_alpha < 1.0
                        ? theoretical_bound(BoundKind::CdogdStatic, constants, B, steps, {},
                                            ctx.mixing_alpha)
                        : std::numeric_limits<double>::infinity();
    } else if (pt.protocol == Protocol::OGD) {
        row.bound = theoretical_bound(BoundKind::OgdDynamic, constants, B, steps, pl);
    } else {
        row.bound = theoretical_bound(BoundKind::TogdDynamic, constants, B, steps, pl);
    }
    return row;
}

}  // namespace detail

// One deterministic run per (protocol, sweep point, seed). Rows come back in
// canonical order: protocols as configured, then T, rho, y0, omega, seed in
// the configured list order. Points are isolated runs with no shared mutable
// state, so callers may distribute them; outputs are merged by key here.
inline std::vector<ReportRow> run_experiment(
    const ExperimentConfig& cfg,
    const std::function<void(const ReportRow&)>& on_row = nullptr) {
    const auto ctx = detail::build_context(cfg);
    std::vector<ReportRow> rows;
    std::set<std::string> seen;
    for (Protocol proto : cfg.protocols)
        for (long T : cfg.sweep_T)
            for (double rho : cfg.sweep_rho)
                for (double y0 : cfg.sweep_y0)
                    for (long omega : cfg.sweep_omega)
                        for (std::uint64_t seed : cfg.seeds) {
                            const SweepPoint pt{proto, T, rho, y0, omega, seed};
                            if (!seen.insert(pt.key()).second)
                                throw ConfigError("duplicate sweep point " + pt.key());
                            try {
                                rows.push_back(detail::run_point(cfg, ctx, pt));
                            } catch (const Error& e) {
                                throw Error(std::string(e.what()) + " [at " + pt.key() + "]");
                            }
                            if (on_row) on_row(rows.back());
                        }
    return rows;
}

inline const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> cols = {
        "horizon",    "protocol", "static_regret", "dynamic_regret", "avg_regret", "pl",
        "bound",      "self_nmse", "cross_nmse",   "c_max",          "seed",       "rho",
        "y0",         "omega",    "eta",           "steps_run",      "alpha"};
    return cols;
}

inline void write_reports_csv(const std::vector<ReportRow>& rows, const std::string& path,
                              bool force) {
    CsvWriter csv(path, report_columns(), force);
    for (const auto& r : rows) {
        csv.row({std::to_string(r.horizon), protocol_name(r.protocol),
                 format_double(r.static_regret), format_double(r.dynamic_regret),
                 format_double(r.avg_regret), format_double(r.pl), format_double(r.bound),
                 format_double(r.self_nmse), format_double(r.cross_nmse),
                 std::to_string(r.c_max), std::to_string(r.seed), format_double(r.rho),
                 format_double(r.y0), std::to_string(r.omega), format_double(r.eta),
                 std::to_string(r.steps_run),
                 std::isnan(r.alpha) ? std::string() : format_double(r.alpha)});
    }
    csv.close();
}

inline void write_metadata(const ExperimentConfig& cfg, const std::string& path, bool force) {
    if (!force && std::filesystem::exists(path))
        throw IoError("refusing to overwrite " + path + " (use --force)");
    Json meta;
    char hex[32];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    meta["config_hash"] = std::string(hex);
    meta["version"] = kVersion;
    meta["rng"] = kRngName;
    meta["grad_bound_mode"] =
        cfg.grad_bound.mode == GradBoundConfig::Mode::StreamBall ? "stream_ball" : "fixed";
    meta["report_columns"] = report_columns();
    meta["config"] = cfg.raw;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << meta.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

enum class Figure {
    Fig3RegretVsT,
    Fig4VsRho,
    Fig5VsY0,
    Fig7PlTracking,
    Fig8DynRegret,
    Fig10Nmse,
};

inline Figure figure_from_name(const std::string& s) {
    if (s == "fig3_regret_vs_T") return Figure::Fig3RegretVsT;
    if (s == "fig4_vs_rho") return Figure::Fig4VsRho;
    if (s == "fig5_vs_y0") return Figure::Fig5VsY0;
    if (s == "fig7_pl_tracking") return Figure::Fig7PlTracking;
    if (s == "fig8_dynregret") return Figure::Fig8DynRegret;
    if (s == "fig10_nmse") return Figure::Fig10Nmse;
    throw ConfigError("unknown figure: " + s);
}

inline std::string figure_name(Figure f) {
    switch (f) {
        case Figure::Fig3RegretVsT: return "fig3_regret_vs_T";
        case Figure::Fig4VsRho: return "fig4_vs_rho";
        case Figure::Fig5VsY0: return "fig5_vs_y0";
        case Figure::Fig7PlTracking: return "fig7_pl_tracking";
        case Figure::Fig8DynRegret: return "fig8_dynregret";
        case Figure::Fig10Nmse: return "fig10_nmse";
    }
    return "?";
}

// Tidy per-figure CSVs with raw (unsmoothed) values.
inline void emit_plotdata(const std::vector<ReportRow>& rows, Figure fig, const std::string& path,
                          bool force) {
    if (rows.empty()) throw AnalyticsError("emit_plotdata: no report rows");
    auto require_axis = [&](const std::string& name, auto getter) {
        std::set<double> vals;
        for (const auto& r : rows) vals.insert(static_cast<double>(getter(r)));
        if (vals.size() < 2)
            throw AnalyticsError("emit_plotdata(" + figure_name(fig) + "): sweep axis '" + name +
                                 "' absent (needs >= 2 distinct values)");
    };
    switch (fig) {
        case Figure::Fig3RegretVsT: {
            require_axis("T", [](const ReportRow& r) { return r.horizon; });
            CsvWriter csv(path, {"T", "protocol", "avg_static_regret", "seed"}, force);
            for (const auto& r : rows)
                csv.row({std::to_string(r.horizon), protocol_name(r.protocol),
                         format_double(r.avg_regret), std::to_string(r.seed)});
            csv.close();
            break;
        }
        case Figure::Fig4VsRho: {
            require_axis("rho", [](const ReportRow& r) { return r.rho; });
            CsvWriter csv(path, {"rho", "protocol", "static_regret", "avg_static_regret", "seed"},
                          force);
            for (const auto& r : rows)
                csv.row({format_double(r.rho), protocol_name(r.protocol),
                         format_double(r.static_regret), format_double(r.avg_regret),
                         std::to_string(r.seed)});
            csv.close();
            break;
        }
        case Figure::Fig5VsY0: {
            require_axis("y0", [](const ReportRow& r) { return r.y0; });
            CsvWriter csv(path, {"y0", "protocol", "static_regret", "avg_static_regret", "seed"},
                          force);
            for (const auto& r : rows)
                csv.row({format_double(r.y0), protocol_name(r.protocol),
                         format_double(r.static_regret), format_double(r.avg_regret),
                         std::to_string(r.seed)});
            csv.close();
            break;
        }
        case Figure::Fig7PlTracking: {
            require_axis("T", [](const ReportRow& r) { return r.horizon; });
            CsvWriter csv(path,
                          {"T", "protocol", "omega", "avg_dynamic_regret", "dynamic_regret",
                           "pl", "scaled_pl", "seed"},
                          force);
            for (const auto& r : rows)
                csv.row({std::to_string(r.horizon), protocol_name(r.protocol),
                         std::to_string(r.omega), format_double(avg_dynamic_regret(r)),
                         format_double(r.dynamic_regret), format_double(r.pl),
                         format_double(scaled_pl(r)), std::to_string(r.seed)});
            csv.close();
            break;
        }
        case Figure::Fig8DynRegret: {
            require_axis("T", [](const ReportRow& r) { return r.horizon; });
            CsvWriter csv(path, {"T", "protocol", "omega", "avg_dynamic_regret", "seed"}, force);
            for (const auto& r : rows)
                csv.row({std::to_string(r.horizon), protocol_name(r.protocol),
                         std::to_string(r.omega), format_double(avg_dynamic_regret(r)),
                         std::to_string(r.seed)});
            csv.close();
            break;
        }
        case Figure::Fig10Nmse: {
            require_axis("y0", [](const ReportRow& r) { return r.y0; });
            CsvWriter csv(path, {"y0", "protocol", "self_nmse", "cross_nmse", "seed"}, force);
            for (const auto& r : rows)
                csv.row({format_double(r.y0), protocol_name(r.protocol),
                         format_double(r.self_nmse), format_double(r.cross_nmse),
                         std::to_string(r.seed)});
            csv.close();
            break;
        }
    }
}

}  // namespace ddam

#endif
