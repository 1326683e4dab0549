#ifndef DDAM_CONFIG_HPP
#define DDAM_CONFIG_HPP

#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ddam/am_core.hpp"
#include "ddam/common.hpp"
#include "ddam/topology.hpp"

namespace ddam {

using Json = nlohmann::json;

enum class Protocol { OGD, CDOGD, TogdSteiner, TogdStar };
enum class Scenario { Synthetic, Traffic, PeriodicTraffic };

inline std::string protocol_name(Protocol p) {
    switch (p) {
        case Protocol::OGD: return "ogd";
        case Protocol::CDOGD: return "cdogd";
        case Protocol::TogdSteiner: return "togd_steiner";
        case Protocol::TogdStar: return "togd_star";
    }
    return "?";
}

inline Protocol protocol_from_name(const std::string& s) {
    if (s == "ogd") return Protocol::OGD;
    if (s == "cdogd") return Protocol::CDOGD;
    if (s == "togd_steiner") return Protocol::TogdSteiner;
    if (s == "togd_star") return Protocol::TogdStar;
    throw ConfigError("unknown protocol: " + s);
}

struct GraphConfig {
    enum class Type { ErdosRenyi, Edges, Csv, Fig2 };
    Type type = Type::ErdosRenyi;
    int nodes = 0;
    double p = 0.25;
    std::uint64_t seed = 0;
    std::vector<Edge> edges;
    std::vector<int> delays;
    std::string path;
};

struct WeightsConfig {
    enum class Type { Dirichlet, Identity, Uniform, Rows };
    Type type = Type::Dirichlet;
    double y1 = 10.0;
    double support_threshold = 0.0;
    Mat rows;
};

struct LrConfig {
    enum class Mode { Corollary, Fixed };
    Mode mode = Mode::Corollary;
    double ogd = 0.0;
    double cdogd = 0.0;
    double togd = 0.0;
};

struct GradBoundConfig {
    enum class Mode { StreamBall, Fixed };
    Mode mode = Mode::StreamBall;
    double value = 0.0;
};

struct TrafficConfig {
    enum class Source { Periodic, Csv };
    Source source = Source::Periodic;
    int aps = 16;
    int days = 50;
    std::uint64_t seed = 99;
    std::string path;
};

enum class DriftMode { None, SignSwap };
enum class ComparatorConfig { Static, Windowed };
enum class NmseMode { PerStep, Final };
enum class MixingConfig { Metropolis, Identity };

struct ExperimentConfig {
    Scenario scenario = Scenario::Synthetic;
    std::vector<Protocol> protocols;
    GraphConfig graph;
    WeightsConfig weights;
    LossVariant loss_variant = LossVariant::DeltaNet;
    Vec gating;  // optional, gated variants
    FeatureMapConfig feature_map;
    int d_k = 2;
    int d_v = 2;
    double domain_bound = 24.0;
    double noise_var = 1.0;
    DriftMode drift = DriftMode::None;
    ComparatorConfig comparator = ComparatorConfig::Static;
    NmseMode nmse_mode = NmseMode::PerStep;
    MixingConfig mixing = MixingConfig::Metropolis;
    bool horizon_scaling = true;
    std::vector<long> sweep_T{1000};
    std::vector<double> sweep_rho{0.75};
    std::vector<double> sweep_y0{2.0};
    std::vector<long> sweep_omega{0};  // 0 = static comparator placeholder
    std::vector<std::uint64_t> seeds{1};
    LrConfig lr;
    GradBoundConfig grad_bound;
    TrafficConfig traffic;
    std::vector<std::string> figures;
    Json raw;  // canonical parsed config (for hashing / metadata)
};

// Hand-authored 20-node experiment topology (an approximation, not a
// reproduction of any measured network): a ring plus chords, average degree
// about 4.5, diameter 3.
inline PhysicalGraph fig2_graph() {
    static const std::vector<Edge> edges = {
        {0, 1},   {1, 2},   {2, 3},   {3, 4},   {4, 5},   {5, 6},   {6, 7},   {7, 8},
        {8, 9},   {9, 10},  {10, 11}, {11, 12}, {12, 13}, {13, 14}, {14, 15}, {15, 16},
        {16, 17}, {17, 18}, {18, 19}, {0, 19},  {0, 10},  {1, 8},   {2, 12},  {3, 15},
        {4, 11},  {5, 17},  {6, 13},  {7, 16},  {9, 18},  {14, 19}, {0, 5},   {2, 7},
        {4, 16},  {6, 19},  {8, 13},  {10, 15}, {12, 17}, {1, 14},  {3, 9},   {11, 18},
        {2, 18},  {5, 12},  {7, 11},  {9, 15},  {13, 16}};
    return make_graph(20, edges);
}

// Graph CSV: header "i,j,delay", one edge per row.
inline PhysicalGraph graph_from_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open graph csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty graph csv: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "i,j,delay") throw IoError(path + ":1: expected header 'i,j,delay'");
    std::vector<Edge> edges;
    std::vector<int> delays;
    int max_node = -1;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b, d;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, d))
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed row");
        try {
            const int i = std::stoi(a);
            const int j = std::stoi(b);
            const int delay = std::stoi(d);
            edges.push_back({i, j});
            delays.push_back(delay);
            max_node = std::max({max_node, i, j});
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed row");
        }
    }
    return make_graph(max_node + 1, edges, delays);
}

inline PhysicalGraph build_graph(const GraphConfig& gc) {
    switch (gc.type) {
        case GraphConfig::Type::ErdosRenyi: return erdos_renyi(gc.nodes, gc.p, gc.seed);
        case GraphConfig::Type::Edges: return make_graph(gc.nodes, gc.edges, gc.delays);
        case GraphConfig::Type::Csv: return graph_from_csv(gc.path);
        case GraphConfig::Type::Fig2: return fig2_graph();
    }
    throw ConfigError("graph: unknown type");
}

namespace detail {

template <typename T>
T get_or(const Json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError("config field '" + key + "': " + e.what());
    }
}

inline const Json& need(const Json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw ConfigError("config: missing field '" + ctx + key + "'");
    return j.at(key);
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& j);

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config file not found: " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

// Apply "key.path=value" overrides onto the raw JSON before validation.
// Values parse as JSON when possible; "a,b,c" becomes an array.
inline void apply_override(Json& j, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + spec + "' is not key=value");
    const std::string keypath = spec.substr(0, eq);
    const std::string value = spec.substr(eq + 1);
    Json parsed;
    auto parse_scalar = [](const std::string& s) -> Json {
        try {
            return Json::parse(s);
        } catch (const Json::exception&) {
            return Json(s);
        }
    };
    if (value.find(',') != std::string::npos) {
        parsed = Json::array();
        std::istringstream ss(value);
        std::string part;
        while (std::getline(ss, part, ',')) parsed.push_back(parse_scalar(part));
    } else {
        parsed = parse_scalar(value);
    }
    Json* cur = &j;
    std::istringstream ks(keypath);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ks, part, '.')) parts.push_back(part);
    if (parts.empty()) throw ConfigError("override '" + spec + "': empty key");
    for (size_t i = 0; i + 1 < parts.size(); ++i) cur = &(*cur)[parts[i]];
    (*cur)[parts.back()] = parsed;
}

inline ExperimentConfig parse_config_impl(const Json& j);

inline ExperimentConfig parse_config(const Json& j) {
    try {
        return parse_config_impl(j);
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

inline ExperimentConfig parse_config_impl(const Json& j) {
    ExperimentConfig cfg;
    cfg.raw = j;

    const std::string scen = detail::get_or<std::string>(j, "scenario", "synthetic");
    if (scen == "synthetic")
        cfg.scenario = Scenario::Synthetic;
    else if (scen == "traffic")
        cfg.scenario = Scenario::Traffic;
    else if (scen == "periodic_traffic")
        cfg.scenario = Scenario::PeriodicTraffic;
    else
        throw ConfigError("config: unknown scenario '" + scen + "'");

    for (const auto& p : detail::need(j, "protocols", ""))
        cfg.protocols.push_back(protocol_from_name(p.get<std::string>()));
    if (cfg.protocols.empty()) throw ConfigError("config: protocols must be non-empty");

    {
        const Json& g = detail::need(j, "graph", "");
        const std::string type = detail::get_or<std::string>(g, "type", "erdos_renyi");
        if (type == "erdos_renyi") {
            cfg.graph.type = GraphConfig::Type::ErdosRenyi;
            cfg.graph.nodes = detail::need(g, "nodes", "graph.").get<int>();
            cfg.graph.p = detail::get_or<double>(g, "p", 0.25);
            cfg.graph.seed = detail::get_or<std::uint64_t>(g, "seed", 0);
        } else if (type == "edges") {
            cfg.graph.type = GraphConfig::Type::Edges;
            cfg.graph.nodes = detail::need(g, "nodes", "graph.").get<int>();
            for (const auto& e : detail::need(g, "edges", "graph.")) {
                if (!e.is_array() || e.size() < 2 || e.size() > 3)
                    throw ConfigError("graph.edges entries must be [i,j] or [i,j,delay]");
                cfg.graph.edges.push_back({e[0].get<int>(), e[1].get<int>()});
                cfg.graph.delays.push_back(e.size() == 3 ? e[2].get<int>() : 1);
            }
        } else if (type == "csv") {
            cfg.graph.type = GraphConfig::Type::Csv;
            cfg.graph.path = detail::need(g, "path", "graph.").get<std::string>();
        } else if (type == "fig2") {
            cfg.graph.type = GraphConfig::Type::Fig2;
            cfg.graph.nodes = 20;
        } else {
            throw ConfigError("config: unknown graph type '" + type + "'");
        }
    }

    {
        const Json& w = detail::need(j, "weights", "");
        const std::string type = detail::get_or<std::string>(w, "type", "dirichlet");
        if (type == "dirichlet") {
            cfg.weights.type = WeightsConfig::Type::Dirichlet;
            cfg.weights.y1 = detail::get_or<double>(w, "y1", 10.0);
        } else if (type == "identity") {
            cfg.weights.type = WeightsConfig::Type::Identity;
        } else if (type == "uniform") {
            cfg.weights.type = WeightsConfig::Type::Uniform;
        } else if (type == "rows") {
            cfg.weights.type = WeightsConfig::Type::Rows;
            const auto& rows = detail::need(w, "matrix", "weights.");
            const int n = static_cast<int>(rows.size());
            cfg.weights.rows.resize(n, n);
            for (int r = 0; r < n; ++r) {
                if (static_cast<int>(rows[static_cast<size_t>(r)].size()) != n)
                    throw ConfigError("weights.matrix must be square");
                for (int c = 0; c < n; ++c)
                    cfg.weights.rows(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
            }
        } else {
            throw ConfigError("config: unknown weights type '" + type + "'");
        }
        cfg.weights.support_threshold = detail::get_or<double>(w, "support_threshold", 0.0);
        if (cfg.weights.support_threshold < 0.0 || cfg.weights.support_threshold >= 1.0)
            throw ConfigError("weights.support_threshold must be in [0,1)");
    }

    if (j.contains("loss")) {
        const Json& l = j.at("loss");
        cfg.loss_variant =
            loss_variant_from_name(detail::get_or<std::string>(l, "variant", "deltanet"));
        if (l.contains("gating")) {
            const auto& g = l.at("gating");
            cfg.gating.resize(static_cast<Eigen::Index>(g.size()));
            for (size_t i = 0; i < g.size(); ++i) cfg.gating(static_cast<Eigen::Index>(i)) = g[i].get<double>();
        }
        if (l.contains("feature_map")) {
            const Json& fm = l.at("feature_map");
            const std::string kind = detail::get_or<std::string>(fm, "kind", "identity");
            if (kind == "identity")
                cfg.feature_map.kind = FeatureMapConfig::Kind::Identity;
            else if (kind == "random_fourier")
                cfg.feature_map.kind = FeatureMapConfig::Kind::RandomFourier;
            else
                throw ConfigError("config: unknown feature map kind '" + kind + "'");
            cfg.feature_map.output_dim = detail::get_or<int>(fm, "output_dim", 0);
            cfg.feature_map.seed = detail::get_or<std::uint64_t>(fm, "seed", 0);
        }
    }

    if (j.contains("dims")) {
        cfg.d_k = detail::get_or<int>(j.at("dims"), "d_k", 2);
        cfg.d_v = detail::get_or<int>(j.at("dims"), "d_v", 2);
        if (cfg.d_k < 1 || cfg.d_v < 1) throw ConfigError("dims must be positive");
    }
    cfg.domain_bound = detail::get_or<double>(j, "domain_bound", 24.0);
    if (cfg.domain_bound <= 0.0) throw ConfigError("domain_bound must be positive");
    cfg.noise_var = detail::get_or<double>(j, "noise_var", 1.0);
    if (cfg.noise_var < 0.0) throw ConfigError("noise_var must be >= 0");

    const std::string drift = detail::get_or<std::string>(j, "drift", "none");
    if (drift == "none")
        cfg.drift = DriftMode::None;
    else if (drift == "sign_swap")
        cfg.drift = DriftMode::SignSwap;
    else
        throw ConfigError("config: unknown drift '" + drift + "'");

    const std::string cmp = detail::get_or<std::string>(j, "comparator", "static");
    if (cmp == "static")
        cfg.comparator = ComparatorConfig::Static;
    else if (cmp == "windowed")
        cfg.comparator = ComparatorConfig::Windowed;
    else
        throw ConfigError("config: unknown comparator '" + cmp + "'");

    const std::string nm = detail::get_or<std::string>(j, "nmse_mode", "per_step");
    if (nm == "per_step")
        cfg.nmse_mode = NmseMode::PerStep;
    else if (nm == "final")
        cfg.nmse_mode = NmseMode::Final;
    else
        throw ConfigError("config: unknown nmse_mode '" + nm + "'");

    const std::string mix = detail::get_or<std::string>(j, "mixing", "metropolis");
    if (mix == "metropolis")
        cfg.mixing = MixingConfig::Metropolis;
    else if (mix == "identity")
        cfg.mixing = MixingConfig::Identity;
    else
        throw ConfigError("config: unknown mixing '" + mix + "'");

    cfg.horizon_scaling = detail::get_or<bool>(j, "horizon_scaling", true);

    if (j.contains("sweeps")) {
        const Json& s = j.at("sweeps");
        if (s.contains("T")) cfg.sweep_T = s.at("T").get<std::vector<long>>();
        if (s.contains("rho")) cfg.sweep_rho = s.at("rho").get<std::vector<double>>();
        if (s.contains("y0")) cfg.sweep_y0 = s.at("y0").get<std::vector<double>>();
        if (s.contains("omega")) cfg.sweep_omega = s.at("omega").get<std::vector<long>>();
    }
    for (long T : cfg.sweep_T)
        if (T < 1) throw ConfigError("sweeps.T entries must be >= 1");
    for (double r : cfg.sweep_rho)
        if (r < 0.0 || r > 1.0) throw ConfigError("sweeps.rho entries must be in [0,1]");
    for (double y : cfg.sweep_y0)
        if (y < 0.0) throw ConfigError("sweeps.y0 entries must be >= 0");
    if (cfg.comparator == ComparatorConfig::Windowed) {
        for (long o : cfg.sweep_omega)
            if (o < 1) throw ConfigError("windowed comparator needs sweeps.omega >= 1");
    } else {
        if (cfg.sweep_omega != std::vector<long>{0})
            throw ConfigError("static comparator requires sweeps.omega == [0]");
    }

    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) throw ConfigError("config: seeds must be non-empty");

    if (j.contains("lr")) {
        const Json& l = j.at("lr");
        const std::string mode = detail::get_or<std::string>(l, "mode", "corollary");
        if (mode == "corollary")
            cfg.lr.mode = LrConfig::Mode::Corollary;
        else if (mode == "fixed")
            cfg.lr.mode = LrConfig::Mode::Fixed;
        else
            throw ConfigError("config: unknown lr mode '" + mode + "'");
        cfg.lr.ogd = detail::get_or<double>(l, "ogd", 0.0);
        cfg.lr.cdogd = detail::get_or<double>(l, "cdogd", 0.0);
        cfg.lr.togd = detail::get_or<double>(l, "togd", 0.0);
        if (cfg.lr.mode == LrConfig::Mode::Fixed) {
            auto uses = [&](Protocol p) {
                return std::find(cfg.protocols.begin(), cfg.protocols.end(), p) !=
                       cfg.protocols.end();
            };
            if (uses(Protocol::OGD) && cfg.lr.ogd <= 0.0)
                throw ConfigError("lr.ogd must be positive in fixed mode");
            if (uses(Protocol::CDOGD) && cfg.lr.cdogd <= 0.0)
                throw ConfigError("lr.cdogd must be positive in fixed mode");
            if ((uses(Protocol::TogdSteiner) || uses(Protocol::TogdStar)) && cfg.lr.togd <= 0.0)
                throw ConfigError("lr.togd must be positive in fixed mode");
        }
    }

    if (j.contains("grad_bound")) {
        const Json& g = j.at("grad_bound");
        const std::string mode = detail::get_or<std::string>(g, "mode", "stream_ball");
        if (mode == "stream_ball")
            cfg.grad_bound.mode = GradBoundConfig::Mode::StreamBall;
        else if (mode == "fixed")
            cfg.grad_bound.mode = GradBoundConfig::Mode::Fixed;
        else
            throw ConfigError("config: unknown grad_bound mode '" + mode + "'");
        cfg.grad_bound.value = detail::get_or<double>(g, "value", 0.0);
        if (cfg.grad_bound.mode == GradBoundConfig::Mode::Fixed && cfg.grad_bound.value <= 0.0)
            throw ConfigError("grad_bound.value must be positive in fixed mode");
    }

    if (j.contains("traffic")) {
        const Json& t = j.at("traffic");
        const std::string src = detail::get_or<std::string>(t, "source", "periodic");
        if (src == "periodic")
            cfg.traffic.source = TrafficConfig::Source::Periodic;
        else if (src == "csv")
            cfg.traffic.source = TrafficConfig::Source::Csv;
        else
            throw ConfigError("config: unknown traffic source '" + src + "'");
        cfg.traffic.aps = detail::get_or<int>(t, "aps", 16);
        cfg.traffic.days = detail::get_or<int>(t, "days", 50);
        cfg.traffic.seed = detail::get_or<std::uint64_t>(t, "seed", 99);
        cfg.traffic.path = detail::get_or<std::string>(t, "path", "");
        if (cfg.traffic.source == TrafficConfig::Source::Csv && cfg.traffic.path.empty())
            throw ConfigError("traffic.path required for csv source");
    }

    if (j.contains("figures"))
        cfg.figures = j.at("figures").get<std::vector<std::string>>();

    // cross-field checks
    if (cfg.scenario != Scenario::Synthetic) {
        if (cfg.sweep_rho.size() != 1)
            throw ConfigError("sweeps.rho is a synthetic-scenario axis");
        if (cfg.drift != DriftMode::None)
            throw ConfigError("drift is a synthetic-scenario option");
    }
    return cfg;
}

inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
    return fnv1a64(cfg.raw.dump());
}

}  // namespace ddam

#endif
