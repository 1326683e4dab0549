// Acceptance suite: ten end-to-end criteria, one pass/fail line each.
//
//   ddam_acceptance --criterion N   run one criterion
//   ddam_acceptance --all           run all ten
//
// Exit code 0 iff every selected criterion passes.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ddam/analytics.hpp"
#include "ddam/csv.hpp"
#include "ddam/datagen.hpp"
#include "ddam/harness.hpp"
#include "graph_helpers.hpp"

using namespace ddam;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Check {
    Outcome& o;
    void require(bool cond, const std::string& what) {
        if (!cond) {
            o.pass = false;
            if (!o.detail.empty()) o.detail += "; ";
            o.detail += "FAILED: " + what;
        }
    }
    void note(const std::string& what) {
        if (!o.detail.empty()) o.detail += "; ";
        o.detail += what;
    }
};

std::string config_path(const char* name) {
    return std::string(DDAM_CONFIG_DIR) + "/" + name;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x, int prec = 4) {
    std::ostringstream ss;
    ss.precision(prec);
    ss << x;
    return ss.str();
}

// Seed-mean of a row field grouped by a key.
template <typename Key, typename KeyFn, typename ValFn>
std::map<Key, double> group_mean(const std::vector<ReportRow>& rows, KeyFn key, ValFn val) {
    std::map<Key, std::pair<double, long>> acc;
    for (const auto& r : rows) {
        auto& slot = acc[key(r)];
        slot.first += val(r);
        slot.second += 1;
    }
    std::map<Key, double> out;
    for (auto& [k, v] : acc) out[k] = v.first / static_cast<double>(v.second);
    return out;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& x) {
        std::vector<size_t> order(x.size());
        for (size_t i = 0; i < x.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return x[i] < x[j]; });
        std::vector<double> rk(x.size());
        size_t i = 0;
        while (i < order.size()) {
            size_t j = i;
            while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
            const double avg = (static_cast<double>(i + j)) / 2.0 + 1.0;
            for (size_t k = i; k <= j; ++k) rk[order[k]] = avg;
            i = j + 1;
        }
        return rk;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double ma = static_cast<double>(a.size() + 1) / 2.0;
    double num = 0.0, da = 0.0, db = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        num += (ra[i] - ma) * (rb[i] - ma);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - ma) * (rb[i] - ma);
    }
    return num / std::sqrt(da * db);
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness: six variants, 50 random instances each, central
//    finite differences, relative error < 1e-6.
Outcome criterion1() {
    Outcome o;
    Check c{o};
    const auto t0 = std::chrono::steady_clock::now();
    const LossVariant variants[] = {
        LossVariant::LinearAttention, LossVariant::GatedLinearAttention, LossVariant::DeltaNet,
        LossVariant::SoftmaxNoNorm,   LossVariant::SoftmaxWithNorm,      LossVariant::GatedSoftmax,
    };
    const double h = 1e-5;
    double worst = 0.0;
    for (auto variant : variants) {
        LossSpec spec;
        spec.variant = variant;
        if (uses_gating(variant)) {
            spec.gating = Vec::Zero(3);
            spec.gating(0) = 1.0;
        }
        if (uses_feature_map(variant)) {
            spec.feature_map.kind = FeatureMapConfig::Kind::RandomFourier;
            spec.feature_map.seed = 7;
            spec.feature_map.output_dim = 4;
        }
        const int cols = uses_feature_map(variant) ? 4 : 3;
        Rng rng(42);
        for (int rep = 0; rep < 50; ++rep) {
            Mat X(3, cols);
            Vec k(3), v(3);
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < cols; ++j) X(i, j) = rng.normal();
                k(i) = rng.normal();
                v(i) = rng.normal();
            }
            const Mat g = eval_grad(spec, X, k, v);
            Mat fd(3, cols);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < cols; ++j) {
                    Mat Xp = X, Xm = X;
                    Xp(i, j) += h;
                    Xm(i, j) -= h;
                    fd(i, j) =
                        (eval_loss(spec, Xp, k, v) - eval_loss(spec, Xm, k, v)) / (2.0 * h);
                }
            worst = std::max(worst, (g - fd).norm() / std::max(1.0, g.norm()));
        }
    }
    c.require(worst < 1e-6, "relative gradient error " + fmt(worst) + " >= 1e-6");
    const double el = seconds_since(t0);
    c.require(el < 5.0, "runtime " + fmt(el) + "s >= 5s");
    c.note("worst relative FD error " + fmt(worst) + ", " + fmt(el, 2) + "s");
    return o;
}

// ---------------------------------------------------------------------------
// 2. Protocol reduction: W = identity makes OGD, C-DOGD (A = I) and
//    DDAM-TOGD trajectories bitwise identical over T = 1000, N = 5.
Outcome criterion2() {
    Outcome o;
    Check c{o};
    const auto t0 = std::chrono::steady_clock::now();
    const int N = 5;
    const long T = 1000;
    const double B = 30.0;
    const double eta = 0.05;
    const auto g = erdos_renyi(N, 0.6, 3);
    const auto W = identity_weights(N);
    std::vector<LossSpec> specs(N);
    SyntheticConfig sc;
    sc.n_agents = N;
    sc.d_k = 3;
    sc.d_v = 3;
    sc.seed = 17;
    const auto streams = gen_stream(sc, gen_ground_truth(sc), T);

    std::vector<AgentState> init;
    for (int n = 0; n < N; ++n) init.push_back({n, Mat::Zero(3, 3), eta, {}});
    std::vector<AgentState> ogd = init, cd = init;
    std::vector<RoutingTree> trees;
    for (int n = 0; n < N; ++n) trees.push_back(sumdelay_tree(g, n, {}));
    TogdNetwork togd(init, trees, W, specs, B);
    const Mat A = Mat::Identity(N, N);

    bool identical = true;
    for (TimeStep t = 1; t <= T && identical; ++t) {
        for (auto& s : ogd) ogd_step(s, W, specs, streams, t, B);
        cdogd_step(cd, A, specs, streams, t, B);
        togd.step(streams, t);
        for (int n = 0; n < N; ++n) {
            const Mat& a = ogd[static_cast<size_t>(n)].X;
            const Mat& b = cd[static_cast<size_t>(n)].X;
            const Mat& d = togd.agents()[static_cast<size_t>(n)].X;
            if (std::memcmp(a.data(), b.data(), sizeof(double) * 9) != 0 ||
                std::memcmp(a.data(), d.data(), sizeof(double) * 9) != 0)
                identical = false;
        }
    }
    c.require(identical, "trajectories diverged bitwise");
    const double el = seconds_since(t0);
    c.require(el < 5.0, "runtime " + fmt(el) + "s >= 5s");
    c.note("3 protocols bitwise identical over T=1000, N=5, " + fmt(el, 2) + "s");
    return o;
}

// ---------------------------------------------------------------------------
// 3. Sublinearity trends on the synthetic scenario (fig3 config).
std::vector<ReportRow> fig3_rows() {
    static std::vector<ReportRow> cache;
    if (cache.empty()) cache = run_experiment(load_config(config_path("synthetic_fig3.json")));
    return cache;
}

Outcome criterion3() {
    Outcome o;
    Check c{o};
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = fig3_rows();
    using Key = std::pair<std::string, long>;
    const auto mean = group_mean<Key>(
        rows, [](const ReportRow& r) { return Key{protocol_name(r.protocol), r.horizon}; },
        [](const ReportRow& r) { return r.avg_regret; });
    const std::vector<long> Ts{250, 500, 1000, 1750, 2500};
    for (const std::string p : {"ogd", "togd_steiner", "togd_star"}) {
        const double ratio = mean.at({p, 2500}) / mean.at({p, 250});
        c.require(ratio <= 0.5, p + " avg regret ratio 2500/250 = " + fmt(ratio) + " > 0.5");
        bool mono = true;
        for (size_t i = 1; i < Ts.size(); ++i)
            mono &= mean.at({p, Ts[i]}) < mean.at({p, Ts[i - 1]});
        c.require(mono, p + " seed-mean avg regret not monotone decreasing in T");
        c.note(p + " decay " + fmt(ratio, 3));
    }
    const double plateau = mean.at({"cdogd", 2500}) / mean.at({"cdogd", 500});
    c.require(plateau >= 0.9, "cdogd plateau 2500/500 = " + fmt(plateau) + " < 0.9");
    c.note("cdogd plateau " + fmt(plateau, 3));
    const double el = seconds_since(t0);
    c.require(el < 300.0, "runtime " + fmt(el) + "s >= 5min");
    c.note(fmt(el, 2) + "s");
    return o;
}

// ---------------------------------------------------------------------------
// 4. Bound validity: every DDAM-TOGD run of criterion 3 stays below the
//    delayed-feedback regret bound evaluated with its true constants and
//    measured path length.
Outcome criterion4() {
    Outcome o;
    Check c{o};
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = fig3_rows();
    long checked = 0, violations = 0;
    double tightest = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        if (r.protocol != Protocol::TogdSteiner && r.protocol != Protocol::TogdStar) continue;
        ++checked;
        c.require(std::isfinite(r.bound) && r.bound > 0.0, "bound not finite/positive");
        if (r.dynamic_regret > r.bound) ++violations;
        tightest = std::min(tightest, r.bound / std::max(r.dynamic_regret, 1e-300));
    }
    c.require(checked == 50, "expected 50 togd rows, saw " + std::to_string(checked));
    c.require(violations == 0, std::to_string(violations) + " bound violations");
    c.note(std::to_string(checked) + " togd runs, 0 violations, min bound/regret " +
           fmt(tightest, 3));
    const double el = seconds_since(t0);
    c.require(el < 300.0, "runtime " + fmt(el) + "s >= 5min");
    c.note(fmt(el, 2) + "s");
    return o;
}

// ---------------------------------------------------------------------------
// 5. Heterogeneity response: rho sweep and y0 sweep trends at T = 2500.
Outcome criterion5() {
    Outcome o;
    Check c{o};
    const auto t0 = std::chrono::steady_clock::now();
    {
        const auto rows = run_experiment(load_config(config_path("rho_sweep_fig4.json")));
        using Key = std::pair<std::string, double>;
        const auto mean = group_mean<Key>(
            rows, [](const ReportRow& r) { return Key{protocol_name(r.protocol), r.rho}; },
            [](const ReportRow& r) { return r.static_regret; });
        const std::vector<double> rhos{0.1, 0.3, 0.5, 0.7, 0.9};
        bool mono = true;
        for (size_t i = 1; i < rhos.size(); ++i)
            mono &= mean.at({"cdogd", rhos[i]}) <= mean.at({"cdogd", rhos[i - 1]}) + 1e-9;
        c.require(mono, "cdogd regret not non-increasing in rho");
        const double ratio = mean.at({"cdogd", 0.1}) / mean.at({"togd_star", 0.1});
        c.require(ratio >= 2.0, "cdogd/togd_star at rho=0.1 = " + fmt(ratio) + " < 2");
        c.note("rho sweep: cdogd monotone, cdogd/togd* at rho=0.1 = " + fmt(ratio, 3));
    }
    {
        const auto rows = run_experiment(load_config(config_path("y0_sweep_fig5.json")));
        using Key = std::pair<std::string, double>;
        const auto mean = group_mean<Key>(
            rows, [](const ReportRow& r) { return Key{protocol_name(r.protocol), r.y0}; },
            [](const ReportRow& r) { return r.static_regret; });
        auto variation = [&](const std::string& p) {
            double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
            for (double y0 : {0.5, 2.0, 4.0, 6.0, 8.0, 10.0}) {
                lo = std::min(lo, mean.at({p, y0}));
                hi = std::max(hi, mean.at({p, y0}));
            }
            return (hi - lo) / lo;
        };
        const double v_togd = variation("togd_star");
        const double v_cdogd = variation("cdogd");
        c.require(v_togd < 0.25, "togd_star y0 variation " + fmt(v_togd) + " >= 25%");
        c.require(v_cdogd > 1.0, "cdogd y0 variation " + fmt(v_cdogd) + " <= 100%");
        c.note("y0 sweep: togd* variation " + fmt(v_togd * 100, 3) + "%, cdogd variation " +
               fmt(v_cdogd * 100, 3) + "%");
    }
    const double el = seconds_since(t0);
    c.require(el < 600.0, "runtime " + fmt(el) + "s >= 10min");
    c.note(fmt(el, 2) + "s");
    return o;
}

// ---------------------------------------------------------------------------
// 6. Tree-optimizer exactness against brute-force enumeration.
Outcome criterion6() {
    Outcome o;
    Check c{o};
    const auto t0 = std::chrono::steady_clock::now();
    int exact = 0;
    for (std::uint64_t inst = 0; inst < 100; ++inst) {
        const int n = 5 + static_cast<int>(inst % 4);  // 5..8 nodes
        const auto g = ddam_tests::random_connected_graph(n, 0.3, 500 + inst, 16, 1);
        Rng rng = Rng::keyed(inst, {99});
        const int n_terms = 2 + static_cast<int>(rng.next_u64() % 3);  // 2..4
        std::vector<AgentId> terminals;
        while (static_cast<int>(terminals.size()) < n_terms) {
            const AgentId t = 1 + static_cast<int>(rng.next_u64() %
                                                   static_cast<std::uint64_t>(n - 1));
            if (std::find(terminals.begin(), terminals.end(), t) == terminals.end())
                terminals.push_back(t);
        }
        std::sort(terminals.begin(), terminals.end());
        const auto star = sumdelay_tree(g, 0, terminals);
        const auto steiner = steiner_tree(g, 0, terminals);
        const auto best = ddam_tests::brute_force_trees(g, 0, terminals);
        if (tree_dist(star, terminals) == best.dist) ++exact;
        c.require(tree_dist(star, terminals) == best.dist,
                  "instance " + std::to_string(inst) + ": Dist " +
                      std::to_string(tree_dist(star, terminals)) + " != optimum " +
                      std::to_string(best.dist));
        const auto s_star = delay_summary(star, terminals);
        const auto s_st = delay_summary(steiner, terminals);
        c.require(s_star.tau_sum <= s_st.tau_sum,
                  "instance " + std::to_string(inst) + ": tau_sum(star) > tau_sum(steiner)");
    }
    const double el = seconds_since(t0);
    c.require(el < 120.0, "runtime " + fmt(el) + "s >= 2min");
    c.note(std::to_string(exact) + "/100 instances exact, tau_sum dominance on all, " +
           fmt(el, 2) + "s");
    return o;
}

// ---------------------------------------------------------------------------
// 7. Path-length tracking on periodic traffic with windowed comparators.
Outcome criterion7() {
    Outcome o;
    Check c{o};
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = run_experiment(load_config(config_path("traffic_fig7.json")));
    std::vector<const ReportRow*> om1, om168;
    for (const auto& r : rows) (r.omega == 1 ? om1 : om168).push_back(&r);
    auto by_T = [](const ReportRow* a, const ReportRow* b) { return a->horizon < b->horizon; };
    std::sort(om1.begin(), om1.end(), by_T);
    std::sort(om168.begin(), om168.end(), by_T);
    c.require(om1.size() >= 10, "need >= 10 horizon points, got " + std::to_string(om1.size()));

    std::vector<double> dyn, spl;
    for (const auto* r : om1) {
        dyn.push_back(r->dynamic_regret);
        spl.push_back(scaled_pl(*r));
    }
    const double rho_s = spearman(dyn, spl);
    c.require(rho_s >= 0.9, "Spearman " + fmt(rho_s) + " < 0.9");
    const double a1 = avg_dynamic_regret(*om1.back());
    const double a168 = avg_dynamic_regret(*om168.back());
    c.require(om1.back()->horizon == 1200 && om168.back()->horizon == 1200,
              "final horizon is not 1200");
    c.require(a168 < a1, "omega=168 avg dynamic regret " + fmt(a168) +
                             " not below omega=1's " + fmt(a1));
    c.note("Spearman " + fmt(rho_s, 3) + " over " + std::to_string(om1.size()) +
           " points; final avg D-Reg omega168 " + fmt(a168, 4) + " < omega1 " + fmt(a1, 4));
    const double el = seconds_since(t0);
    c.require(el < 600.0, "runtime " + fmt(el) + "s >= 10min");
    c.note(fmt(el, 2) + "s");
    return o;
}

// ---------------------------------------------------------------------------
// 8. Negative static regret under a sign-swap drift.
Outcome criterion8() {
    Outcome o;
    Check c{o};
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = run_experiment(load_config(config_path("drift_negative.json")));
    c.require(rows.size() == 5, "expected 5 seeds");
    int negative = 0;
    double most_negative = 0.0;
    for (const auto& r : rows) {
        if (r.static_regret < 0.0) ++negative;
        most_negative = std::min(most_negative, r.static_regret);
    }
    c.require(negative >= 1, "no seed produced negative static regret");
    c.note(std::to_string(negative) + "/5 seeds negative, most negative " +
           fmt(most_negative, 4));
    const double el = seconds_since(t0);
    c.require(el < 120.0, "runtime " + fmt(el) + "s >= 2min");
    c.note(fmt(el, 2) + "s");
    return o;
}

// ---------------------------------------------------------------------------
// 9. Oracle equivalence: hindsight optimum vs normal equations for DeltaNet
//    on instances whose unconstrained optimum is feasible.
Outcome criterion9() {
    Outcome o;
    Check c{o};
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    int checked = 0;
    for (std::uint64_t seed = 0; checked < 20 && seed < 200; ++seed) {
        SyntheticConfig sc;
        sc.n_agents = 3;
        sc.d_k = 3;
        sc.d_v = 3;
        sc.seed = 1000 + seed;
        sc.rho = 0.3;
        sc.noise_var = 0.5;
        auto gt = gen_ground_truth(sc);
        const double B = 200.0;  // generous ball: unconstrained optimum interior
        const TimeStep T = 40;
        const auto streams = gen_stream(sc, gt, T);
        const auto W = uniform_weights(3);
        std::vector<LossSpec> specs(3);

        // independent normal-equations oracle
        Mat A = Mat::Zero(3, 3), C = Mat::Zero(3, 3);
        for (TimeStep t = 1; t <= T; ++t)
            for (AgentId m = 0; m < 3; ++m) {
                const auto& kv = streams.at(m, t);
                A += W.W(0, m) * (kv.key * kv.key.transpose());
                C += W.W(0, m) * (kv.value * kv.key.transpose());
            }
        const Mat U_ne = A.ldlt().solve(C.transpose()).transpose();
        if (!is_feasible(U_ne, B)) continue;  // only feasible-optimum instances count
        ++checked;
        const Mat U = hindsight_optimum(0, streams, W, specs, B, 1, T);
        worst = std::max(worst, (U - U_ne).norm());
    }
    c.require(checked == 20, "only " + std::to_string(checked) + " feasible instances");
    c.require(worst < 1e-6, "max deviation " + fmt(worst) + " >= 1e-6");
    c.note("20 instances, max deviation " + fmt(worst));
    const double el = seconds_since(t0);
    c.require(el < 10.0, "runtime " + fmt(el) + "s >= 10s");
    c.note(fmt(el, 2) + "s");
    return o;
}

// ---------------------------------------------------------------------------
// 10. Determinism: rerunning a config produces byte-identical CSV outputs.
Outcome criterion10() {
    Outcome o;
    Check c{o};
    const auto dir = fs::temp_directory_path() / "ddam_acceptance_c10";
    fs::create_directories(dir);
    for (const char* name : {"smoke.json", "drift_negative.json"}) {
        const auto cfg = load_config(config_path(name));
        const auto rows1 = run_experiment(cfg);
        const auto rows2 = run_experiment(cfg);
        const auto p1 = (dir / (std::string(name) + ".1.csv")).string();
        const auto p2 = (dir / (std::string(name) + ".2.csv")).string();
        write_reports_csv(rows1, p1, true);
        write_reports_csv(rows2, p2, true);
        c.require(read_file(p1) == read_file(p2),
                  std::string(name) + ": reports.csv differs between reruns");
        if (!cfg.figures.empty()) {
            const auto f1 = (dir / (std::string(name) + ".fig1.csv")).string();
            const auto f2 = (dir / (std::string(name) + ".fig2.csv")).string();
            emit_plotdata(rows1, figure_from_name(cfg.figures[0]), f1, true);
            emit_plotdata(rows2, figure_from_name(cfg.figures[0]), f2, true);
            c.require(read_file(f1) == read_file(f2),
                      std::string(name) + ": figure csv differs between reruns");
        }
    }
    c.note("reports and figure csvs byte-identical across reruns");
    return o;
}

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> fn;
};

const std::vector<Criterion>& all_criteria() {
    static const std::vector<Criterion> cs = {
        {1, "gradient correctness (finite differences)", criterion1},
        {2, "protocol reduction (bitwise identity)", criterion2},
        {3, "sublinearity trends (regret vs T)", criterion3},
        {4, "bound validity (delayed-feedback theorem)", criterion4},
        {5, "heterogeneity response (rho and y0 sweeps)", criterion5},
        {6, "tree-optimizer exactness", criterion6},
        {7, "path-length tracking (traffic)", criterion7},
        {8, "negative static regret (drift)", criterion8},
        {9, "oracle equivalence (hindsight vs normal equations)", criterion9},
        {10, "determinism (byte-identical reruns)", criterion10},
    };
    return cs;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--criterion" && i + 1 < argc) only = std::atoi(argv[++i]);
        else if (std::string(argv[i]) == "--all") only = 0;
        else {
            std::cerr << "usage: ddam_acceptance [--criterion N | --all]\n";
            return 2;
        }
    }
    bool all_pass = true;
    for (const auto& cr : all_criteria()) {
        if (only != 0 && cr.id != only) continue;
        Outcome o;
        try {
            o = cr.fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        all_pass &= o.pass;
        std::cout << "criterion " << cr.id << " [" << (o.pass ? "PASS" : "FAIL") << "] "
                  << cr.name << " -- " << o.detail << "\n";
    }
    return all_pass ? 0 : 1;
}
