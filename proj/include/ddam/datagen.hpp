#ifndef DDAM_DATAGEN_HPP
#define DDAM_DATAGEN_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "ddam/am_core.hpp"
#include "ddam/common.hpp"
#include "ddam/protocols.hpp"
#include "ddam/rng.hpp"
#include "ddam/topology.hpp"

namespace ddam {

// Synthetic model: keys uniform on [-1,1]^{d_k} and
//   v_{n,t} = ((1-rho) M_n + rho M_com) k_{n,t} + noise,
// with M_com entries chi-squared(2), M_n entries N(mu_n, sigma2_n),
// mu_n ~ U[-5,5], sigma2_n ~ U[0,50]. All draws are keyed off the seed, so
// streams are prefix-stable in T and independent of rho.
enum class DriftKind { None, SignSwapHalf };

struct SyntheticConfig {
    int n_agents = 1;
    int d_k = 2;
    int d_v = 2;
    double rho = 0.75;
    double noise_var = 1.0;
    std::uint64_t seed = 0;
    double dirichlet_y0 = 2.0;
    double dirichlet_y1 = 10.0;
    DriftKind drift = DriftKind::None;
};

struct GroundTruth {
    Mat M_com;
    std::vector<Mat> M_n;
    std::vector<double> mu;
    std::vector<double> sigma2;
};

namespace detail {
inline constexpr std::uint64_t kGtDomain = 0x6774;       // "gt"
inline constexpr std::uint64_t kStreamDomain = 0x7374;   // "st"
inline constexpr std::uint64_t kWeightsDomain = 0x7765;  // "we"
}  // namespace detail

inline GroundTruth gen_ground_truth(const SyntheticConfig& cfg) {
    if (cfg.n_agents < 1 || cfg.d_k < 1 || cfg.d_v < 1)
        throw ConfigError("synthetic: bad dimensions");
    if (cfg.rho < 0.0 || cfg.rho > 1.0) throw ConfigError("synthetic: rho must be in [0,1]");
    if (cfg.noise_var < 0.0) throw ConfigError("synthetic: noise_var must be >= 0");
    GroundTruth gt;
    Rng rng = Rng::keyed(cfg.seed, {detail::kGtDomain});
    gt.M_com.resize(cfg.d_v, cfg.d_k);
    for (int i = 0; i < cfg.d_v; ++i)
        for (int j = 0; j < cfg.d_k; ++j) gt.M_com(i, j) = rng.chi2_2();
    gt.M_n.reserve(static_cast<size_t>(cfg.n_agents));
    for (int n = 0; n < cfg.n_agents; ++n) {
        Rng r = Rng::keyed(cfg.seed, {detail::kGtDomain, static_cast<std::uint64_t>(n) + 1});
        const double mu = r.uniform(-5.0, 5.0);
        const double s2 = r.uniform(0.0, 50.0);
        gt.mu.push_back(mu);
        gt.sigma2.push_back(s2);
        Mat M(cfg.d_v, cfg.d_k);
        const double sd = std::sqrt(s2);
        for (int i = 0; i < cfg.d_v; ++i)
            for (int j = 0; j < cfg.d_k; ++j) M(i, j) = mu + sd * r.normal();
        gt.M_n.push_back(std::move(M));
    }
    return gt;
}

inline StreamSet gen_stream(const SyntheticConfig& cfg, const GroundTruth& gt, TimeStep T) {
    if (T < 1) throw ConfigError("synthetic: T must be >= 1");
    const double noise_sd = std::sqrt(cfg.noise_var);
    const TimeStep swap_after = cfg.drift == DriftKind::SignSwapHalf ? T / 2 : T + 1;
    std::vector<std::vector<KeyValuePair>> data(static_cast<size_t>(cfg.n_agents));
    for (int n = 0; n < cfg.n_agents; ++n) {
        const Mat M_mix = (1.0 - cfg.rho) * gt.M_n[static_cast<size_t>(n)] + cfg.rho * gt.M_com;
        auto& seq = data[static_cast<size_t>(n)];
        seq.reserve(static_cast<size_t>(T));
        for (TimeStep t = 1; t <= T; ++t) {
            Rng r = Rng::keyed(cfg.seed, {detail::kStreamDomain, static_cast<std::uint64_t>(n),
                                          static_cast<std::uint64_t>(t)});
            KeyValuePair kv;
            kv.agent = n;
            kv.time = t;
            kv.key.resize(cfg.d_k);
            for (int j = 0; j < cfg.d_k; ++j) kv.key(j) = r.uniform(-1.0, 1.0);
            Vec noise(cfg.d_v);
            for (int i = 0; i < cfg.d_v; ++i) noise(i) = noise_sd * r.normal();
            const double sign = (t > swap_after) ? -1.0 : 1.0;
            kv.value = sign * (M_mix * kv.key) + noise;
            seq.push_back(std::move(kv));
        }
    }
    return StreamSet(std::move(data));
}

// Row n ~ Dirichlet(y0, ..., y1, ..., y0) with y1 on the diagonal, realized
// by normalizing independent Gamma(y_i, 1) draws.
inline Mat gen_weights_matrix(const SyntheticConfig& cfg) {
    if (cfg.dirichlet_y1 < cfg.dirichlet_y0 || cfg.dirichlet_y0 < 0.0)
        throw ConfigError("dirichlet: need y1 >= y0 >= 0");
    if (cfg.dirichlet_y0 == 0.0 && cfg.dirichlet_y1 == 0.0)
        throw ConfigError("dirichlet: y0 and y1 cannot both be zero");
    const int N = cfg.n_agents;
    Mat W(N, N);
    for (int n = 0; n < N; ++n) {
        Rng r = Rng::keyed(cfg.seed, {detail::kWeightsDomain, static_cast<std::uint64_t>(n)});
        double sum = 0.0;
        for (int m = 0; m < N; ++m) {
            const double shape = (m == n) ? cfg.dirichlet_y1 : cfg.dirichlet_y0;
            W(n, m) = r.gamma(shape);
            sum += W(n, m);
        }
        if (sum <= 0.0) throw ConfigError("dirichlet: row " + std::to_string(n) + " has zero mass");
        W.row(n) /= sum;
    }
    return W;
}

inline LogicalWeights gen_weights(const SyntheticConfig& cfg) {
    return validate_weights(gen_weights_matrix(cfg));
}

}  // namespace ddam

#endif
