#ifndef DDAM_AM_CORE_HPP
#define DDAM_AM_CORE_HPP

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "ddam/common.hpp"
#include "ddam/rng.hpp"

namespace ddam {

// Table of memory-retrieval cost functions f(X) = l(X,k,v) + R(X).
//
//   LinearAttention       l = -<Xk, v>           R = 0
//   GatedLinearAttention  l = -<Xk, v>           R = 1/2 ||diag(sqrt(1-psi)) X||_F^2
//   DeltaNet              l = 1/2 ||Xk - v||^2   R = 0
//   SoftmaxNoNorm         l = -<X phi(k), v>     R = 0
//   SoftmaxWithNorm       l = -<X phi(k), v>     R = 1/2 ||X||_F^2
//   GatedSoftmax          l = -<X phi(k), v>     R = 1/2 ||diag(sqrt(1-psi)) X||_F^2
enum class LossVariant {
    LinearAttention,
    GatedLinearAttention,
    DeltaNet,
    SoftmaxNoNorm,
    SoftmaxWithNorm,
    GatedSoftmax,
};

inline bool uses_feature_map(LossVariant v) {
    return v == LossVariant::SoftmaxNoNorm || v == LossVariant::SoftmaxWithNorm ||
           v == LossVariant::GatedSoftmax;
}

inline bool uses_gating(LossVariant v) {
    return v == LossVariant::GatedLinearAttention || v == LossVariant::GatedSoftmax;
}

inline std::string loss_variant_name(LossVariant v) {
    switch (v) {
        case LossVariant::LinearAttention: return "linear_attention";
        case LossVariant::GatedLinearAttention: return "gated_linear_attention";
        case LossVariant::DeltaNet: return "deltanet";
        case LossVariant::SoftmaxNoNorm: return "softmax_no_norm";
        case LossVariant::SoftmaxWithNorm: return "softmax_with_norm";
        case LossVariant::GatedSoftmax: return "gated_softmax";
    }
    return "?";
}

inline LossVariant loss_variant_from_name(const std::string& s) {
    if (s == "linear_attention") return LossVariant::LinearAttention;
    if (s == "gated_linear_attention") return LossVariant::GatedLinearAttention;
    if (s == "deltanet") return LossVariant::DeltaNet;
    if (s == "softmax_no_norm") return LossVariant::SoftmaxNoNorm;
    if (s == "softmax_with_norm") return LossVariant::SoftmaxWithNorm;
    if (s == "gated_softmax") return LossVariant::GatedSoftmax;
    throw ConfigError("unknown loss variant: " + s);
}

struct FeatureMapConfig {
    enum class Kind { Identity, RandomFourier };
    Kind kind = Kind::Identity;
    int output_dim = 0;  // d_k'; ignored for Identity, must be even for RandomFourier
    std::uint64_t seed = 0;
};

// phi(k). Identity passes k through. RandomFourier draws Omega (D/2 x d_k)
// standard normal once from the config seed and returns
// [cos(Omega k); sin(Omega k)] / sqrt(D/2), so ||phi(k)|| <= sqrt(2).
inline Vec apply_feature_map(const FeatureMapConfig& cfg, const Vec& k) {
    require_finite(k, "feature map input");
    if (cfg.kind == FeatureMapConfig::Kind::Identity) return k;
    const int D = cfg.output_dim;
    if (D < 2 || D % 2 != 0)
        throw ConfigError("random fourier feature map needs even output_dim >= 2");
    const int half = D / 2;
    Rng rng = Rng::keyed(cfg.seed, {fnv1a64("feature_map")});
    Mat omega(half, k.size());
    for (int i = 0; i < half; ++i)
        for (int j = 0; j < k.size(); ++j) omega(i, j) = rng.normal();
    const Vec z = omega * k;
    Vec out(D);
    const double scale = 1.0 / std::sqrt(static_cast<double>(half));
    out.head(half) = z.array().cos() * scale;
    out.tail(half) = z.array().sin() * scale;
    return out;
}

struct KeyValuePair {
    Vec key;
    Vec value;
    AgentId agent = 0;
    TimeStep time = 1;  // 1-based
};

struct LossSpec {
    LossVariant variant = LossVariant::DeltaNet;
    Vec gating;                  // psi in {0,1}^{d_v}, gated variants only
    FeatureMapConfig feature_map;  // softmax variants only
    double grad_bound = 0.0;     // G_n (Assumption 3); 0 means "estimate from data"
};

namespace detail {

inline void check_spec(const LossSpec& spec, const Mat& X, const Vec& phi, const Vec& v) {
    if (X.rows() != v.size())
        throw ConfigError("loss: X rows (" + std::to_string(X.rows()) +
                          ") != value length (" + std::to_string(v.size()) + ")");
    if (X.cols() != phi.size())
        throw ConfigError("loss: X cols (" + std::to_string(X.cols()) +
                          ") != key/feature length (" + std::to_string(phi.size()) + ")");
    if (uses_gating(spec.variant)) {
        if (spec.gating.size() != X.rows())
            throw ConfigError("loss: gating vector missing or of wrong length for " +
                              loss_variant_name(spec.variant));
        for (int i = 0; i < spec.gating.size(); ++i) {
            const double g = spec.gating(i);
            if (g != 0.0 && g != 1.0) throw ConfigError("loss: gating entries must be 0 or 1");
        }
    }
}

inline Vec spec_key(const LossSpec& spec, const Vec& k) {
    if (!uses_feature_map(spec.variant)) return k;
    return apply_feature_map(spec.feature_map, k);
}

}  // namespace detail

inline double eval_loss(const LossSpec& spec, const Mat& X, const Vec& k, const Vec& v) {
    require_finite(X, "loss: X");
    const Vec phi = detail::spec_key(spec, k);
    detail::check_spec(spec, X, phi, v);
    const Vec pred = X * phi;
    double ell;
    if (spec.variant == LossVariant::DeltaNet)
        ell = 0.5 * (pred - v).squaredNorm();
    else
        ell = -pred.dot(v);
    double reg = 0.0;
    if (uses_gating(spec.variant)) {
        for (int i = 0; i < X.rows(); ++i)
            reg += 0.5 * (1.0 - spec.gating(i)) * X.row(i).squaredNorm();
    } else if (spec.variant == LossVariant::SoftmaxWithNorm) {
        reg = 0.5 * X.squaredNorm();
    }
    return ell + reg;
}

inline double eval_loss(const LossSpec& spec, const Mat& X, const KeyValuePair& kv) {
    return eval_loss(spec, X, kv.key, kv.value);
}

inline Mat eval_grad(const LossSpec& spec, const Mat& X, const Vec& k, const Vec& v) {
    require_finite(X, "grad: X");
    const Vec phi = detail::spec_key(spec, k);
    detail::check_spec(spec, X, phi, v);
    Mat g;
    if (spec.variant == LossVariant::DeltaNet)
        g = (X * phi - v) * phi.transpose();
    else
        g = -v * phi.transpose();
    if (uses_gating(spec.variant)) {
        for (int i = 0; i < X.rows(); ++i)
            g.row(i) += (1.0 - spec.gating(i)) * X.row(i);
    } else if (spec.variant == LossVariant::SoftmaxWithNorm) {
        g += X;
    }
    return g;
}

inline Mat eval_grad(const LossSpec& spec, const Mat& X, const KeyValuePair& kv) {
    return eval_grad(spec, X, kv.key, kv.value);
}

// Projection onto the design domain: the Frobenius ball of radius B/2 around
// the origin (diameter B, contains the origin). Feasible inputs are returned
// unchanged, so the operation is exactly idempotent.
inline Mat project(const Mat& X, double B) {
    if (B <= 0.0) throw ConfigError("project: B must be positive");
    require_finite(X, "project");
    const double radius = 0.5 * B;
    const double r2 = radius * radius;
    if (X.squaredNorm() <= r2) return X;
    Mat Y = X * (radius / X.norm());
    for (int i = 0; i < 32 && Y.squaredNorm() > r2; ++i) Y *= radius / Y.norm();
    return Y;
}

inline bool is_feasible(const Mat& X, double B) {
    return X.squaredNorm() <= 0.25 * B * B;
}

// Single-step weighted cost sum_{m in W_n} w_{n,m} f_m(X) on one batch of
// per-agent pairs (Eq. form of the cumulative cost's inner sum).
inline double weighted_cost(AgentId n, const Mat& X,
                            const std::map<AgentId, KeyValuePair>& batch, const Mat& W,
                            const std::vector<LossSpec>& specs) {
    if (n < 0 || n >= W.rows()) throw ConfigError("weighted_cost: bad agent id");
    double acc = 0.0;
    for (AgentId m = 0; m < W.cols(); ++m) {
        const double w = W(n, m);
        if (w <= 0.0) continue;
        auto it = batch.find(m);
        if (it == batch.end())
            throw DataError("weighted_cost: missing batch entry for agent " + std::to_string(m));
        acc += w * eval_loss(specs[static_cast<size_t>(m)], X, it->second);
    }
    return acc;
}

// A data-independent-of-X bound on ||grad f_{m,t}(X)|| over the feasible ball,
// given one observed (k, v): valid for every feasible X, so the max over a
// stream is a sound per-agent G_m for that realization.
inline double grad_bound_on_ball(const LossSpec& spec, double B, const Vec& k, const Vec& v) {
    const Vec phi = detail::spec_key(spec, k);
    const double radius = 0.5 * B;
    const double kn = phi.norm();
    const double vn = v.norm();
    double bound;
    if (spec.variant == LossVariant::DeltaNet)
        bound = (radius * kn + vn) * kn;
    else
        bound = vn * kn;
    if (uses_gating(spec.variant)) {
        double gmax = 0.0;
        for (int i = 0; i < spec.gating.size(); ++i) gmax = std::max(gmax, 1.0 - spec.gating(i));
        bound += gmax * radius;
    } else if (spec.variant == LossVariant::SoftmaxWithNorm) {
        bound += radius;
    }
    return bound;
}

}  // namespace ddam

#endif
