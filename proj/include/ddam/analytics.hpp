#ifndef DDAM_ANALYTICS_HPP
#define DDAM_ANALYTICS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "ddam/am_core.hpp"
#include "ddam/common.hpp"
#include "ddam/protocols.hpp"

namespace ddam {

// Iterates X_{n,t} for t = 1..T (pre-update parameters at each step).
struct Trajectory {
    std::vector<std::vector<Mat>> X;  // [agent][t-1]

    int agents() const { return static_cast<int>(X.size()); }
    TimeStep horizon() const { return X.empty() ? 0 : static_cast<TimeStep>(X[0].size()); }
    const Mat& at(AgentId n, TimeStep t) const { return X[static_cast<size_t>(n)][static_cast<size_t>(t - 1)]; }
};

enum class ComparatorMode { StaticHindsight, Windowed };

struct ComparatorSequence {
    ComparatorMode mode = ComparatorMode::StaticHindsight;
    long omega = 0;  // window length, Windowed only
    std::vector<std::vector<Mat>> U;  // [agent][t-1], t = 1..T

    int agents() const { return static_cast<int>(U.size()); }
    TimeStep horizon() const { return U.empty() ? 0 : static_cast<TimeStep>(U[0].size()); }
    const Mat& at(AgentId n, TimeStep t) const { return U[static_cast<size_t>(n)][static_cast<size_t>(t - 1)]; }
};

namespace detail {

struct WindowAccum {
    Mat A;      // sum_m w phi phi^T over the window
    Mat C;      // sum_m w v phi^T over the window
    double weight_total = 0.0;  // sum_{s,m} w (regularizer multiplicity)
    long count = 0;
};

inline WindowAccum accumulate_window(AgentId n, const StreamSet& streams, const LogicalWeights& W,
                                     const std::vector<LossSpec>& specs, TimeStep t0, TimeStep t1,
                                     int d_v, int d_feat) {
    WindowAccum acc;
    acc.A = Mat::Zero(d_feat, d_feat);
    acc.C = Mat::Zero(d_v, d_feat);
    for (TimeStep s = t0; s <= t1; ++s) {
        for (AgentId m : W.support[static_cast<size_t>(n)]) {
            const auto& kv = streams.at(m, s);
            const Vec phi = detail::spec_key(specs[static_cast<size_t>(m)], kv.key);
            const double w = W.W(n, m);
            acc.A.noalias() += w * (phi * phi.transpose());
            acc.C.noalias() += w * (kv.value * phi.transpose());
            acc.weight_total += w;
        }
        ++acc.count;
    }
    return acc;
}

// Objective gradient of the windowed hindsight problem at U.
inline Mat window_grad(const LossSpec& spec, const WindowAccum& acc, const Mat& U) {
    Mat g;
    if (spec.variant == LossVariant::DeltaNet)
        g = U * acc.A - acc.C;
    else
        g = -acc.C;
    if (uses_gating(spec.variant)) {
        for (int i = 0; i < U.rows(); ++i) g.row(i) += acc.weight_total * (1.0 - spec.gating(i)) * U.row(i);
    } else if (spec.variant == LossVariant::SoftmaxWithNorm) {
        g += acc.weight_total * U;
    }
    return g;
}

// Exact minimizer of -<U,C> + 1/2 sum_j lambda_j ||column_j||^2 over the
// Frobenius ball of radius r, in a basis where the quadratic is diagonal:
// U_j = C_j / (lambda_j + mu) with mu >= 0 the ball multiplier (secular
// equation, solved by bisection). Zero-curvature components with zero data
// are clamped to zero.
inline Mat secular_ball_solve(const Mat& C_diag, const Vec& lambda, double r) {
    const double lmax = lambda.size() ? lambda.maxCoeff() : 0.0;
    const double clamp_tol = 1e-12 * std::max(1.0, lmax);
    auto col_norm2 = [&](int j) { return C_diag.col(j).squaredNorm(); };
    auto norm_at = [&](double mu) {
        double s = 0.0;
        for (int j = 0; j < lambda.size(); ++j) {
            const double denom = lambda(j) + mu;
            if (denom <= clamp_tol) continue;  // null direction: zero component
            s += col_norm2(j) / (denom * denom);
        }
        return std::sqrt(s);
    };
    auto assemble = [&](double mu) {
        Mat U = Mat::Zero(C_diag.rows(), C_diag.cols());
        for (int j = 0; j < lambda.size(); ++j) {
            const double denom = lambda(j) + mu;
            if (denom <= clamp_tol) continue;
            U.col(j) = C_diag.col(j) / denom;
        }
        return U;
    };
    if (norm_at(0.0) <= r) return assemble(0.0);
    double lo = 0.0;
    double hi = std::max(C_diag.norm() / r, 1e-300);
    while (norm_at(hi) > r) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (norm_at(mid) > r ? lo : hi) = mid;
    }
    return assemble(hi);
}

inline Mat pgd_polish(const LossSpec& spec, const WindowAccum& acc, Mat U, double B,
                      double tol = 1e-8, long max_iters = 100000) {
    // Lipschitz constant of the gradient over the ball.
    double L = 0.0;
    if (spec.variant == LossVariant::DeltaNet) {
        Eigen::SelfAdjointEigenSolver<Mat> es(acc.A);
        L = es.eigenvalues().maxCoeff();
    }
    if (uses_gating(spec.variant)) {
        double gmax = 0.0;
        for (int i = 0; i < spec.gating.size(); ++i) gmax = std::max(gmax, 1.0 - spec.gating(i));
        L += acc.weight_total * gmax;
    } else if (spec.variant == LossVariant::SoftmaxWithNorm) {
        L += acc.weight_total;
    }
    if (L <= 0.0) {
        // Pure linear objective: minimizer is the ball boundary along +C.
        const double cn = acc.C.norm();
        if (cn == 0.0) return Mat::Zero(U.rows(), U.cols());
        return (0.5 * B / cn) * acc.C;
    }
    const double step = 1.0 / L;
    double gap = 0.0;
    for (long it = 0; it < max_iters; ++it) {
        const Mat g = window_grad(spec, acc, U);
        const Mat next = project(U - step * g, B);
        gap = (U - next).norm() / step;  // gradient mapping norm
        U = next;
        if (gap < tol) return U;
    }
    throw OptimError("hindsight optimum: no convergence, gradient mapping norm " +
                     format_double(gap));
}

}  // namespace detail

// Best fixed memory over a window [t0, t1] of the weighted stream: the
// minimizer of sum_{s,m} w_{n,m} f_{m,s}(U) over the feasible ball. Every
// Table-row objective is -<U,C> plus a positive-semidefinite quadratic that
// is diagonal in a suitable basis, so the ball-constrained minimizer has a
// closed form via the secular equation: DeltaNet diagonalizes the key Gram
// matrix, the with-norm regularizer is isotropic (projection is exact), the
// gated regularizers are diagonal per row, and pure linear objectives sit on
// the boundary along C. A projected-gradient fallback guards the
// gradient-mapping optimality certificate.
inline Mat hindsight_optimum(AgentId n, const StreamSet& streams, const LogicalWeights& W,
                             const std::vector<LossSpec>& specs, double B, TimeStep t0,
                             TimeStep t1) {
    if (t0 < 1 || t1 < t0 || t1 > streams.horizon())
        throw AnalyticsError("hindsight_optimum: empty or out-of-range window");
    const auto& kv0 = streams.at(n, t0);
    const int d_v = static_cast<int>(kv0.value.size());
    const int d_feat =
        static_cast<int>(detail::spec_key(specs[static_cast<size_t>(n)], kv0.key).size());
    const auto acc = detail::accumulate_window(n, streams, W, specs, t0, t1, d_v, d_feat);
    const auto& spec = specs[static_cast<size_t>(n)];
    const double radius = 0.5 * B;

    Mat U;
    switch (spec.variant) {
        case LossVariant::DeltaNet: {
            Eigen::SelfAdjointEigenSolver<Mat> es(acc.A);
            const Mat V = es.eigenvectors();
            const Mat U_diag = detail::secular_ball_solve(acc.C * V, es.eigenvalues(), radius);
            U = U_diag * V.transpose();
            break;
        }
        case LossVariant::SoftmaxWithNorm:
            U = project(acc.C / acc.weight_total, B);
            break;
        case LossVariant::GatedLinearAttention:
        case LossVariant::GatedSoftmax: {
            // diagonal per row: work on the transpose so rows become columns
            Vec gamma(d_v);
            for (int i = 0; i < d_v; ++i)
                gamma(i) = acc.weight_total * (1.0 - spec.gating(i));
            U = detail::secular_ball_solve(acc.C.transpose(), gamma, radius).transpose();
            break;
        }
        case LossVariant::LinearAttention:
        case LossVariant::SoftmaxNoNorm: {
            const double cn = acc.C.norm();
            U = cn == 0.0 ? Mat::Zero(d_v, d_feat) : Mat(radius / cn * acc.C);
            break;
        }
    }
    U = project(U, B);
    // optimality certificate; fall back to projected gradient if it fails
    const double L_probe = std::max(1.0, acc.A.size() ? acc.A.trace() : acc.weight_total);
    const double step = 1.0 / L_probe;
    const Mat g = detail::window_grad(spec, acc, U);
    const double gap = (U - project(U - step * g, B)).norm() / step;
    if (gap >= 1e-8 * std::max(1.0, acc.C.norm())) U = detail::pgd_polish(spec, acc, U, B);
    return U;
}

inline ComparatorSequence static_comparator(const StreamSet& streams, const LogicalWeights& W,
                                            const std::vector<LossSpec>& specs, double B,
                                            TimeStep T) {
    ComparatorSequence seq;
    seq.mode = ComparatorMode::StaticHindsight;
    seq.U.resize(static_cast<size_t>(W.size()));
    for (int n = 0; n < W.size(); ++n) {
        const Mat U = hindsight_optimum(n, streams, W, specs, B, 1, T);
        seq.U[static_cast<size_t>(n)].assign(static_cast<size_t>(T), U);
    }
    return seq;
}

// Windowed comparator: hindsight optimum recomputed per window of omega
// steps; omega = T recovers the static comparator.
inline ComparatorSequence windowed_comparator(const StreamSet& streams, const LogicalWeights& W,
                                              const std::vector<LossSpec>& specs, double B,
                                              TimeStep T, long omega) {
    if (omega < 1) throw AnalyticsError("windowed_comparator: omega must be >= 1");
    ComparatorSequence seq;
    seq.mode = ComparatorMode::Windowed;
    seq.omega = omega;
    seq.U.resize(static_cast<size_t>(W.size()));
    for (int n = 0; n < W.size(); ++n) {
        auto& Us = seq.U[static_cast<size_t>(n)];
        Us.reserve(static_cast<size_t>(T));
        for (TimeStep t0 = 1; t0 <= T; t0 += omega) {
            const TimeStep t1 = std::min<TimeStep>(t0 + omega - 1, T);
            const Mat U = hindsight_optimum(n, streams, W, specs, B, t0, t1);
            for (TimeStep t = t0; t <= t1; ++t) Us.push_back(U);
        }
    }
    return seq;
}

// Network dynamic regret, Eq. form sum_n sum_t sum_m w (f(X) - f(U)).
// Summation order is fixed (agent-major, time-minor, support inner) so
// repeated evaluations are bitwise identical.
inline double dynamic_regret(const Trajectory& traj, const StreamSet& streams,
                             const LogicalWeights& W, const std::vector<LossSpec>& specs,
                             const ComparatorSequence& cmp) {
    const TimeStep T = traj.horizon();
    if (cmp.horizon() != T || cmp.agents() != traj.agents())
        throw AnalyticsError("dynamic_regret: trajectory/comparator length mismatch");
    double total = 0.0;
    for (int n = 0; n < traj.agents(); ++n) {
        for (TimeStep t = 1; t <= T; ++t) {
            for (AgentId m : W.support[static_cast<size_t>(n)]) {
                const auto& kv = streams.at(m, t);
                const auto& spec = specs[static_cast<size_t>(m)];
                total += W.W(n, m) *
                         (eval_loss(spec, traj.at(n, t), kv) - eval_loss(spec, cmp.at(n, t), kv));
            }
        }
    }
    return total;
}

// Static regret = dynamic regret against the constant hindsight sequence
// (identical summation order by construction).
inline double static_regret(const Trajectory& traj, const StreamSet& streams,
                            const LogicalWeights& W, const std::vector<LossSpec>& specs,
                            const std::vector<Mat>& U_star) {
    ComparatorSequence cmp;
    cmp.mode = ComparatorMode::StaticHindsight;
    cmp.U.resize(U_star.size());
    for (size_t n = 0; n < U_star.size(); ++n)
        cmp.U[n].assign(static_cast<size_t>(traj.horizon()), U_star[n]);
    return dynamic_regret(traj, streams, W, specs, cmp);
}

// PL_n^T = sum_{t=2}^T ||U_{n,t-1} - U_{n,t}||_F, per agent.
inline std::vector<double> path_length(const ComparatorSequence& cmp) {
    std::vector<double> pl(static_cast<size_t>(cmp.agents()), 0.0);
    for (int n = 0; n < cmp.agents(); ++n)
        for (TimeStep t = 2; t <= cmp.horizon(); ++t)
            pl[static_cast<size_t>(n)] += (cmp.at(n, t - 1) - cmp.at(n, t)).norm();
    return pl;
}

// Self-/cross-NMSE of memory retrieval. Per-step iterates by default; pass a
// single-step trajectory holding the final memory for final-iterate NMSE.
struct NmseReport {
    double self_nmse = 0.0;
    double cross_nmse = 0.0;
};

inline NmseReport nmse(const Trajectory& traj, const StreamSet& streams, const LogicalWeights& W,
                       const std::vector<LossSpec>& specs) {
    double self_num = 0.0, self_den = 0.0, cross_num = 0.0, cross_den = 0.0;
    const TimeStep T = traj.horizon();
    bool any_cross = false;
    for (int n = 0; n < traj.agents(); ++n) {
        const auto& spec = specs[static_cast<size_t>(n)];
        for (TimeStep t = 1; t <= T; ++t) {
            const Mat& X = traj.at(n, t);
            {
                const auto& kv = streams.at(n, t);
                const Vec phi = detail::spec_key(spec, kv.key);
                self_num += (X * phi - kv.value).squaredNorm();
                self_den += kv.value.squaredNorm();
            }
            for (AgentId m : W.support[static_cast<size_t>(n)]) {
                if (m == n) continue;
                any_cross = true;
                const auto& kv = streams.at(m, t);
                const Vec phi = detail::spec_key(spec, kv.key);
                cross_num += (X * phi - kv.value).squaredNorm();
                cross_den += kv.value.squaredNorm();
            }
        }
    }
    if (self_den == 0.0) throw AnalyticsError("nmse: all-zero values");
    NmseReport r;
    r.self_nmse = self_num / self_den;
    if (any_cross) {
        if (cross_den == 0.0) throw AnalyticsError("nmse: all-zero cross values");
        r.cross_nmse = cross_num / cross_den;
    }
    return r;
}

// Bound trajectory for plotting against measured regret: evaluates the exact
// closed-form bound at each horizon. When recompute_eta is set, each horizon
// uses its corollary learning rate, matching how runs at that horizon would
// be configured. Also emits the scaled path length (1 + PL)/sqrt(T).
struct BoundPoint {
    long T = 0;
    double bound = 0.0;
    double scaled_pl = 0.0;
};

inline std::vector<BoundPoint> bound_trajectory(BoundKind kind,
                                                std::vector<BoundConstants> constants, double B,
                                                const std::vector<long>& horizons,
                                                const std::vector<std::vector<double>>& pl_per_h,
                                                bool recompute_eta = true, double alpha = -1.0) {
    if (!pl_per_h.empty() && pl_per_h.size() != horizons.size())
        throw AnalyticsError("bound_trajectory: path-length series length mismatch");
    for (size_t i = 1; i < horizons.size(); ++i)
        if (horizons[i] <= horizons[i - 1])
            throw AnalyticsError("bound_trajectory: horizons must be increasing");
    std::vector<BoundPoint> out;
    out.reserve(horizons.size());
    for (size_t i = 0; i < horizons.size(); ++i) {
        const long T = horizons[i];
        std::vector<double> pl =
            pl_per_h.empty() ? std::vector<double>(constants.size(), 0.0) : pl_per_h[i];
        if (recompute_eta) {
            for (auto& c : constants) {
                switch (kind) {
                    case BoundKind::OgdDynamic:
                        c.eta = lr_ogd(B, c.Gbar, T);
                        break;
                    case BoundKind::TogdDynamic:
                    case BoundKind::TogdStatic:
                        c.eta = lr_togd(B, c.Q, c.J, c.delays.delta_tau, T);
                        break;
                    case BoundKind::CdogdStatic:
                        c.eta = lr_cdogd(T);
                        break;
                }
            }
        }
        BoundPoint p;
        p.T = T;
        p.bound = theoretical_bound(kind, constants, B, T, pl, alpha);
        double pl_total = 0.0;
        for (double x : pl) pl_total += x;
        p.scaled_pl = (1.0 + pl_total) / std::sqrt(static_cast<double>(T));
        out.push_back(p);
    }
    return out;
}

}  // namespace ddam

#endif
