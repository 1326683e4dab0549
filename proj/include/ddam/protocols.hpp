#ifndef DDAM_PROTOCOLS_HPP
#define DDAM_PROTOCOLS_HPP

#include <cmath>
#include <map>
#include <vector>

#include "ddam/am_core.hpp"
#include "ddam/common.hpp"
#include "ddam/routing.hpp"
#include "ddam/topology.hpp"

namespace ddam {

// Per-agent key/value sequences, 1-based in time.
class StreamSet {
  public:
    StreamSet() = default;
    explicit StreamSet(std::vector<std::vector<KeyValuePair>> data) : data_(std::move(data)) {}

    int agents() const { return static_cast<int>(data_.size()); }
    TimeStep horizon() const { return data_.empty() ? 0 : static_cast<TimeStep>(data_[0].size()); }

    const KeyValuePair& at(AgentId n, TimeStep t) const {
        if (n < 0 || n >= agents()) throw DataError("stream: bad agent " + std::to_string(n));
        const auto& seq = data_[static_cast<size_t>(n)];
        if (t < 1 || t > static_cast<TimeStep>(seq.size()))
            throw DataError("stream: agent " + std::to_string(n) + " exhausted at step " +
                            std::to_string(t));
        return seq[static_cast<size_t>(t - 1)];
    }

    std::vector<std::vector<KeyValuePair>>& data() { return data_; }
    const std::vector<std::vector<KeyValuePair>>& data() const { return data_; }

  private:
    std::vector<std::vector<KeyValuePair>> data_;
};

struct AgentState {
    AgentId agent = 0;
    Mat X;
    double eta = 0.0;

    struct GradEntry {
        Mat grad;
        TimeStep origin = 0;  // step whose data and parameters produced it
    };
    std::map<AgentId, GradEntry> latest_grad;  // most recent per source
};

struct InFlightMessage {
    enum class Kind { ParamSnapshot, GradientReply };
    Kind kind = Kind::ParamSnapshot;
    AgentId source = 0;
    AgentId dest = 0;
    Mat payload;
    TimeStep sent_at = 0;
    TimeStep arrives_at = 0;
    TimeStep origin = 0;  // parameter/data step the payload refers to
};

namespace detail {

// Shared weighted-gradient accumulator; OGD and DDAM-TOGD both funnel through
// it so the pure-local reduction produces bitwise-identical arithmetic.
template <typename GradFn>
Mat weighted_grad_sum(const LogicalWeights& W, AgentId n, const Mat& X, GradFn&& grad_for) {
    Mat acc = Mat::Zero(X.rows(), X.cols());
    for (AgentId m : W.support[static_cast<size_t>(n)]) acc.noalias() += W.W(n, m) * grad_for(m);
    return acc;
}

}  // namespace detail

// Full-information OGD update for one agent at step t:
//   X <- project(X - eta * sum_m w_{n,m} grad f_{m,t}(X)).
inline void ogd_step(AgentState& s, const LogicalWeights& W, const std::vector<LossSpec>& specs,
                     const StreamSet& streams, TimeStep t, double B) {
    const Mat acc = detail::weighted_grad_sum(W, s.agent, s.X, [&](AgentId m) {
        return eval_grad(specs[static_cast<size_t>(m)], s.X, streams.at(m, t));
    });
    s.X = project(s.X - s.eta * acc, B);
}

inline void check_doubly_stochastic(const Mat& A) {
    const double tol = 1e-9;
    if (A.rows() != A.cols()) throw ConfigError("mixing matrix must be square");
    for (int i = 0; i < A.rows(); ++i) {
        if (std::abs(A.row(i).sum() - 1.0) > tol)
            throw ConfigError("mixing matrix row " + std::to_string(i) + " does not sum to 1");
        if (std::abs(A.col(i).sum() - 1.0) > tol)
            throw ConfigError("mixing matrix column " + std::to_string(i) + " does not sum to 1");
        for (int j = 0; j < A.cols(); ++j)
            if (A(i, j) < -tol) throw ConfigError("mixing matrix has a negative entry");
    }
}

// Synchronous C-DOGD round: consensus averaging plus a local gradient step,
//   X_n <- project(sum_m a_{n,m} X_m - eta_n grad f_{n,t}(X_n)).
inline void cdogd_step(std::vector<AgentState>& states, const Mat& A,
                       const std::vector<LossSpec>& specs, const StreamSet& streams, TimeStep t,
                       double B) {
    check_doubly_stochastic(A);
    const int N = static_cast<int>(states.size());
    std::vector<Mat> next(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n) {
        AgentState& s = states[static_cast<size_t>(n)];
        Mat mix = Mat::Zero(s.X.rows(), s.X.cols());
        for (int m = 0; m < N; ++m)
            if (A(n, m) != 0.0) mix.noalias() += A(n, m) * states[static_cast<size_t>(m)].X;
        const Mat g = eval_grad(specs[static_cast<size_t>(n)], s.X, streams.at(n, t));
        next[static_cast<size_t>(n)] = project(mix - s.eta * g, B);
    }
    for (int n = 0; n < N; ++n) states[static_cast<size_t>(n)].X = std::move(next[static_cast<size_t>(n)]);
}

// DDAM-TOGD network: tree-routed parameter broadcasts and delayed gradient
// replies. One step runs the canonical phase order
//   deliver -> reply -> broadcast -> update
// so a gradient that round-trips in tau steps is applied exactly when the
// update indicator t > tau first fires.
class TogdNetwork {
  public:
    TogdNetwork(std::vector<AgentState> agents, std::vector<RoutingTree> trees,
                const LogicalWeights& W, const std::vector<LossSpec>& specs, double B)
        : agents_(std::move(agents)), trees_(std::move(trees)), W_(W), specs_(specs), B_(B) {
        for (int n = 0; n < W_.size(); ++n) {
            for (AgentId m : W_.support[static_cast<size_t>(n)]) {
                if (m == n) continue;
                if (!trees_[static_cast<size_t>(n)].contains(m))
                    throw ProtocolError("togd: tree of agent " + std::to_string(n) +
                                        " does not reach target " + std::to_string(m));
            }
        }
    }

    // Round-trip delay tau_{n,m} (0 for the local term).
    long tau(AgentId n, AgentId m) const {
        return m == n ? 0 : trees_[static_cast<size_t>(n)].round_trip(m);
    }

    void step(const StreamSet& streams, TimeStep t) {
        // (i) deliver everything scheduled for t; replies update the gradient
        // memory (newest origin wins), snapshots queue for phase (ii).
        std::vector<InFlightMessage> snapshots;
        if (auto it = mailbox_.find(t); it != mailbox_.end()) {
            for (auto& msg : it->second) {
                if (msg.kind == InFlightMessage::Kind::GradientReply) {
                    auto& slot = agents_[static_cast<size_t>(msg.dest)].latest_grad[msg.source];
                    if (slot.origin <= msg.origin) slot = {msg.payload, msg.origin};
                } else {
                    snapshots.push_back(std::move(msg));
                }
            }
            mailbox_.erase(it);
        }

        // (ii) each delivered snapshot X_{n,s} is answered with
        // grad f_{m,s}(X_{n,s}) evaluated on the receiver's data of step s.
        for (const auto& msg : snapshots) {
            const AgentId m = msg.dest;
            const AgentId n = msg.source;
            const Mat g = eval_grad(specs_[static_cast<size_t>(m)], msg.payload,
                                    streams.at(m, msg.origin));
            const long leg = trees_[static_cast<size_t>(n)].one_way(m);
            enqueue({InFlightMessage::Kind::GradientReply, m, n, g, t, t + leg, msg.origin}, t);
        }

        // (iii) broadcast current parameters along each tree.
        for (int n = 0; n < W_.size(); ++n) {
            for (AgentId m : W_.support[static_cast<size_t>(n)]) {
                if (m == n) continue;
                const long leg = trees_[static_cast<size_t>(n)].one_way(m);
                enqueue({InFlightMessage::Kind::ParamSnapshot, n, m,
                         agents_[static_cast<size_t>(n)].X, t, t + leg, t},
                        t);
            }
        }

        // (iv) gradient update, remote terms gated by the indicator t > tau.
        for (int n = 0; n < W_.size(); ++n) {
            AgentState& s = agents_[static_cast<size_t>(n)];
            const Mat acc = detail::weighted_grad_sum(W_, n, s.X, [&](AgentId m) -> Mat {
                if (m == n) return eval_grad(specs_[static_cast<size_t>(n)], s.X, streams.at(n, t));
                const long tau_nm = tau(n, m);
                if (t <= tau_nm) return Mat::Zero(s.X.rows(), s.X.cols());
                auto it = s.latest_grad.find(m);
                if (it == s.latest_grad.end())
                    throw ProtocolError("togd: missing gradient from " + std::to_string(m) +
                                        " at agent " + std::to_string(n) + ", step " +
                                        std::to_string(t));
                if (it->second.origin != t - tau_nm)
                    throw ProtocolError("togd: stale gradient from " + std::to_string(m) +
                                        " at step " + std::to_string(t) + ": origin " +
                                        std::to_string(it->second.origin) + ", expected " +
                                        std::to_string(t - tau_nm));
                return it->second.grad;
            });
            s.X = project(s.X - s.eta * acc, B_);
        }
    }

    const std::vector<AgentState>& agents() const { return agents_; }
    std::vector<AgentState>& agents() { return agents_; }
    size_t in_flight() const {
        size_t c = 0;
        for (auto& [k, v] : mailbox_) c += v.size();
        return c;
    }

  private:
    void enqueue(InFlightMessage msg, TimeStep now) {
        if (msg.arrives_at <= now)
            throw ProtocolError("togd: message scheduled into the past (arrives " +
                                std::to_string(msg.arrives_at) + " <= now " + std::to_string(now) +
                                ")");
        mailbox_[msg.arrives_at].push_back(std::move(msg));
    }

    std::vector<AgentState> agents_;
    std::vector<RoutingTree> trees_;
    const LogicalWeights& W_;
    const std::vector<LossSpec>& specs_;
    double B_;
    std::map<TimeStep, std::vector<InFlightMessage>> mailbox_;
};

// Corollary learning-rate schedules.
inline double lr_ogd(double B, double gbar, long T) {
    if (B <= 0.0 || gbar <= 0.0 || T < 1) throw ConfigError("lr_ogd: arguments must be positive");
    return B * std::sqrt(7.0) / (gbar * std::sqrt(2.0 * static_cast<double>(T)));
}

inline double lr_cdogd(long T) {
    if (T < 1) throw ConfigError("lr_cdogd: T must be >= 1");
    return 1.0 / (2.0 * std::sqrt(static_cast<double>(T)));
}

inline double lr_togd(double B, double Q, double J, long delta_tau, long T) {
    if (B <= 0.0 || T < 1 || Q < 0.0 || J < 0.0 || delta_tau < 0)
        throw ConfigError("lr_togd: invalid arguments");
    const double denom = 4.0 * (Q * static_cast<double>(T + delta_tau) + J);
    if (denom <= 0.0) throw ConfigError("lr_togd: Q(T+dtau)+J must be positive");
    return std::sqrt(7.0 * B * B / denom);
}

// Constants of the DDAM-TOGD regret bound, per agent:
//   K = max_m w_{n,m} G_m
//   Q = K (sum_m G_m) / 2 + |W_n| K^2 tau_sum
//   J = |W_n|^2 K^2 tau_max^2
//   H = K tau_sum
//   C = K dtau |W_n| B
//   Gbar = sum_m w_{n,m} G_m
struct BoundConstants {
    double K = 0.0;
    double Q = 0.0;
    double J = 0.0;
    double H = 0.0;
    double C = 0.0;
    double Gbar = 0.0;
    double G_self = 0.0;  // this agent's own G_n
    DelaySummary delays;
    int support_size = 0;
    double eta = 0.0;  // learning rate the bound is evaluated at
};

inline std::vector<BoundConstants> bound_constants(const LogicalWeights& W,
                                                   const std::vector<LossSpec>& specs,
                                                   const std::vector<DelaySummary>& summaries,
                                                   double B) {
    const int N = W.size();
    if (static_cast<int>(specs.size()) != N || static_cast<int>(summaries.size()) != N)
        throw ConfigError("bound_constants: size mismatch");
    std::vector<BoundConstants> out(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n) {
        BoundConstants& c = out[static_cast<size_t>(n)];
        const auto& sup = W.support[static_cast<size_t>(n)];
        const auto& d = summaries[static_cast<size_t>(n)];
        double sumG = 0.0;
        for (AgentId m : sup) {
            const double g = specs[static_cast<size_t>(m)].grad_bound;
            if (g <= 0.0)
                throw ConfigError("bound_constants: agent " + std::to_string(m) +
                                  " has no gradient bound");
            c.K = std::max(c.K, W.W(n, m) * g);
            c.Gbar += W.W(n, m) * g;
            sumG += g;
        }
        const double wn = static_cast<double>(sup.size());
        c.Q = 0.5 * c.K * sumG + wn * c.K * c.K * static_cast<double>(d.tau_sum);
        c.J = wn * wn * c.K * c.K * static_cast<double>(d.tau_max) * static_cast<double>(d.tau_max);
        c.H = c.K * static_cast<double>(d.tau_sum);
        c.C = c.K * static_cast<double>(d.delta_tau) * wn * B;
        c.G_self = specs[static_cast<size_t>(n)].grad_bound;
        c.delays = d;
        c.support_size = static_cast<int>(sup.size());
        out[static_cast<size_t>(n)] = c;
    }
    return out;
}

enum class BoundKind { OgdDynamic, CdogdStatic, TogdDynamic, TogdStatic };

// Closed-form regret upper bounds. pl is per-agent path length (ignored by
// the static kinds); alpha is the consensus contraction factor, required for
// the C-DOGD bound only. The DDAM-TOGD bounds are the delayed-feedback
// theorem evaluated at each agent's actual learning rate; at the corollary
// rate the dynamic form collapses to
//   sqrt(7) B sqrt(Q(T+dtau)+J) + (H + 2/sqrt(7) sqrt(Q(T+dtau)+J)) PL + C.
inline double theoretical_bound(BoundKind kind, const std::vector<BoundConstants>& constants,
                                double B, long T, const std::vector<double>& pl = {},
                                double alpha = -1.0) {
    if (T < 1) throw ConfigError("theoretical_bound: T must be >= 1");
    const size_t N = constants.size();
    auto pl_at = [&](size_t n) -> double {
        if (pl.empty()) return 0.0;
        if (pl.size() == 1) return pl[0];
        if (pl.size() != N) throw ConfigError("theoretical_bound: path-length size mismatch");
        if (pl[n] < 0.0) throw ConfigError("theoretical_bound: negative path length");
        return pl[n];
    };

    switch (kind) {
        case BoundKind::OgdDynamic: {
            double total = 0.0;
            for (size_t n = 0; n < N; ++n) {
                const auto& c = constants[n];
                if (c.eta <= 0.0) throw ConfigError("theoretical_bound: eta not set");
                total += 7.0 * B * B / (4.0 * c.eta) +
                         c.eta * static_cast<double>(T) * c.Gbar * c.Gbar / 2.0 +
                         (B / c.eta) * pl_at(n);
            }
            return total;
        }
        case BoundKind::CdogdStatic: {
            if (alpha < 0.0 || alpha >= 1.0)
                throw ConfigError("theoretical_bound: cdogd needs contraction alpha in [0,1)");
            double gmax = 0.0;
            for (const auto& c : constants) gmax = std::max(gmax, c.G_self);
            return static_cast<double>(N) *
                   (B + (5.0 - alpha) / (1.0 - alpha) * gmax * gmax) *
                   std::sqrt(static_cast<double>(T));
        }
        case BoundKind::TogdDynamic:
        case BoundKind::TogdStatic: {
            double total = 0.0;
            for (size_t n = 0; n < N; ++n) {
                const auto& c = constants[n];
                if (c.eta <= 0.0) throw ConfigError("theoretical_bound: eta not set");
                const double horizon = static_cast<double>(T + c.delays.delta_tau);
                const double pln = (kind == BoundKind::TogdStatic) ? 0.0 : pl_at(n);
                total += c.Q * c.eta * horizon + c.J * c.eta + 7.0 * B * B / (4.0 * c.eta) +
                         (B / c.eta + c.H) * pln + c.C;
            }
            return total;
        }
    }
    throw ConfigError("theoretical_bound: unknown kind");
}

}  // namespace ddam

#endif
