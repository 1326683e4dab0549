#ifndef DDAM_COMMON_HPP
#define DDAM_COMMON_HPP

#include <Eigen/Dense>
#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ddam {

inline constexpr const char* kVersion = "0.1.0";

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using AgentId = int;
using TimeStep = long;  // 1-based simulation step

// Error taxonomy. Everything user-facing maps to one of these.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error { using Error::Error; };      // bad configuration / dimensions
struct DataError : Error { using Error::Error; };        // missing or malformed data
struct TopologyError : Error { using Error::Error; };    // graph infeasibility
struct NumericError : Error { using Error::Error; };     // non-finite values
struct ProtocolError : Error { using Error::Error; };    // simulation invariant broken
struct AnalyticsError : Error { using Error::Error; };   // regret/metric preconditions
struct OptimError : Error { using Error::Error; };       // comparator solver non-convergence
struct IoError : Error { using Error::Error; };          // filesystem / parsing

// FNV-1a, used for config hashing and seed derivation tags.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Shortest round-trip decimal form; keeps CSV output byte-stable.
inline std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline void require_finite(const Mat& m, const char* what) {
    if (!m.allFinite()) throw NumericError(std::string(what) + ": non-finite entries");
}

inline void require_finite(const Vec& v, const char* what) {
    if (!v.allFinite()) throw NumericError(std::string(what) + ": non-finite entries");
}

}  // namespace ddam

#endif
