#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace glmb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

/// Thrown on dimension mismatches and invalid parameters.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when linear algebra breaks down (singular innovation, SPD violation).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// log(sum_i exp(v_i)) without overflow; -inf for an empty list.
inline double log_sum_exp(const std::vector<double>& v) {
    double m = neg_inf;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;  // empty, all -inf, or a +inf/NaN entry
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline double log_sum_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a + M_PI, 2.0 * M_PI);
    if (a <= 0.0) a += 2.0 * M_PI;
    return a - M_PI;
}

/// 64-bit FNV-1a style combine for association-history hash chains.
inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
    seed ^= value + 0x9e3779b97f4a7c15ULL + (seed << 12) + (seed >> 4);
    return seed;
}

/// Full-precision decimal formatting (round-trips through strtod).
inline std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace glmb
