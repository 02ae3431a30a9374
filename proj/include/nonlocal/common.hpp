#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nonlocal {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;

// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
    switch (n) {
        case 1: return 2.0;
        case 2: return pi;
        case 3: return 4.0 * pi / 3.0;
        default: return std::pow(pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
    }
}

// Surface measure of the unit sphere S^{n-1} in R^n (total mass of angular integration).
inline double unit_sphere_area(int n) {
    // s_1 = 2 (two points), s_2 = 2*pi, s_3 = 4*pi.
    return n * unit_ball_volume(n);
}

// Composite Simpson on [a,b]; m must be even.
inline double simpson(const std::function<double(double)>& f, double a, double b, int m = 4096) {
    if (m % 2) ++m;
    const double h = (b - a) / m;
    double s = f(a) + f(b);
    for (int i = 1; i < m; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

struct NonlocalError : std::runtime_error {
    explicit NonlocalError(const std::string& what) : std::runtime_error(what) {}
};

struct ValidationError : NonlocalError {
    explicit ValidationError(const std::string& what) : NonlocalError(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

// Deterministic normal vector for iterative eigensolver starts.
inline VectorXd seeded_gaussian(int n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = nd(gen);
    return v;
}

// 17 significant digits: round-trips any double exactly.
inline std::string format_full(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

inline double weighted_dot(const VectorXd& u, const VectorXd& v, const VectorXd& w) {
    return (u.array() * v.array() * w.array()).sum();
}

inline double weighted_norm(const VectorXd& u, const VectorXd& w) {
    return std::sqrt((u.array().square() * w.array()).sum());
}

}  // namespace nonlocal
