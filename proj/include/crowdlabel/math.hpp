#pragma once

#include <cmath>

namespace crowdlabel {

inline constexpr double kPi = 3.14159265358979323846;

/// Logistic function 1 / (1 + e^-x), evaluated without overflow for large |x|.
inline double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log(logistic(x)), stable in both tails.
inline double log_logistic(double x) {
    if (x >= 0.0) {
        return -std::log1p(std::exp(-x));
    }
    return x - std::log1p(std::exp(x));
}

/// Thread-safe log-gamma (glibc's std::lgamma writes the global signgam).
double log_gamma(double x);

/// ln B(a, b) = ln Γ(a) + ln Γ(b) − ln Γ(a + b). Throws std::domain_error unless a, b > 0.
double log_beta_fn(double a, double b);

/// Natural log of the standard normal CDF, accurate far into the lower tail.
double log_normal_cdf(double x);

/// log(exp(a) + exp(b)) without overflow.
inline double log_add_exp(double a, double b) {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace crowdlabel
