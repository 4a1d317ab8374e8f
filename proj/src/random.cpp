#include "crowdlabel/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "crowdlabel/math.hpp"

namespace crowdlabel {
namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t stream_id) {
    return std::seed_seq{
        static_cast<std::uint32_t>(seed & 0xffffffffu),
        static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream_id & 0xffffffffu),
        static_cast<std::uint32_t>(stream_id >> 32),
        0x9e3779b9u,
    };
}

// log of a Gamma(shape, 1) variate (Marsaglia–Tsang). Working on the log
// scale keeps Beta draws with small shapes away from 0/0.
double log_gamma_variate(RngStream& rng, double shape) {
    if (shape < 1.0) {
        const double boosted = log_gamma_variate(rng, shape + 1.0);
        return boosted + std::log(rng.uniform()) / shape;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = rng.standard_normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2 ||
            std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
            return std::log(d) + std::log(v);
        }
    }
}

// Truncation point between the left (inverse-Gaussian) and right
// (exponential) proposal pieces.
constexpr double kTrunc = 0.64;
constexpr double kTruncRecip = 1.0 / kTrunc;

// Coefficient a_n(x) of the alternating series for the J*(1, 0) density.
double series_coefficient(int n, double x) {
    const double k = (n + 0.5) * kPi;
    if (x > kTrunc) {
        return k * std::exp(-0.5 * k * k * x);
    }
    if (x > 0.0) {
        const double expo = -1.5 * (std::log(0.5 * kPi) + std::log(x)) + std::log(k) -
                            2.0 * (n + 0.5) * (n + 0.5) / x;
        return std::exp(expo);
    }
    return 0.0;
}

// Probability of drawing from the exponential piece of the proposal.
double exponential_piece_mass(double z) {
    const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
    const double b = std::sqrt(1.0 / kTrunc) * (kTrunc * z - 1.0);
    const double a = -std::sqrt(1.0 / kTrunc) * (kTrunc * z + 1.0);
    const double x0 = std::log(fz) + fz * kTrunc;
    const double xb = x0 - z + log_normal_cdf(b);
    const double xa = x0 + z + log_normal_cdf(a);
    const double q_over_p = 4.0 / kPi * (std::exp(xb) + std::exp(xa));
    return 1.0 / (1.0 + q_over_p);
}

// Inverse-Gaussian(1/z, 1) truncated to (0, kTrunc).
double truncated_inverse_gaussian(RngStream& rng, double z) {
    double x = kTrunc + 1.0;
    if (kTruncRecip > z) {
        // Mean beyond the truncation point: propose from the z = 0 limit
        // (a truncated inverse chi-square) and thin by exp(-z^2 x / 2).
        double alpha = 0.0;
        while (rng.uniform() > alpha) {
            double e1 = rng.standard_exponential();
            double e2 = rng.standard_exponential();
            while (e1 * e1 > 2.0 * e2 / kTrunc) {
                e1 = rng.standard_exponential();
                e2 = rng.standard_exponential();
            }
            x = 1.0 + e1 * kTrunc;
            x = kTrunc / (x * x);
            alpha = std::exp(-0.5 * z * z * x);
        }
        return x;
    }
    const double mu = 1.0 / z;
    while (x > kTrunc) {
        double y = rng.standard_normal();
        y *= y;
        const double half_mu = 0.5 * mu;
        const double mu_y = mu * y;
        x = mu + half_mu * mu_y - half_mu * std::sqrt(4.0 * mu_y + mu_y * mu_y);
        if (rng.uniform() > mu / (mu + x)) {
            x = mu * mu / x;
        }
    }
    return x;
}

// One draw of J*(1, z), z >= 0, given the precomputed proposal mixture mass.
double draw_j_star(RngStream& rng, double z, double exp_mass) {
    const double fz = 0.125 * kPi * kPi + 0.5 * z * z;
    for (;;) {
        double x = 0.0;
        if (rng.uniform() < exp_mass) {
            x = kTrunc + rng.standard_exponential() / fz;
        } else {
            x = truncated_inverse_gaussian(rng, z);
        }
        double s = series_coefficient(0, x);
        const double y = rng.uniform() * s;
        for (int n = 1;; ++n) {
            if (n % 2 == 1) {
                s -= series_coefficient(n, x);
                if (y <= s) return x;
            } else {
                s += series_coefficient(n, x);
                if (y > s) break;
            }
        }
    }
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    auto seq = make_seed_seq(seed, stream_id);
    engine_.seed(seq);
}

double RngStream::uniform() {
    // 53 random bits, offset by half an ulp so neither endpoint occurs.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::standard_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_normal_;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * scale;
    has_spare_ = true;
    return u * scale;
}

double RngStream::standard_exponential() { return -std::log(uniform()); }

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
    if (n == 0) throw std::domain_error("uniform_index: empty range");
    // Rejection removes modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
}

double sample_beta(RngStream& rng, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::domain_error("sample_beta: shapes must be positive");
    }
    const double lx = log_gamma_variate(rng, a);
    const double ly = log_gamma_variate(rng, b);
    double p = logistic(lx - ly);
    if (p <= 0.0) p = std::numeric_limits<double>::min();
    if (p >= 1.0) p = std::nextafter(1.0, 0.0);
    return p;
}

double sample_gamma(RngStream& rng, double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) {
        throw std::domain_error("sample_gamma: shape and rate must be positive");
    }
    return std::exp(log_gamma_variate(rng, shape)) / rate;
}

double sample_normal(RngStream& rng, double mean, double sd) {
    if (!(sd >= 0.0)) throw std::domain_error("sample_normal: negative sd");
    return mean + sd * rng.standard_normal();
}

bool sample_bernoulli(RngStream& rng, double p) { return rng.uniform() < p; }

std::uint32_t sample_binomial(RngStream& rng, std::uint32_t n, double p) {
    std::uint32_t count = 0;
    for (std::uint32_t t = 0; t < n; ++t) count += rng.uniform() < p ? 1u : 0u;
    return count;
}

std::vector<double> sample_dirichlet(RngStream& rng, std::span<const double> alpha) {
    if (alpha.empty()) throw std::domain_error("sample_dirichlet: empty parameter");
    std::vector<double> logs(alpha.size());
    double max_log = -INFINITY;
    for (std::size_t r = 0; r < alpha.size(); ++r) {
        if (!(alpha[r] > 0.0)) throw std::domain_error("sample_dirichlet: non-positive alpha");
        logs[r] = log_gamma_variate(rng, alpha[r]);
        max_log = std::max(max_log, logs[r]);
    }
    double total = 0.0;
    for (double& v : logs) {
        v = std::exp(v - max_log);
        total += v;
    }
    for (double& v : logs) v /= total;
    return logs;
}

std::size_t sample_categorical_log(RngStream& rng, std::span<const double> log_weights) {
    double max_log = -INFINITY;
    for (double w : log_weights) max_log = std::max(max_log, w);
    if (max_log == -INFINITY || std::isnan(max_log)) {
        throw std::domain_error("sample_categorical_log: no finite weight");
    }
    double total = 0.0;
    for (double w : log_weights) total += std::exp(w - max_log);
    double target = rng.uniform() * total;
    std::size_t last_positive = 0;
    for (std::size_t r = 0; r < log_weights.size(); ++r) {
        const double p = std::exp(log_weights[r] - max_log);
        if (p > 0.0) last_positive = r;
        if (target < p) return r;
        target -= p;
    }
    return last_positive;
}

double sample_polya_gamma(RngStream& rng, double c) { return sample_polya_gamma_sum(rng, 1, c); }

double sample_polya_gamma_sum(RngStream& rng, std::uint64_t count, double c) {
    if (!std::isfinite(c)) throw std::domain_error("sample_polya_gamma: non-finite tilt");
    const double z = 0.5 * std::fabs(c);
    const double exp_mass = exponential_piece_mass(z);
    double total = 0.0;
    for (std::uint64_t n = 0; n < count; ++n) total += draw_j_star(rng, z, exp_mass);
    return 0.25 * total;
}

}  // namespace crowdlabel
