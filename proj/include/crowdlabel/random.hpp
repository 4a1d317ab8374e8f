#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace crowdlabel {

/// Seedable random stream. Identical (seed, stream_id) pairs produce identical
/// draw sequences on every platform: the engine and the seed expansion are
/// both fully specified by the standard, and every kernel below is
/// implemented here rather than delegated to <random> distributions, whose
/// algorithms are implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform();

    /// Standard normal (Marsaglia polar method, spare value cached).
    double standard_normal();

    /// Unit-rate exponential.
    double standard_exponential();

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// Beta(a, b) via the gamma ratio. Throws std::domain_error unless a, b > 0.
double sample_beta(RngStream& rng, double a, double b);

/// Gamma with shape–rate parameterization (mean shape / rate).
double sample_gamma(RngStream& rng, double shape, double rate);

double sample_normal(RngStream& rng, double mean, double sd);

bool sample_bernoulli(RngStream& rng, double p);

/// Binomial(n, p) by summing Bernoulli trials; n is small in every caller.
std::uint32_t sample_binomial(RngStream& rng, std::uint32_t n, double p);

std::vector<double> sample_dirichlet(RngStream& rng, std::span<const double> alpha);

/// Index drawn with probability softmax(log_weights). Weights are max-shifted
/// before exponentiation. Throws std::domain_error when every weight is -inf.
std::size_t sample_categorical_log(RngStream& rng, std::span<const double> log_weights);

/// Exact draw from PG(1, c) by alternating-series accept/reject over a
/// truncated inverse-Gaussian / truncated exponential proposal.
/// PG(1, c) and PG(1, -c) are the same law. Throws on non-finite c.
double sample_polya_gamma(RngStream& rng, double c);

/// Sum of `count` independent PG(1, c) draws. Reuses the proposal mixture
/// weight, which depends on c only.
double sample_polya_gamma_sum(RngStream& rng, std::uint64_t count, double c);

}  // namespace crowdlabel
