#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "crowdlabel/chain.hpp"

namespace crowdlabel::oracle {

/// Composite Simpson rule with n (even) intervals.
double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n);

/// ∫₀¹ p^s (1 − p)^f Beta(p; a, b) dp by midpoint quadrature on a fine grid.
double beta_moment(double a, double b, double successes, double failures);

/// Tabulated CDF on [lo, hi] from an unnormalized density.
class NumericCdf {
public:
    NumericCdf(const std::function<double(double)>& density, double lo, double hi, std::size_t n);
    double operator()(double x) const;
    double mean() const { return mean_; }

private:
    double lo_, hi_;
    std::vector<double> cdf_;
    double mean_ = 0.0;
};

/// One-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
/// Two-sample statistic.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// Asymptotic 1% critical values.
double ks_critical_1pct(std::size_t n);
double ks_two_sample_critical_1pct(std::size_t n, std::size_t m);

/// Chi-square homogeneity statistic for two count vectors, with its degrees
/// of freedom (categories empty in both samples are skipped).
std::pair<double, std::size_t> chi_square_homogeneity(const std::vector<double>& a,
                                                      const std::vector<double>& b);
double chi_square_critical(std::size_t df, double level);

/// The two-recording, two-annotator, one-species fixture shared by the
/// enumeration oracles.
struct TinyFixture {
    AnnotationTensor tensor;
    ExpertiseSets expertise;
    BetaPrior occurrence{2.0, 3.0};
    BetaPrior tpr{6.0, 2.0};
    BetaPrior fpr{2.0, 6.0};
    GammaPrior concentration{0.5, 0.5};

    TinyFixture();
    Hypers hypers(ModelKind kind) const;
};

/// P(y_i = 1 | 𝒯) for i = 0, 1 by enumerating y with every parameter
/// integrated out on a grid.
std::array<double, 2> base_enumeration(const TinyFixture& f);
/// Joint posterior of (y_0, y_1) under the same enumeration.
std::array<std::array<double, 2>, 2> base_joint(const TinyFixture& f);
/// Same, enumerating both partitions of the two recordings and integrating
/// γ by quadrature.
std::array<double, 2> dp_enumeration(const TinyFixture& f);

/// Long-run Gibbs estimate of P(y_i = 1 | 𝒯) on the fixture.
std::array<double, 2> gibbs_label_probabilities(const TinyFixture& f, ModelKind kind,
                                                std::size_t iterations, std::uint64_t seed);

}  // namespace crowdlabel::oracle
