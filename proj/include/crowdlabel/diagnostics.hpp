#pragma once

#include <span>
#include <string>
#include <vector>

namespace crowdlabel {

/// Effective sample size n / τ with τ = −1 + 2 Σ_m P_m, where P_m are Geyer's
/// initial monotone positive pair sums of autocorrelations. Constant series
/// give 0; the result is capped at n. Throws std::invalid_argument for n < 4.
double ess(std::span<const double> series);

/// Split-chain potential scale reduction. Each chain is halved (an odd middle
/// draw is dropped). Throws std::invalid_argument for fewer than 2 chains,
/// unequal lengths or chains shorter than 4, and std::domain_error when every
/// split has zero variance.
double gelman_rubin(const std::vector<std::vector<double>>& chains);

struct ParameterDiagnostics {
    std::string name;
    double ess = 0.0;
    double rhat = 1.0;
};

struct DiagnosticsReport {
    std::vector<ParameterDiagnostics> parameters;
    double min_ess = 0.0;
    double max_rhat = 1.0;
    std::string min_ess_parameter;
    std::string max_rhat_parameter;
};

}  // namespace crowdlabel
