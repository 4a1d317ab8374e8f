#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "crowdlabel/data.hpp"

namespace crowdlabel {

/// Fraction of positive votes per (recording, species) cell, row-major
/// N1 × N3. Cells without votes score 0.
std::vector<double> majority_vote(const AnnotationTensor& tensor);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // predict positive when score >= threshold
};

struct RocResult {
    double auc = 0.5;
    std::vector<RocPoint> points;  // from (0, 0) at +inf to (1, 1)
};

/// Mann-Whitney AUC with ties counted one half, plus the ROC curve over the
/// unique score thresholds. Throws std::invalid_argument on length mismatch
/// or when labels hold a single class.
RocResult roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct WaicResult {
    double lppd = 0.0;
    double p_waic = 0.0;
    double waic = 0.0;
};

/// Streaming per-observation WAIC terms: a log-sum-exp of the log likelihood
/// and a Welford mean/variance, updated one draw at a time.
class WaicAccumulator {
public:
    WaicAccumulator() = default;
    explicit WaicAccumulator(std::size_t n_observations);

    std::size_t n_observations() const noexcept { return max_.size(); }
    std::size_t n_draws() const noexcept { return draws_; }

    /// Call once per retained draw, then add one value per observation.
    void begin_draw() { ++draws_; }
    void add(std::size_t observation, double loglik);

    /// Pools another accumulator over the same observations.
    void merge(const WaicAccumulator& other);

    WaicResult result() const;

    void write(std::ostream& out) const;
    static WaicAccumulator read(std::istream& in);

private:
    std::size_t draws_ = 0;
    std::vector<double> max_;      // running max of the log likelihood
    std::vector<double> scaled_;   // Σ exp(ll − max)
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// WAIC from a draws × observations matrix (row-major).
WaicResult waic(std::span<const double> loglik, std::size_t n_draws, std::size_t n_observations);

/// Mean squared difference. Throws std::invalid_argument on length mismatch
/// or empty input.
double brier(std::span<const double> probabilities, std::span<const std::uint8_t> labels);

/// Type-7 empirical quantile of unsorted values.
double quantile(std::vector<double> values, double p);

struct CoverageResult {
    std::vector<std::uint8_t> covered;
    std::vector<double> squared_error;
    std::vector<double> posterior_mean;
    double coverage = 0.0;
    double mse = 0.0;
};

/// Equal-tailed 95% interval coverage and squared error of the posterior
/// mean for each parameter's pooled draws against its true value.
CoverageResult expertise_coverage_mse(const std::vector<std::vector<double>>& draws,
                                      std::span<const double> truth, double level = 0.95);

/// Scores and labels restricted to the gold-standard cells.
void gold_cells(std::span<const double> scores, std::size_t n_species, const GoldStandard& gold,
                std::vector<double>& cell_scores, std::vector<std::uint8_t>& cell_labels);

struct EvaluationReport {
    RocResult model_roc;
    RocResult majority_roc;
    double brier = 0.0;
    double majority_brier = 0.0;
    bool has_waic = false;
    WaicResult waic;
    bool has_coverage = false;
    CoverageResult tpr;
    CoverageResult fpr;
    std::size_t n_cells = 0;
};

/// `key=value` lines, fixed order.
void write_report(std::ostream& out, const EvaluationReport& report);
/// `fpr,tpr,threshold` rows.
void write_roc(std::ostream& out, const RocResult& roc);

}  // namespace crowdlabel
