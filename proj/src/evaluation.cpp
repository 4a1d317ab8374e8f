#include "crowdlabel/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "crowdlabel/errors.hpp"
#include "crowdlabel/format.hpp"
#include "csv.hpp"

namespace crowdlabel {

std::vector<double> majority_vote(const AnnotationTensor& tensor) {
    const std::size_t n_species = tensor.n_species();
    std::vector<double> scores(tensor.n_recordings() * n_species, 0.0);
    for (std::size_t i = 0; i < tensor.n_recordings(); ++i) {
        for (std::size_t k = 0; k < n_species; ++k) {
            const auto votes = tensor.votes(i, k);
            if (votes.empty()) continue;
            std::size_t positive = 0;
            for (const auto& v : votes) positive += v.label;
            scores[i * n_species + k] =
                static_cast<double>(positive) / static_cast<double>(votes.size());
        }
    }
    return scores;
}

RocResult roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw std::invalid_argument("roc_auc: length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (auto l : labels) n_pos += l ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("roc_auc: labels hold a single class");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult result;
    result.points.push_back(RocPoint{0.0, 0.0, INFINITY});
    // Walking tie groups from the top score down: each positive in a group
    // beats every negative below the group and ties with the group's negatives.
    double concordant = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (std::size_t start = 0; start < n;) {
        std::size_t end = start;
        std::size_t group_pos = 0;
        std::size_t group_neg = 0;
        while (end < n && scores[order[end]] == scores[order[start]]) {
            if (labels[order[end]]) ++group_pos; else ++group_neg;
            ++end;
        }
        const std::size_t neg_below = n_neg - fp - group_neg;
        concordant += static_cast<double>(group_pos) *
                      (static_cast<double>(neg_below) + 0.5 * static_cast<double>(group_neg));
        tp += group_pos;
        fp += group_neg;
        result.points.push_back(RocPoint{static_cast<double>(fp) / static_cast<double>(n_neg),
                                         static_cast<double>(tp) / static_cast<double>(n_pos),
                                         scores[order[start]]});
        start = end;
    }
    result.auc = concordant / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return result;
}

WaicAccumulator::WaicAccumulator(std::size_t n_observations)
    : max_(n_observations, -INFINITY),
      scaled_(n_observations, 0.0),
      mean_(n_observations, 0.0),
      m2_(n_observations, 0.0) {}

void WaicAccumulator::add(std::size_t obs, double ll) {
    if (ll > max_[obs]) {
        scaled_[obs] = scaled_[obs] * std::exp(max_[obs] - ll) + 1.0;
        max_[obs] = ll;
    } else {
        scaled_[obs] += std::exp(ll - max_[obs]);
    }
    const double delta = ll - mean_[obs];
    mean_[obs] += delta / static_cast<double>(draws_);
    m2_[obs] += delta * (ll - mean_[obs]);
}

void WaicAccumulator::merge(const WaicAccumulator& other) {
    if (other.n_observations() != n_observations()) {
        throw InvariantError("merging WAIC accumulators over different observations");
    }
    if (other.draws_ == 0) return;
    if (draws_ == 0) {
        *this = other;
        return;
    }
    const double na = static_cast<double>(draws_);
    const double nb = static_cast<double>(other.draws_);
    for (std::size_t o = 0; o < n_observations(); ++o) {
        const double m = std::max(max_[o], other.max_[o]);
        scaled_[o] = scaled_[o] * std::exp(max_[o] - m) + other.scaled_[o] * std::exp(other.max_[o] - m);
        max_[o] = m;
        const double delta = other.mean_[o] - mean_[o];
        mean_[o] += delta * nb / (na + nb);
        m2_[o] += other.m2_[o] + delta * delta * na * nb / (na + nb);
    }
    draws_ += other.draws_;
}

WaicResult WaicAccumulator::result() const {
    if (n_observations() == 0 || draws_ == 0) throw std::invalid_argument("waic: empty input");
    WaicResult r;
    const double s = static_cast<double>(draws_);
    for (std::size_t o = 0; o < n_observations(); ++o) {
        r.lppd += max_[o] + std::log(scaled_[o] / s);
        if (draws_ > 1) r.p_waic += m2_[o] / (s - 1.0);
    }
    r.waic = -2.0 * (r.lppd - r.p_waic);
    return r;
}

void WaicAccumulator::write(std::ostream& out) const {
    out << "draws," << draws_ << '\n';
    out << "observation,max,scaled_sum,mean,m2\n";
    for (std::size_t o = 0; o < n_observations(); ++o) {
        out << o << ',' << format_double(max_[o]) << ',' << format_double(scaled_[o]) << ','
            << format_double(mean_[o]) << ',' << format_double(m2_[o]) << '\n';
    }
}

WaicAccumulator WaicAccumulator::read(std::istream& in) {
    csv::Reader reader(in, "waic accumulator");
    std::vector<std::string> f;
    if (!reader.next(f) || f.size() != 2 || f[0] != "draws") reader.fail("expected draws line");
    const auto draws = reader.parse_index(f[1], "draws");
    reader.expect_header({"observation", "max", "scaled_sum", "mean", "m2"});
    WaicAccumulator acc;
    acc.draws_ = draws;
    while (reader.next(f)) {
        if (f.size() != 5) reader.fail("expected 5 fields");
        if (reader.parse_index(f[0], "observation") != acc.max_.size()) {
            reader.fail("observations must be dense and in order");
        }
        acc.max_.push_back(reader.parse_double(f[1], "max"));
        acc.scaled_.push_back(reader.parse_double(f[2], "scaled_sum"));
        acc.mean_.push_back(reader.parse_double(f[3], "mean"));
        acc.m2_.push_back(reader.parse_double(f[4], "m2"));
    }
    return acc;
}

WaicResult waic(std::span<const double> loglik, std::size_t n_draws, std::size_t n_observations) {
    if (n_draws == 0 || n_observations == 0 || loglik.size() != n_draws * n_observations) {
        throw std::invalid_argument("waic: empty or misshapen matrix");
    }
    WaicResult r;
    const double s = static_cast<double>(n_draws);
    for (std::size_t o = 0; o < n_observations; ++o) {
        double m = -INFINITY;
        for (std::size_t d = 0; d < n_draws; ++d) m = std::max(m, loglik[d * n_observations + o]);
        double sum = 0.0;
        double mean = 0.0;
        for (std::size_t d = 0; d < n_draws; ++d) {
            const double v = loglik[d * n_observations + o];
            sum += std::exp(v - m);
            mean += v;
        }
        mean /= s;
        r.lppd += m + std::log(sum / s);
        if (n_draws > 1) {
            double var = 0.0;
            for (std::size_t d = 0; d < n_draws; ++d) {
                const double v = loglik[d * n_observations + o] - mean;
                var += v * v;
            }
            r.p_waic += var / (s - 1.0);
        }
    }
    r.waic = -2.0 * (r.lppd - r.p_waic);
    return r;
}

double brier(std::span<const double> probabilities, std::span<const std::uint8_t> labels) {
    if (probabilities.size() != labels.size()) throw std::invalid_argument("brier: length mismatch");
    if (probabilities.empty()) throw std::invalid_argument("brier: empty input");
    double total = 0.0;
    for (std::size_t n = 0; n < labels.size(); ++n) {
        const double d = probabilities[n] - static_cast<double>(labels[n]);
        total += d * d;
    }
    return total / static_cast<double>(labels.size());
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile: empty input");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CoverageResult expertise_coverage_mse(const std::vector<std::vector<double>>& draws,
                                      std::span<const double> truth, double level) {
    if (draws.size() != truth.size()) throw std::invalid_argument("coverage: length mismatch");
    CoverageResult r;
    const double tail = 0.5 * (1.0 - level);
    for (std::size_t j = 0; j < draws.size(); ++j) {
        const auto& d = draws[j];
        if (d.empty()) throw std::invalid_argument("coverage: parameter without draws");
        const double lo = quantile(d, tail);
        const double hi = quantile(d, 1.0 - tail);
        const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
        r.covered.push_back(truth[j] >= lo && truth[j] <= hi ? 1 : 0);
        r.posterior_mean.push_back(mean);
        r.squared_error.push_back((mean - truth[j]) * (mean - truth[j]));
    }
    if (!draws.empty()) {
        const double n = static_cast<double>(draws.size());
        r.coverage = std::accumulate(r.covered.begin(), r.covered.end(), 0.0) / n;
        r.mse = std::accumulate(r.squared_error.begin(), r.squared_error.end(), 0.0) / n;
    }
    return r;
}

void gold_cells(std::span<const double> scores, std::size_t n_species, const GoldStandard& gold,
                std::vector<double>& cell_scores, std::vector<std::uint8_t>& cell_labels) {
    cell_scores.clear();
    cell_labels.clear();
    for (const auto& g : gold.labels) {
        const std::size_t idx = static_cast<std::size_t>(g.recording) * n_species + g.species;
        if (idx >= scores.size()) throw DataError("gold-standard cell outside the score matrix");
        cell_scores.push_back(scores[idx]);
        cell_labels.push_back(g.label);
    }
}

namespace {

void write_coverage(std::ostream& out, const char* prefix, const CoverageResult& c) {
    out << prefix << "_coverage=" << format_double(c.coverage) << '\n';
    out << prefix << "_mse=" << format_double(c.mse) << '\n';
}

}  // namespace

void write_report(std::ostream& out, const EvaluationReport& r) {
    out << "cells=" << r.n_cells << '\n';
    out << "auc=" << format_double(r.model_roc.auc) << '\n';
    out << "mv_auc=" << format_double(r.majority_roc.auc) << '\n';
    out << "brier=" << format_double(r.brier) << '\n';
    out << "mv_brier=" << format_double(r.majority_brier) << '\n';
    if (r.has_waic) {
        out << "lppd=" << format_double(r.waic.lppd) << '\n';
        out << "p_waic=" << format_double(r.waic.p_waic) << '\n';
        out << "waic=" << format_double(r.waic.waic) << '\n';
    }
    if (r.has_coverage) {
        write_coverage(out, "tpr", r.tpr);
        write_coverage(out, "fpr", r.fpr);
    }
}

void write_roc(std::ostream& out, const RocResult& roc) {
    out << "fpr,tpr,threshold\n";
    for (const auto& p : roc.points) {
        out << format_double(p.fpr) << ',' << format_double(p.tpr) << ','
            << format_double(p.threshold) << '\n';
    }
}

}  // namespace crowdlabel
