#include "crowdlabel/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crowdlabel {

double ess(std::span<const double> series) {
    const std::size_t n = series.size();
    if (n < 4) throw std::invalid_argument("ess needs at least 4 draws");
    double mean = 0.0;
    for (double x : series) mean += x;
    mean /= static_cast<double>(n);
    std::vector<double> centered(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = series[i] - mean;

    auto autocov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) s += centered[i] * centered[i + lag];
        return s / static_cast<double>(n);
    };
    const double c0 = autocov(0);
    if (!(c0 > 0.0)) return 0.0;

    double tau = -1.0;
    double previous_pair = INFINITY;
    for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
        double pair = (autocov(lag) + autocov(lag + 1)) / c0;
        if (pair <= 0.0) break;
        pair = std::min(pair, previous_pair);
        tau += 2.0 * pair;
        previous_pair = pair;
    }
    const double nd = static_cast<double>(n);
    if (tau <= 0.0) return nd;
    return std::min(nd, nd / tau);
}

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) throw std::invalid_argument("gelman_rubin needs at least 2 chains");
    const std::size_t n = chains.front().size();
    if (n < 4) throw std::invalid_argument("gelman_rubin needs chains of at least 4 draws");
    for (const auto& c : chains) {
        if (c.size() != n) throw std::invalid_argument("gelman_rubin needs equal-length chains");
    }
    const std::size_t half = n / 2;
    std::vector<double> means;
    std::vector<double> variances;
    for (const auto& c : chains) {
        for (std::size_t start : {std::size_t{0}, n - half}) {
            double m = 0.0;
            for (std::size_t i = 0; i < half; ++i) m += c[start + i];
            m /= static_cast<double>(half);
            double v = 0.0;
            for (std::size_t i = 0; i < half; ++i) v += (c[start + i] - m) * (c[start + i] - m);
            means.push_back(m);
            variances.push_back(v / static_cast<double>(half - 1));
        }
    }
    const double splits = static_cast<double>(means.size());
    double w = 0.0;
    for (double v : variances) w += v;
    w /= splits;
    if (!(w > 0.0)) throw std::domain_error("gelman_rubin: zero within-chain variance");
    double grand = 0.0;
    for (double m : means) grand += m;
    grand /= splits;
    double b_over_n = 0.0;
    for (double m : means) b_over_n += (m - grand) * (m - grand);
    b_over_n /= splits - 1.0;
    const double nd = static_cast<double>(half);
    return std::sqrt((nd - 1.0) / nd + b_over_n / w);
}

}  // namespace crowdlabel
