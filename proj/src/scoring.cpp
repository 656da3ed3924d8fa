#include "spheretime/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace spheretime {

double crps_empirical(std::span<const double> draws, double y) {
    const std::size_t m = draws.size();
    if (m < 2) throw std::invalid_argument("CRPS needs at least two draws");
    std::vector<double> x(draws.begin(), draws.end());
    std::sort(x.begin(), x.end());
    // sum_{j<k} (x_(k) - x_(j)) = sum_i x_(i) (2i - M + 1), zero-based i
    double abs_dev = 0.0;
    double spread = 0.0;
    const double md = static_cast<double>(m);
    for (std::size_t i = 0; i < m; ++i) {
        abs_dev += std::abs(x[i] - y);
        spread += x[i] * (2.0 * static_cast<double>(i) - md + 1.0);
    }
    return abs_dev / md - spread / (md * md);
}

double crps_direct(std::span<const double> draws, double y) {
    const std::size_t m = draws.size();
    if (m < 2) throw std::invalid_argument("CRPS needs at least two draws");
    double a = 0.0;
    double b = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        a += std::abs(draws[j] - y);
        for (std::size_t k = 0; k < m; ++k) b += std::abs(draws[j] - draws[k]);
    }
    const double md = static_cast<double>(m);
    return a / md - b / (2.0 * md * md);
}

double crps_gaussian(double mu, double sigma, double y) {
    if (!(sigma > 0.0)) throw std::invalid_argument("CRPS needs sigma > 0");
    const double z = (y - mu) / sigma;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    return sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(std::numbers::pi));
}

ScoreReport score_model(const Matrix& draws, const Vector& observed, std::string model,
                        const ScoreReport* baseline, int threads) {
    const auto n = draws.rows();
    if (n == 0) throw std::invalid_argument("no hold-out sites to score");
    if (observed.size() != n) throw std::invalid_argument("observed values do not match draw rows");
    if (draws.cols() < 2) throw std::invalid_argument("need at least two predictive draws per site");

    std::vector<double> sq(static_cast<std::size_t>(n)), ab(sq.size()), crps(sq.size()), inside(sq.size());
    parallel_for(sq.size(), threads, [&](std::size_t i) {
        const auto r = static_cast<Eigen::Index>(i);
        std::vector<double> x(static_cast<std::size_t>(draws.cols()));
        for (Eigen::Index j = 0; j < draws.cols(); ++j) x[static_cast<std::size_t>(j)] = draws(r, j);
        const double y = observed(r);
        double mean = 0.0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());
        sq[i] = (mean - y) * (mean - y);
        ab[i] = std::abs(mean - y);
        crps[i] = crps_empirical(x, y);
        std::sort(x.begin(), x.end());
        inside[i] = (y >= quantile_sorted(x, 0.05) && y <= quantile_sorted(x, 0.95)) ? 1.0 : 0.0;
    });

    auto average = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    ScoreReport rep;
    rep.model = std::move(model);
    rep.n = sq.size();
    rep.prmse = std::sqrt(average(sq));
    rep.pmae = average(ab);
    rep.coverage90 = average(inside);
    rep.mean_crps = average(crps);
    rep.relative_crps = baseline != nullptr ? rep.mean_crps / baseline->mean_crps : 1.0;
    return rep;
}

void normalize_relative_crps(std::vector<ScoreReport>& reports) {
    if (reports.empty()) return;
    double best = reports.front().mean_crps;
    for (const auto& r : reports) best = std::min(best, r.mean_crps);
    for (auto& r : reports) r.relative_crps = r.mean_crps == best ? 1.0 : r.mean_crps / best;
}

std::string render_table(const std::vector<ScoreReport>& reports) {
    std::size_t width = 5;
    for (const auto& r : reports) width = std::max(width, r.model.size());
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-*s %8s %8s %8s %10s %8s\n", static_cast<int>(width), "model",
                  "PRMSE", "PMAE", "Cov90", "CRPS", "RelCRPS");
    out += line;
    for (const auto& r : reports) {
        std::snprintf(line, sizeof line, "%-*s %8.3f %8.3f %8.3f %10.4f %8.2f\n",
                      static_cast<int>(width), r.model.c_str(), r.prmse, r.pmae, r.coverage90,
                      r.mean_crps, r.relative_crps);
        out += line;
    }
    return out;
}

}  // namespace spheretime
