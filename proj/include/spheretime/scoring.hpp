#pragma once

#include "spheretime/numerics.hpp"

#include <span>
#include <string>
#include <vector>

namespace spheretime {

/// (1/M) sum |Y_j - y| - (1/(2M^2)) sum_j sum_k |Y_j - Y_k|, evaluated in
/// O(M log M) from the sorted sample.
double crps_empirical(std::span<const double> draws, double y);

/// The same estimator by the literal double sum; O(M^2).
double crps_direct(std::span<const double> draws, double y);

/// Closed form for a N(mu, sigma^2) predictive distribution.
double crps_gaussian(double mu, double sigma, double y);

struct ScoreReport {
    std::string model;
    std::size_t n = 0;
    double prmse = 0.0;       // root mean squared error of predictive means
    double pmae = 0.0;
    double coverage90 = 0.0;  // y inside the type-7 (5%, 95%) draw quantiles
    double mean_crps = 0.0;
    double relative_crps = 1.0;
};

/// `draws` has one row per hold-out site and at least two columns.
ScoreReport score_model(const Matrix& draws, const Vector& observed, std::string model = {},
                        const ScoreReport* baseline = nullptr, int threads = 1);

/// Rescales relative_crps so that the lowest mean CRPS is exactly one.
void normalize_relative_crps(std::vector<ScoreReport>& reports);

/// Fixed-width text table with one row per model.
std::string render_table(const std::vector<ScoreReport>& reports);

}  // namespace spheretime
