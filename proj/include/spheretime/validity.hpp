#pragma once

#include "spheretime/geometry.hpp"
#include "spheretime/kernels.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace spheretime {

/// C(theta, u) with theta the great-circle angle.
using SpaceTimeKernel = std::function<double(double theta, double u)>;

SpaceTimeKernel as_kernel(const CovarianceModel& model);

/// Gegenbauer polynomials of order (d - 1) / 2, orthonormal in
/// L2([0, pi], sin^{d-1}(theta) d theta) after the substitution x = cos(theta).
/// d = 1 degenerates to the Chebyshev basis.
class GegenbauerBasis {
public:
    GegenbauerBasis(int d, int max_k);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    [[nodiscard]] double order() const noexcept { return 0.5 * (dim_ - 1); }
    [[nodiscard]] int max_k() const noexcept { return max_k_; }

    [[nodiscard]] double operator()(int k, double x) const;

    /// G_0(x), ..., G_{max_k}(x).
    [[nodiscard]] std::vector<double> values(double x) const;

    /// sin^{d-1}(theta)
    [[nodiscard]] double weight(double theta) const;

private:
    int dim_;
    int max_k_;
    std::vector<double> inv_norm_;
};

enum class Verdict { certified_at_tested_scale, refuted };

std::string_view verdict_name(Verdict v);

struct Witness {
    std::string kind;                   // gram | coefficient | toeplitz | fourier
    std::vector<SpaceTimePoint> points; // gram witnesses only
    double eigenvalue = 0.0;            // offending eigenvalue or coefficient
    double radius = 0.0;
    int degree = -1;
    double tau = 0.0;
};

struct PDReport {
    std::string method;
    Verdict verdict = Verdict::certified_at_tested_scale;
    std::optional<Witness> witness;
    int trials = 0;
    // smallest (min eigenvalue / spectral radius) seen; infinity when nothing was measured
    double min_eig_ratio = std::numeric_limits<double>::infinity();
    std::vector<std::string> notes;

    [[nodiscard]] bool refuted() const noexcept { return verdict == Verdict::refuted; }
};

/// b_{k,d}(u) by adaptive quadrature.
double gegenbauer_transform(const SpaceTimeKernel& kernel, const GegenbauerBasis& basis, int k,
                            double u, double tol = 1e-9);

/// b_{0,d}(u), ..., b_{K,d}(u).
std::vector<double> gegenbauer_coefficients(const SpaceTimeKernel& kernel,
                                            const GegenbauerBasis& basis, double u,
                                            double tol = 1e-9);

/// Truncated expansion sum_k b_k G_k(cos theta).
double schoenberg_sum(const std::vector<double>& coefficients, const GegenbauerBasis& basis,
                      double theta);

struct SchoenbergOptions {
    int dim = 2;
    int max_k = 60;
    int lag_points = 64;
    double lag_step = 0.0;  // 0 selects 10 * c_t / (lag_points - 1)
    double quad_tol = 1e-9;
    double rel_tol = 1e-8;
};

/// Nonnegativity of b_k(0) and positive semidefiniteness of the Toeplitz
/// matrices [b_k(|u_i - u_j|)] for every k <= max_k.
PDReport check_schoenberg(const SpaceTimeKernel& kernel, const SchoenbergOptions& opts);
PDReport check_schoenberg(const CovarianceModel& model, SchoenbergOptions opts = {});

struct FourierOptions {
    int dim = 2;
    int max_k = 30;
    std::vector<double> taus;  // empty selects {0, 0.25, 0.5, 1, 2, 4} / c_t
    double window = 0.0;       // 0 selects 50 * c_t
    int theta_nodes = 160;
    double quad_tol = 1e-9;
    double rel_tol = 1e-8;
};

struct FourierSpectrum {
    double tau = 0.0;
    std::vector<double> thetas;
    std::vector<double> values;         // C_tau(theta) at the Gauss-Legendre nodes
    std::vector<double> coefficients;   // Gegenbauer coefficients of C_tau
    double at_origin = 0.0;             // C_tau(0)
    double imaginary = 0.0;             // |Im C_tau(0)| over the symmetric window
};

class TailMassError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// C_tau(theta) = int e^{-i u tau} C(theta, u) du, evaluated as twice the cosine
/// transform: adaptive quadrature on [0, window] plus a double-exponential
/// semi-infinite tail. Throws TailMassError when the tail does not converge.
FourierSpectrum temporal_spectrum(const SpaceTimeKernel& kernel, double tau,
                                  const FourierOptions& opts);

PDReport check_temporal_fourier(const SpaceTimeKernel& kernel, const FourierOptions& opts);
PDReport check_temporal_fourier(const CovarianceModel& model, FourierOptions opts = {});

struct GramOptions {
    int n_points = 200;
    int n_trials = 20;
    std::uint64_t seed = 1;
    int dim = 2;
    double time_span = 10.0;
    double rel_tol = 1e-8;
    int threads = 1;
};

/// n_points uniform on S^dim x [0, time_span]; stream `trial` of `seed`.
std::vector<SpaceTimePoint> sample_space_time(int n_points, int dim, double time_span,
                                              std::mt19937_64& rng);

PDReport gram_eig_check(const CovarianceModel& model, const GramOptions& opts);

}  // namespace spheretime
