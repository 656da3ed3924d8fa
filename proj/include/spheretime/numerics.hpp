#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace spheretime {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a Cholesky pivot is not strictly positive.
class NotPositiveDefinite : public std::runtime_error {
public:
    explicit NotPositiveDefinite(std::size_t pivot);
    [[nodiscard]] std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CholeskyResult {
    Matrix factor;                           // lower triangular, valid when ok()
    std::optional<std::size_t> failed_pivot; // zero-based

    [[nodiscard]] bool ok() const noexcept { return !failed_pivot.has_value(); }
};

/// Left-looking Cholesky of the lower triangle of `m`. Never jitters.
CholeskyResult try_cholesky(const Matrix& m);

/// Throws NotPositiveDefinite on failure.
Matrix cholesky(const Matrix& m);

/// Model-fitting variant: on failure retries once with 1e-10 * max(diag) added
/// to the diagonal. `jittered` reports whether the retry was needed.
Matrix cholesky_with_jitter(const Matrix& m, bool* jittered = nullptr);

/// Solves (L L^T) x = b given the lower factor L.
Vector cholesky_solve(const Matrix& lower, const Vector& b);

/// (L L^T)^{-1} from the lower factor.
Matrix cholesky_inverse(const Matrix& lower);

/// log det(L L^T) from the lower factor.
double cholesky_logdet(const Matrix& lower);

struct EigenBounds {
    double min = 0.0;
    double max = 0.0;
    double radius = 0.0;  // max |eigenvalue|
};

EigenBounds eigen_bounds(const Matrix& symmetric);
double min_eigenvalue(const Matrix& symmetric);

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // estimated absolute error
    int intervals = 0;
};

/// Globally adaptive 7/15-point Gauss-Kronrod on [a, b] targeting an absolute
/// error of `tol`. Throws QuadratureError after `max_intervals` subdivisions.
QuadResult quad_detailed(const std::function<double(double)>& f, double a, double b, double tol,
                         int max_intervals = 4000);

inline double quad(const std::function<double(double)>& f, double a, double b, double tol) {
    return quad_detailed(f, a, b, tol).value;
}

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule mapped to [a, b] (Golub-Welsch).
QuadratureRule gauss_legendre(int n, double a, double b);

/// Complementary error function; negative arguments use erfc(t) = 2 - erfc(-t).
double erfc(double t);

/// log(erfc(t)) without underflow for large positive t.
double log_erfc(double t);

/// Type-7 (linear interpolation) quantile of ascending `sorted`, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

/// Independent generator for stream `index` of a seeded family.
std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t index);

/// Runs body(i) for i in [0, n) on up to `threads` workers (contiguous blocks).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace spheretime
