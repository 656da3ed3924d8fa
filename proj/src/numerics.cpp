#include "spheretime/numerics.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <queue>
#include <string>
#include <thread>
#include <vector>

namespace spheretime {

NotPositiveDefinite::NotPositiveDefinite(std::size_t pivot)
    : std::runtime_error("matrix is not positive definite (pivot " + std::to_string(pivot) + ")"),
      pivot_(pivot) {}

CholeskyResult try_cholesky(const Matrix& m) {
    const Eigen::Index n = m.rows();
    if (m.cols() != n) throw std::invalid_argument("cholesky needs a square matrix");
    CholeskyResult out;
    out.factor = Matrix::Zero(n, n);
    Matrix& l = out.factor;
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = m(j, j);
        for (Eigen::Index k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
        if (!(pivot > 0.0) || !std::isfinite(pivot)) {
            out.failed_pivot = static_cast<std::size_t>(j);
            return out;
        }
        const double ljj = std::sqrt(pivot);
        l(j, j) = ljj;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return out;
}

Matrix cholesky(const Matrix& m) {
    auto r = try_cholesky(m);
    if (!r.ok()) throw NotPositiveDefinite(*r.failed_pivot);
    return std::move(r.factor);
}

Matrix cholesky_with_jitter(const Matrix& m, bool* jittered) {
    if (jittered) *jittered = false;
    auto r = try_cholesky(m);
    if (r.ok()) return std::move(r.factor);
    const double ridge = 1e-10 * std::max(m.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    Matrix shifted = m;
    shifted.diagonal().array() += ridge;
    auto retry = try_cholesky(shifted);
    if (!retry.ok()) throw NotPositiveDefinite(*retry.failed_pivot);
    if (jittered) *jittered = true;
    return std::move(retry.factor);
}

Vector cholesky_solve(const Matrix& lower, const Vector& b) {
    const auto l = lower.triangularView<Eigen::Lower>();
    Vector y = l.solve(b);
    return l.transpose().solve(y);
}

Matrix cholesky_inverse(const Matrix& lower) {
    const auto n = lower.rows();
    Matrix inv = lower.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
    return inv.transpose() * inv;
}

double cholesky_logdet(const Matrix& lower) {
    return 2.0 * lower.diagonal().array().log().sum();
}

EigenBounds eigen_bounds(const Matrix& symmetric) {
    EigenBounds b;
    if (symmetric.rows() == 0) return b;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    b.min = ev.minCoeff();
    b.max = ev.maxCoeff();
    b.radius = std::max(std::abs(b.min), std::abs(b.max));
    return b;
}

double min_eigenvalue(const Matrix& symmetric) { return eigen_bounds(symmetric).min; }

namespace {

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

Panel integrate_panel(const std::function<double(double)>& f, double a, double b) {
    double err = 0.0;
    const double v =
        boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &err);
    return {a, b, v, err};
}

}  // namespace

QuadResult quad_detailed(const std::function<double(double)>& f, double a, double b, double tol,
                         int max_intervals) {
    if (a == b) return {};
    if (b < a) {
        auto r = quad_detailed(f, b, a, tol, max_intervals);
        r.value = -r.value;
        return r;
    }
    std::priority_queue<Panel> heap;
    Panel first = integrate_panel(f, a, b);
    double total = first.value;
    double error = first.error;
    heap.push(first);
    int intervals = 1;
    while (error > tol) {
        if (intervals >= max_intervals) {
            throw QuadratureError("quadrature did not converge on [" + std::to_string(a) + ", " +
                                  std::to_string(b) + "]: error estimate " +
                                  std::to_string(error));
        }
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            throw QuadratureError("quadrature panel collapsed below machine resolution");
        }
        Panel left = integrate_panel(f, worst.a, mid);
        Panel right = integrate_panel(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++intervals;
        if (!std::isfinite(total)) throw QuadratureError("non-finite integrand");
    }
    // re-sum to shed accumulated cancellation from the running updates
    double sum = 0.0, err = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {sum, err, intervals};
}

QuadratureRule gauss_legendre(int n, double a, double b) {
    if (n < 1) throw std::invalid_argument("gauss_legendre needs n >= 1");
    Matrix jacobi = Matrix::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double kk = static_cast<double>(k);
        const double off = kk / std::sqrt(4.0 * kk * kk - 1.0);
        jacobi(k, k - 1) = off;
        jacobi(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(jacobi);
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (int i = 0; i < n; ++i) {
        const double v0 = solver.eigenvectors()(0, i);
        rule.nodes[static_cast<std::size_t>(i)] = mid + half * solver.eigenvalues()(i);
        rule.weights[static_cast<std::size_t>(i)] = 2.0 * v0 * v0 * half;
    }
    return rule;
}

double erfc(double t) { return std::erfc(t); }

double log_erfc(double t) {
    if (t < 20.0) return std::log(std::erfc(t));
    // erfc(t) ~ exp(-t^2) / (t sqrt(pi)) * (1 - 1/(2t^2) + 3/(4t^4) - 15/(8t^6))
    const double inv2 = 1.0 / (t * t);
    const double series = 1.0 - 0.5 * inv2 + 0.75 * inv2 * inv2 - 1.875 * inv2 * inv2 * inv2;
    return -t * t - std::log(t * std::sqrt(std::numbers::pi)) + std::log(series);
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x5eedu};
    return std::mt19937_64(seq);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    const std::size_t workers =
        std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace spheretime
