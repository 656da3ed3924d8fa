#pragma once

// Brute-force grid posteriors for the Gibbs full conditionals on tiny
// instances. Densities are assembled from the joint model directly: the
// likelihood, the priors, and an NNGP density whose (B, F) are recomputed
// here from the covariance function.

#include "spheretime/inference.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using namespace spheretime;

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double log_normal(double x, double mean, double var) {
    const double r = x - mean;
    return -0.5 * (kLog2Pi + std::log(var) + r * r / var);
}

inline double log_inverse_gamma(double x, double a, double b) {
    return -(a + 1.0) * std::log(x) - b / x;
}

/// Four sites with an intercept and one covariate, in reference order.
struct Instance {
    CovarianceModel unit{Family::SphereGneitingStieltjes, KernelParams{}};
    NeighborGraph graph;
    OrderedData data;
    PriorSpec prior;
    ChainState state;
};

inline Instance make_instance(int m) {
    KernelParams p;
    p.sigma2 = 1.0;
    p.c_s = 0.2;
    p.c_t = 2.0;
    p.alpha = 0.5;
    p.delta = 0.5;
    Instance in;
    in.unit = CovarianceModel(Family::SphereGneitingStieltjes, p);
    const std::vector<SpaceTimePoint> pts{{SpherePoint::from_latlon(-70, -120), 1.0},
                                          {SpherePoint::from_latlon(-65, -110), 1.0},
                                          {SpherePoint::from_latlon(-68, -100), 2.0},
                                          {SpherePoint::from_latlon(-72, -115), 3.0}};
    NeighborConfig cfg;
    cfg.scheme = NeighborScheme::lexicographic;
    cfg.m = m;
    in.graph = build_graph(pts, cfg);

    RegressionData rd;
    rd.points = pts;
    rd.y = Vector(Eigen::Vector4d(1.3, 0.2, -0.7, 2.1));
    rd.X.resize(4, 2);
    rd.X << 1, 0.5, 1, -1.0, 1, 1.5, 1, 0.3;
    in.data = reorder(rd, in.graph);

    in.prior.beta_mean = Vector(Eigen::Vector2d(0.5, -0.2));
    in.prior.beta_precision = 0.5 * Matrix::Identity(2, 2);
    in.prior.a_sigma2 = 2.0;
    in.prior.b_sigma2 = 1.0;
    in.prior.a_tau2 = 0.1;
    in.prior.b_tau2 = 0.1;

    in.state.beta = Vector(Eigen::Vector2d(0.4, 0.3));
    in.state.tau2 = 0.5;
    in.state.sigma2 = 1.7;
    in.state.params = p;
    in.state.w = Vector(Eigen::Vector4d(0.6, -0.4, 0.1, 1.2));
    return in;
}

/// log N(w | 0, sigma2 R) under the NNGP factorization, B and F from scratch.
inline double nngp_log_density(const Instance& in, const Vector& w, double sigma2) {
    const auto& g = in.graph;
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& nb = g.neighbors[i];
        const auto k = static_cast<Eigen::Index>(nb.size());
        double mean = 0.0;
        double var = in.unit(0.0, 0.0);
        if (k > 0) {
            Matrix cnn(k, k);
            Vector c(k);
            for (Eigen::Index a = 0; a < k; ++a) {
                c(a) = in.unit.between(g.reference[i], g.reference[nb[static_cast<std::size_t>(a)]]);
                for (Eigen::Index b = 0; b < k; ++b) {
                    cnn(a, b) = in.unit.between(g.reference[nb[static_cast<std::size_t>(a)]],
                                                g.reference[nb[static_cast<std::size_t>(b)]]);
                }
            }
            const Vector bvec = cnn.ldlt().solve(c);
            var -= bvec.dot(c);
            for (Eigen::Index a = 0; a < k; ++a) mean += bvec(a) * w(static_cast<Eigen::Index>(nb[static_cast<std::size_t>(a)]));
        }
        s += log_normal(w(static_cast<Eigen::Index>(i)), mean, sigma2 * var);
    }
    return s;
}

inline double log_likelihood(const Instance& in, const Vector& beta, double tau2, const Vector& w) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < in.data.y.size(); ++i) {
        s += log_normal(in.data.y(i), in.data.X.row(i).dot(beta) + w(i), tau2);
    }
    return s;
}

/// Range where logf is within 30 nats of its maximum on a dense scan.
inline std::pair<double, double> support(const std::function<double(double)>& logf, double lo, double hi,
                                         int n = 40000) {
    std::vector<double> v(static_cast<std::size_t>(n));
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        v[static_cast<std::size_t>(i)] = logf(lo + (hi - lo) * i / (n - 1));
        best = std::max(best, v[static_cast<std::size_t>(i)]);
    }
    int first = n - 1, last = 0;
    for (int i = 0; i < n; ++i) {
        if (v[static_cast<std::size_t>(i)] > best - 30) {
            first = std::min(first, i);
            last = std::max(last, i);
        }
    }
    const double step = (hi - lo) / (n - 1);
    return {lo + step * std::max(first - 1, 0), lo + step * std::min(last + 1, n - 1)};
}

/// Total variation between a histogram of `draws` and the grid mass of exp(logf).
inline double tv_1d(const std::vector<double>& draws, const std::function<double(double)>& logf, double lo,
                    double hi, int bins = 50, int sub = 200) {
    std::vector<double> mass(static_cast<std::size_t>(bins), 0.0);
    const double width = (hi - lo) / bins;
    double shift = -std::numeric_limits<double>::infinity();
    for (int b = 0; b < bins; ++b)
        for (int q = 0; q < sub; ++q) shift = std::max(shift, logf(lo + width * (b + (q + 0.5) / sub)));
    double total = 0.0;
    for (int b = 0; b < bins; ++b) {
        for (int q = 0; q < sub; ++q) mass[static_cast<std::size_t>(b)] += std::exp(logf(lo + width * (b + (q + 0.5) / sub)) - shift);
        total += mass[static_cast<std::size_t>(b)];
    }
    std::vector<double> hist(static_cast<std::size_t>(bins) + 1, 0.0);  // last slot: outside
    for (double x : draws) {
        const int b = static_cast<int>(std::floor((x - lo) / width));
        hist[static_cast<std::size_t>(b >= 0 && b < bins ? b : bins)] += 1.0;
    }
    double tv = hist.back() / static_cast<double>(draws.size());
    for (int b = 0; b < bins; ++b) {
        tv += std::abs(hist[static_cast<std::size_t>(b)] / static_cast<double>(draws.size()) -
                       mass[static_cast<std::size_t>(b)] / total);
    }
    return 0.5 * tv;
}

inline double tv_beta(std::uint64_t seed, int n_draws) {
    const Instance in = make_instance(2);
    auto logf = [&](double b0, double b1) {
        const Vector beta = Vector(Eigen::Vector2d(b0, b1));
        const Vector dm = beta - in.prior.beta_mean;
        return log_likelihood(in, beta, in.state.tau2, in.state.w) - 0.5 * dm.dot(in.prior.beta_precision * dm);
    };
    // marginal supports from axis scans through a coarse mode
    double m0 = 0, m1 = 0, best = -std::numeric_limits<double>::infinity();
    for (double b0 = -20; b0 <= 20; b0 += 0.05)
        for (double b1 = -20; b1 <= 20; b1 += 0.05)
            if (const double v = logf(b0, b1); v > best) best = v, m0 = b0, m1 = b1;
    const int bins = 20, sub = 12;
    const double half = 6.0;
    double lo0 = m0 - half, hi0 = m0 + half, lo1 = m1 - half, hi1 = m1 + half;
    {
        // shrink the box to where the density is not negligible
        const auto s0 = support([&](double x) {
            double mx = -std::numeric_limits<double>::infinity();
            for (double y = lo1; y <= hi1; y += 0.02) mx = std::max(mx, logf(x, y));
            return mx;
        }, lo0, hi0, 600);
        const auto s1 = support([&](double y) {
            double mx = -std::numeric_limits<double>::infinity();
            for (double x = lo0; x <= hi0; x += 0.02) mx = std::max(mx, logf(x, y));
            return mx;
        }, lo1, hi1, 600);
        lo0 = s0.first, hi0 = s0.second, lo1 = s1.first, hi1 = s1.second;
    }
    const double w0 = (hi0 - lo0) / bins, w1 = (hi1 - lo1) / bins;
    std::vector<double> mass(bins * bins, 0.0);
    double total = 0.0;
    for (int a = 0; a < bins; ++a)
        for (int b = 0; b < bins; ++b) {
            double s = 0.0;
            for (int qa = 0; qa < sub; ++qa)
                for (int qb = 0; qb < sub; ++qb)
                    s += std::exp(logf(lo0 + w0 * (a + (qa + 0.5) / sub), lo1 + w1 * (b + (qb + 0.5) / sub)) - best);
            mass[static_cast<std::size_t>(a * bins + b)] = s;
            total += s;
        }
    std::mt19937_64 rng(seed);
    std::vector<double> hist(bins * bins + 1, 0.0);
    for (int k = 0; k < n_draws; ++k) {
        const Vector beta = gibbs_beta(in.state, in.data, in.prior, rng);
        const int a = static_cast<int>(std::floor((beta(0) - lo0) / w0));
        const int b = static_cast<int>(std::floor((beta(1) - lo1) / w1));
        const bool inside = a >= 0 && a < bins && b >= 0 && b < bins;
        hist[static_cast<std::size_t>(inside ? a * bins + b : bins * bins)] += 1.0;
    }
    double tv = hist.back() / n_draws;
    for (int c = 0; c < bins * bins; ++c) tv += std::abs(hist[static_cast<std::size_t>(c)] / n_draws - mass[static_cast<std::size_t>(c)] / total);
    return 0.5 * tv;
}

// Variances are binned on the log scale, where the density gains a factor x.
inline double tv_log_scale(const std::vector<double>& draws, const std::function<double(double)>& log_density) {
    auto logv = [&](double v) { return log_density(std::exp(v)) + v; };
    const auto [lo, hi] = support(logv, -25, 25);
    std::vector<double> logs(draws.size());
    std::transform(draws.begin(), draws.end(), logs.begin(), [](double x) { return std::log(x); });
    return tv_1d(logs, logv, lo, hi);
}

inline double tv_tau2(std::uint64_t seed, int n_draws) {
    const Instance in = make_instance(2);
    std::mt19937_64 rng(seed);
    std::vector<double> draws(static_cast<std::size_t>(n_draws));
    for (auto& x : draws) x = gibbs_tau2(in.state, in.data, in.prior, rng);
    return tv_log_scale(draws, [&](double t) {
        return log_likelihood(in, in.state.beta, t, in.state.w) + log_inverse_gamma(t, in.prior.a_tau2, in.prior.b_tau2);
    });
}

inline double tv_sigma2(std::uint64_t seed, int n_draws) {
    const Instance in = make_instance(2);
    const auto unit = compute_factors(in.graph, in.unit);
    std::mt19937_64 rng(seed);
    std::vector<double> draws(static_cast<std::size_t>(n_draws));
    for (auto& x : draws) x = gibbs_sigma2(in.state, in.graph, unit, in.prior, rng);
    return tv_log_scale(draws, [&](double s2) {
        return nngp_log_density(in, in.state.w, s2) + log_inverse_gamma(s2, in.prior.a_sigma2, in.prior.b_sigma2);
    });
}

/// Site `i` (reference order) has neighbors and appears in later neighbor sets.
inline double tv_w(std::uint64_t seed, int n_draws, std::size_t i = 1) {
    const Instance in = make_instance(2);
    const auto unit = compute_factors(in.graph, in.unit);
    const auto c = w_conditional(in.state, in.data, in.graph, unit, i);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> draws(static_cast<std::size_t>(n_draws));
    for (auto& x : draws) x = c.mean + std::sqrt(c.variance) * z(rng);
    auto logf = [&](double v) {
        Vector w = in.state.w;
        w(static_cast<Eigen::Index>(i)) = v;
        return log_likelihood(in, in.state.beta, in.state.tau2, w) + nngp_log_density(in, w, in.state.sigma2);
    };
    const auto [lo, hi] = support(logf, -30, 30);
    return tv_1d(draws, logf, lo, hi);
}

}  // namespace oracle
