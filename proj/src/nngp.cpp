#include "spheretime/nngp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace spheretime {

namespace {

constexpr double kSameSite = 1e-12;

struct RankedBlock {
    std::size_t begin;
    std::size_t end;
};

struct Candidate {
    double dist;
    std::size_t index;
};

double spatial_distance(SpatialMetric metric, const SpherePoint& a, const SpherePoint& b) {
    return metric == SpatialMetric::chordal ? chordal(a, b) : great_circle(a, b);
}

// Picks `budget` indices from time-ranked blocks. The rectangular scheme first
// takes m_s nearest from each of the first m_t blocks; any shortfall is filled in
// (time rank, spatial distance, index) order, which is the whole lexicographic scheme.
std::vector<std::size_t> select_neighbors(const NeighborGraph& graph, const SpherePoint& site,
                                          const std::vector<RankedBlock>& ranked,
                                          std::size_t budget) {
    std::size_t total = 0;
    for (const auto& b : ranked) total += b.end - b.begin;

    std::vector<std::size_t> chosen;
    if (total <= budget) {
        chosen.reserve(total);
        for (const auto& b : ranked) {
            for (std::size_t j = b.begin; j < b.end; ++j) chosen.push_back(j);
        }
        std::sort(chosen.begin(), chosen.end());
        return chosen;
    }

    const auto& cfg = graph.config;
    std::vector<std::vector<Candidate>> sorted(ranked.size());
    std::vector<std::size_t> taken(ranked.size(), 0);
    auto ensure_sorted = [&](std::size_t b) {
        auto& list = sorted[b];
        if (!list.empty() || ranked[b].begin == ranked[b].end) return;
        list.reserve(ranked[b].end - ranked[b].begin);
        for (std::size_t j = ranked[b].begin; j < ranked[b].end; ++j) {
            list.push_back({spatial_distance(cfg.metric, site, graph.reference[j].location), j});
        }
        std::sort(list.begin(), list.end(), [](const Candidate& x, const Candidate& y) {
            return x.dist != y.dist ? x.dist < y.dist : x.index < y.index;
        });
    };

    chosen.reserve(budget);
    if (cfg.scheme == NeighborScheme::rectangular) {
        const std::size_t n_blocks = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(cfg.m_t));
        for (std::size_t b = 0; b < n_blocks && chosen.size() < budget; ++b) {
            ensure_sorted(b);
            const std::size_t take = std::min({static_cast<std::size_t>(cfg.m_s), sorted[b].size(),
                                               budget - chosen.size()});
            for (std::size_t q = 0; q < take; ++q) chosen.push_back(sorted[b][q].index);
            taken[b] = take;
        }
    }
    for (std::size_t b = 0; b < ranked.size() && chosen.size() < budget; ++b) {
        ensure_sorted(b);
        while (taken[b] < sorted[b].size() && chosen.size() < budget) {
            chosen.push_back(sorted[b][taken[b]++].index);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace

NeighborGraph build_graph(std::span<const SpaceTimePoint> points, const NeighborConfig& config) {
    if (config.budget() < 1 ||
        (config.scheme == NeighborScheme::rectangular && (config.m_s < 1 || config.m_t < 1))) {
        throw NNGPError("neighbor budget must be >= 1");
    }
    NeighborGraph g;
    g.config = config;
    const std::size_t n = points.size();

    g.order.resize(n);
    std::iota(g.order.begin(), g.order.end(), std::size_t{0});
    std::stable_sort(g.order.begin(), g.order.end(), [&](std::size_t a, std::size_t b) {
        return time_major_less(points[a], points[b]);
    });
    g.reference.reserve(n);
    for (std::size_t idx : g.order) g.reference.push_back(points[idx]);

    for (std::size_t i = 0; i < n; ++i) {
        if (g.blocks.empty() || g.reference[i].time != g.blocks.back().time) {
            g.blocks.push_back({g.reference[i].time, i, i + 1});
        } else {
            g.blocks.back().end = i + 1;
        }
    }
    for (const auto& b : g.blocks) {
        for (std::size_t i = b.begin + 1; i < b.end; ++i) {
            if (chordal(g.reference[i - 1].location, g.reference[i].location) < kSameSite) {
                throw NNGPError("duplicate space-time point (inputs " +
                                std::to_string(g.order[i - 1]) + " and " +
                                std::to_string(g.order[i]) + ")");
            }
        }
    }

    const auto budget = static_cast<std::size_t>(config.budget());
    g.neighbors.resize(n);
    std::size_t block = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (g.blocks[block].end <= i) ++block;
        std::vector<RankedBlock> ranked;
        ranked.reserve(block + 1);
        if (g.blocks[block].begin < i) ranked.push_back({g.blocks[block].begin, i});
        for (std::size_t b = block; b-- > 0;) ranked.push_back({g.blocks[b].begin, g.blocks[b].end});
        g.neighbors[i] = select_neighbors(g, g.reference[i].location, ranked, budget);
    }

    g.inverse.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t slot = 0; slot < g.neighbors[j].size(); ++slot) {
            g.inverse[g.neighbors[j][slot]].push_back({j, slot});
        }
    }
    return g;
}

NNGPFactors compute_factors(const NeighborGraph& graph, const CovarianceModel& model, bool jitter,
                            int threads) {
    const std::size_t n = graph.size();
    NNGPFactors f;
    f.B.resize(n);
    f.F.resize(n);
    const double c00 = model.variance();
    parallel_for(n, threads, [&](std::size_t i) {
        const auto& nb = graph.neighbors[i];
        const auto k = static_cast<Eigen::Index>(nb.size());
        if (k == 0) {
            f.B[i] = Vector();
            f.F[i] = c00;
            return;
        }
        Matrix cn(k, k);
        Vector c(k);
        const auto& site = graph.reference[i];
        for (Eigen::Index a = 0; a < k; ++a) {
            const auto& pa = graph.reference[nb[static_cast<std::size_t>(a)]];
            c(a) = model.between(site, pa);
            cn(a, a) = c00;
            for (Eigen::Index b = 0; b < a; ++b) {
                const double v = model.between(pa, graph.reference[nb[static_cast<std::size_t>(b)]]);
                cn(a, b) = v;
                cn(b, a) = v;
            }
        }
        Matrix l;
        if (jitter) {
            l = cholesky_with_jitter(cn);
        } else {
            auto r = try_cholesky(cn);
            if (!r.ok()) {
                throw NNGPError("neighbor covariance of site " + std::to_string(i) +
                                " is not positive definite (pivot " +
                                std::to_string(*r.failed_pivot) + ")");
            }
            l = std::move(r.factor);
        }
        f.B[i] = cholesky_solve(l, c);
        double cond = c00 - f.B[i].dot(c);
        if (!(cond > 0.0)) {
            if (!jitter) {
                throw NNGPError("non-positive conditional variance at site " + std::to_string(i));
            }
            cond = 1e-10 * c00;
        }
        f.F[i] = cond;
    });
    return f;
}

Vector nngp_residuals(const NNGPFactors& factors, const NeighborGraph& graph, const Vector& w) {
    const auto n = static_cast<Eigen::Index>(graph.size());
    if (w.size() != n) throw NNGPError("w has the wrong length");
    Vector r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& nb = graph.neighbors[static_cast<std::size_t>(i)];
        const Vector& b = factors.B[static_cast<std::size_t>(i)];
        double mean = 0.0;
        for (std::size_t q = 0; q < nb.size(); ++q) {
            mean += b(static_cast<Eigen::Index>(q)) * w(static_cast<Eigen::Index>(nb[q]));
        }
        r(i) = w(i) - mean;
    }
    return r;
}

double nngp_logpdf_scaled(const NNGPFactors& factors, const NeighborGraph& graph, const Vector& w,
                          double variance_scale) {
    const Vector r = nngp_residuals(factors, graph, w);
    constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    double total = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double f = variance_scale * factors.F[static_cast<std::size_t>(i)];
        total += -0.5 * (kLog2Pi + std::log(f)) - 0.5 * r(i) * r(i) / f;
    }
    return total;
}

double nngp_logpdf(const NNGPFactors& factors, const NeighborGraph& graph, const Vector& w) {
    return nngp_logpdf_scaled(factors, graph, w, 1.0);
}

std::vector<std::size_t> prediction_neighbors(const NeighborGraph& graph,
                                              const SpaceTimePoint& target, PredictionMode mode,
                                              int m) {
    std::vector<std::pair<double, std::size_t>> order;  // (|lag|, block)
    for (std::size_t b = 0; b < graph.blocks.size(); ++b) {
        const double t = graph.blocks[b].time;
        if (mode == PredictionMode::prospective && t > target.time) continue;
        order.emplace_back(std::abs(t - target.time), b);
    }
    std::stable_sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first < y.first;
        return graph.blocks[x.second].time < graph.blocks[y.second].time;
    });
    std::vector<RankedBlock> ranked;
    ranked.reserve(order.size());
    for (const auto& [lag, b] : order) ranked.push_back({graph.blocks[b].begin, graph.blocks[b].end});
    const auto budget = static_cast<std::size_t>(m > 0 ? m : graph.config.budget());
    return select_neighbors(graph, target.location, ranked, budget);
}

KrigingWeights kriging_weights(const CovarianceModel& model, const NeighborGraph& graph,
                               const SpaceTimePoint& target,
                               std::span<const std::size_t> neighbors) {
    KrigingWeights out;
    const double c00 = model.variance();
    const auto k = static_cast<Eigen::Index>(neighbors.size());
    for (Eigen::Index a = 0; a < k; ++a) {
        const auto& p = graph.reference[neighbors[static_cast<std::size_t>(a)]];
        if (p.time == target.time && chordal(p.location, target.location) < kSameSite) {
            out.weights = Vector::Zero(k);
            out.weights(a) = 1.0;
            out.variance = 0.0;
            out.exact_match = static_cast<long>(neighbors[static_cast<std::size_t>(a)]);
            return out;
        }
    }
    if (k == 0) {
        out.variance = c00;
        return out;
    }
    Matrix cn(k, k);
    Vector c(k);
    for (Eigen::Index a = 0; a < k; ++a) {
        const auto& pa = graph.reference[neighbors[static_cast<std::size_t>(a)]];
        c(a) = model.between(target, pa);
        cn(a, a) = c00;
        for (Eigen::Index b = 0; b < a; ++b) {
            const double v = model.between(pa, graph.reference[neighbors[static_cast<std::size_t>(b)]]);
            cn(a, b) = v;
            cn(b, a) = v;
        }
    }
    const Matrix l = cholesky_with_jitter(cn);
    out.weights = cholesky_solve(l, c);
    out.variance = std::max(c00 - out.weights.dot(c), 0.0);
    return out;
}

ConditionalNormal predict_conditional(const CovarianceModel& model, const NeighborGraph& graph,
                                      const Vector& w_ref, const SpaceTimePoint& target,
                                      PredictionMode mode, int m) {
    const auto nb = prediction_neighbors(graph, target, mode, m);
    ConditionalNormal out;
    if (nb.empty()) {
        out.variance = model.variance();
        out.prior_fallback = true;
        return out;
    }
    const auto kw = kriging_weights(model, graph, target, nb);
    out.exact_match = kw.exact_match;
    out.variance = kw.variance;
    for (std::size_t q = 0; q < nb.size(); ++q) {
        out.mean += kw.weights(static_cast<Eigen::Index>(q)) * w_ref(static_cast<Eigen::Index>(nb[q]));
    }
    return out;
}

}  // namespace spheretime
