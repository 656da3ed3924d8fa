#include "spheretime/nngp.hpp"

#include "doctest.h"
#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace spheretime;

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::vector<SpaceTimePoint> random_points(int n, double t_max, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> t(0, t_max);
    std::vector<SpaceTimePoint> pts;
    for (int i = 0; i < n; ++i) pts.push_back({sample_uniform_sphere(2, rng), t(rng)});
    return pts;
}

NeighborConfig lexicographic(int m) {
    NeighborConfig c;
    c.scheme = NeighborScheme::lexicographic;
    c.m = m;
    return c;
}

double exact_logpdf(const CovarianceModel& model, const std::vector<SpaceTimePoint>& pts, const Vector& w) {
    const Matrix l = cholesky(model.gram(pts));
    const Vector z = l.triangularView<Eigen::Lower>().solve(w);
    return -0.5 * (static_cast<double>(w.size()) * kLog2Pi + cholesky_logdet(l) + z.squaredNorm());
}

// Direct sum of univariate normal log-densities.
double direct_logpdf(const NNGPFactors& f, const NeighborGraph& g, const Vector& w) {
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double mean = 0;
        for (std::size_t q = 0; q < g.neighbors[i].size(); ++q) {
            mean += f.B[i](static_cast<Eigen::Index>(q)) * w(static_cast<Eigen::Index>(g.neighbors[i][q]));
        }
        const double r = w(static_cast<Eigen::Index>(i)) - mean;
        s += -0.5 * (kLog2Pi + std::log(f.F[i]) + r * r / f.F[i]);
    }
    return s;
}

// KL(exact || NNGP) for zero-mean Gaussians in reference order.
double kl_exact_to_nngp(const Matrix& sigma, const NNGPFactors& f, const NeighborGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.size());
    Matrix a = Matrix::Identity(n, n);
    double logdet_q = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& nb = g.neighbors[static_cast<std::size_t>(i)];
        for (std::size_t q = 0; q < nb.size(); ++q) {
            a(i, static_cast<Eigen::Index>(nb[q])) = -f.B[static_cast<std::size_t>(i)](static_cast<Eigen::Index>(q));
        }
        logdet_q -= std::log(f.F[static_cast<std::size_t>(i)]);
    }
    Vector finv(n);
    for (Eigen::Index i = 0; i < n; ++i) finv(i) = 1.0 / f.F[static_cast<std::size_t>(i)];
    const Matrix q = a.transpose() * finv.asDiagonal() * a;
    const double trace = (q * sigma).trace();
    return 0.5 * (trace - static_cast<double>(n) - logdet_q - cholesky_logdet(cholesky(sigma)));
}

}  // namespace

TEST_SUITE("nngp") {

TEST_CASE("small graphs condition on every predecessor") {
    const auto pts = random_points(3, 5, 1);
    const auto g = build_graph(pts, lexicographic(5));
    REQUIRE(g.size() == 3);
    CHECK(g.neighbors[0].empty());
    CHECK(g.neighbors[1] == std::vector<std::size_t>{0});
    CHECK(g.neighbors[2] == std::vector<std::size_t>{0, 1});

    const auto pts30 = random_points(30, 5, 2);
    const auto full = build_graph(pts30, lexicographic(29));
    for (std::size_t i = 0; i < full.size(); ++i) {
        CHECK(full.neighbors[i].size() == i);
    }
}

TEST_CASE("graph invariants: ordering, acyclicity, budget, inverse relation") {
    const auto pts = random_points(120, 7, 3);
    for (auto cfg : {lexicographic(10), NeighborConfig{}}) {
        const auto g = build_graph(pts, cfg);
        const auto budget = static_cast<std::size_t>(cfg.budget());
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(pts[g.order[i]].time == g.reference[i].time);
            if (i > 0) CHECK_FALSE(time_major_less(g.reference[i], g.reference[i - 1]));
            CHECK(g.neighbors[i].size() == std::min(i, budget));
            if (i <= budget) {
                for (std::size_t j = 0; j < i; ++j) CHECK(g.neighbors[i][j] == j);
            }
            for (std::size_t j : g.neighbors[i]) CHECK(j < i);
            CHECK(std::is_sorted(g.neighbors[i].begin(), g.neighbors[i].end()));
        }
        std::size_t edges = 0, inverse_edges = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            edges += g.neighbors[i].size();
            inverse_edges += g.inverse[i].size();
            for (const auto& e : g.inverse[i]) CHECK(g.neighbors[e.site][e.slot] == i);
        }
        CHECK(edges == inverse_edges);
    }
}

TEST_CASE("rectangular neighbors on a grid: nearest sites at the most recent times") {
    const auto pts = make_grid({{-70, -65, -60, -55}, {-40, -30, -20, -10}, {1, 2, 3, 4, 5, 6}});
    NeighborConfig cfg;
    cfg.m_s = 5;
    cfg.m_t = 5;
    const auto g = build_graph(pts, cfg);
    REQUIRE(g.blocks.size() == 6);

    auto nearest = [&](std::size_t site, std::size_t begin, std::size_t end, std::size_t count) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t j = begin; j < end; ++j) {
            d.emplace_back(great_circle(g.reference[site].location, g.reference[j].location), j);
        }
        std::sort(d.begin(), d.end());
        std::vector<std::size_t> out;
        for (std::size_t q = 0; q < std::min(count, d.size()); ++q) out.push_back(d[q].second);
        return out;
    };

    // first site of the last time: five nearest at each of the five previous times
    {
        const std::size_t i = g.blocks[5].begin;
        std::vector<std::size_t> expected;
        for (std::size_t b = 0; b < 5; ++b) {
            const auto part = nearest(i, g.blocks[b].begin, g.blocks[b].end, 5);
            expected.insert(expected.end(), part.begin(), part.end());
        }
        std::sort(expected.begin(), expected.end());
        CHECK(g.neighbors[i] == expected);
    }
    // last site of the last time: the current time counts as the most recent
    {
        const std::size_t i = g.blocks[5].end - 1;
        auto expected = nearest(i, g.blocks[5].begin, i, 5);
        for (std::size_t b = 1; b < 5; ++b) {
            const auto part = nearest(i, g.blocks[b].begin, g.blocks[b].end, 5);
            expected.insert(expected.end(), part.begin(), part.end());
        }
        std::sort(expected.begin(), expected.end());
        CHECK(g.neighbors[i] == expected);
        for (std::size_t j : g.neighbors[i]) CHECK(g.reference[j].time >= 2);
    }
}

TEST_CASE("duplicate space-time points are rejected") {
    auto pts = random_points(5, 3, 4);
    pts.push_back(pts[2]);
    CHECK_THROWS_AS(build_graph(pts, NeighborConfig{}), NNGPError);
    NeighborConfig bad;
    bad.m_s = 0;
    CHECK_THROWS_AS(build_graph(random_points(5, 3, 4), bad), NNGPError);
}

TEST_CASE("graph construction is deterministic") {
    const auto pts = random_points(80, 7, 5);
    const auto a = build_graph(pts, NeighborConfig{});
    const auto b = build_graph(pts, NeighborConfig{});
    CHECK(a.order == b.order);
    CHECK(a.neighbors == b.neighbors);
}

TEST_CASE("factors of one and two sites") {
    const CovarianceModel m(Family::SphereGneitingStieltjes, fixtures::stieltjes_params());
    const std::vector<SpaceTimePoint> pts{{SpherePoint::from_latlon(10, 20), 1.0},
                                          {SpherePoint::from_latlon(12, 21), 1.5}};
    const auto g = build_graph(pts, lexicographic(3));
    const auto f = compute_factors(g, m);
    CHECK(f.B[0].size() == 0);
    CHECK(f.F[0] == doctest::Approx(m.variance()));
    const double s2 = m.variance();
    const double rho = m.between(pts[0], pts[1]) / s2;
    CHECK(f.B[1](0) == doctest::Approx(rho).epsilon(1e-14));
    CHECK(f.F[1] == doctest::Approx(s2 * (1 - rho * rho)).epsilon(1e-12));
    for (double fi : f.F) CHECK(fi > 0);
}

TEST_CASE("full conditioning reproduces the exact density for every family") {
    const auto pts = random_points(30, 5, 6);
    const auto g = build_graph(pts, lexicographic(29));
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z;
    for (const auto& model : fixtures::paper_models()) {
        CAPTURE(family_name(model.family()));
        Vector w(30);
        for (int i = 0; i < 30; ++i) w(i) = z(rng);
        Vector w_ref(30);
        for (std::size_t i = 0; i < 30; ++i) w_ref(static_cast<Eigen::Index>(i)) = w(static_cast<Eigen::Index>(g.order[i]));
        const auto f = compute_factors(g, model);
        CHECK(std::abs(nngp_logpdf(f, g, w_ref) - exact_logpdf(model, pts, w)) < 1e-8);
    }
}

TEST_CASE("log density of a single site and under translation") {
    const std::vector<SpaceTimePoint> one{{SpherePoint::from_latlon(0, 0), 0.0}};
    const auto g1 = build_graph(one, NeighborConfig{});
    const NNGPFactors f1{{Vector()}, {1.0}};
    CHECK(nngp_logpdf(f1, g1, Vector::Zero(1)) == doctest::Approx(-0.5 * kLog2Pi));

    const CovarianceModel m(Family::SphereGneitingCauchy, fixtures::sphere_cauchy_params());
    const auto pts = random_points(40, 5, 8);
    const auto g = build_graph(pts, NeighborConfig{});
    const auto f = compute_factors(g, m);
    Vector w = Vector::LinSpaced(40, -1, 2);
    for (double c : {0.0, 0.5, -3.0}) {
        const Vector shifted = (w.array() + c).matrix();
        CHECK(nngp_logpdf(f, g, shifted) == doctest::Approx(direct_logpdf(f, g, shifted)).epsilon(1e-12));
    }
    CHECK(nngp_logpdf_scaled(f, g, w, 2.0) ==
          doctest::Approx(nngp_logpdf(NNGPFactors{f.B, [&] {
                                          auto F = f.F;
                                          for (double& x : F) x *= 2.0;
                                          return F;
                                      }()},
                                      g, w)));
    const Vector r = nngp_residuals(f, g, w);
    CHECK(r(0) == w(0));
}

TEST_CASE("approximation error falls as the neighbor budget grows") {
    const auto pts = random_points(50, 7, 9);
    const CovarianceModel m(Family::SphereGneitingStieltjes, fixtures::stieltjes_params());
    std::vector<double> kl;
    for (int budget : {1, 5, 10, 25, 49}) {
        const auto g = build_graph(pts, lexicographic(budget));
        std::vector<SpaceTimePoint> ordered(g.reference.begin(), g.reference.end());
        kl.push_back(kl_exact_to_nngp(m.gram(ordered), compute_factors(g, m), g));
        MESSAGE("m = " << budget << " KL = " << kl.back());
    }
    CHECK(kl.back() <= kl.front());
    CHECK(std::abs(kl.back()) < 1e-8);
}

TEST_CASE("prediction at a reference site returns its value") {
    const CovarianceModel m(Family::SphereGneitingStieltjes, fixtures::stieltjes_params());
    const auto pts = random_points(20, 5, 10);
    const auto g = build_graph(pts, NeighborConfig{});
    const Vector w = Vector::LinSpaced(20, -2, 2);
    const auto r = predict_conditional(m, g, w, g.reference[7], PredictionMode::retrospective);
    CHECK(r.exact_match == 7);
    CHECK(r.mean == doctest::Approx(w(7)));
    CHECK(r.variance < 1e-8);
}

TEST_CASE("prediction recovers the prior when correlation vanishes") {
    auto p = fixtures::stieltjes_params();
    p.c_s = 1e-9;
    p.c_t = 1e-9;
    const CovarianceModel m(Family::SphereGneitingStieltjes, p);
    const auto pts = random_points(20, 5, 11);
    const auto g = build_graph(pts, NeighborConfig{});
    const Vector w = Vector::Constant(20, 3.0);
    const SpaceTimePoint target{SpherePoint::from_latlon(1, 1), 2.5};
    const auto r = predict_conditional(m, g, w, target, PredictionMode::retrospective);
    CHECK(std::abs(r.mean) < 1e-3);
    CHECK(r.variance == doctest::Approx(m.variance()).epsilon(1e-3));
}

TEST_CASE("two-site kriging matches the hand solution") {
    const CovarianceModel m(Family::SphereGneitingCauchy, fixtures::sphere_cauchy_params());
    const std::vector<SpaceTimePoint> ref{{SpherePoint::from_latlon(0, 0), 1.0},
                                          {SpherePoint::from_latlon(5, 5), 2.0}};
    const auto g = build_graph(ref, NeighborConfig{});
    const SpaceTimePoint target{SpherePoint::from_latlon(2, 3), 2.0};
    const Vector w = Vector(Eigen::Vector2d(1.5, -0.5));
    const double c00 = m.variance();
    const double c01 = m.between(g.reference[0], g.reference[1]);
    const double k0 = m.between(target, g.reference[0]);
    const double k1 = m.between(target, g.reference[1]);
    const double det = c00 * c00 - c01 * c01;
    const double a0 = (c00 * k0 - c01 * k1) / det;
    const double a1 = (c00 * k1 - c01 * k0) / det;
    const auto r = predict_conditional(m, g, w, target, PredictionMode::prospective);
    CHECK(r.mean == doctest::Approx(a0 * w(0) + a1 * w(1)).epsilon(1e-12));
    CHECK(r.variance == doctest::Approx(c00 - a0 * k0 - a1 * k1).epsilon(1e-12));
    CHECK_FALSE(r.prior_fallback);
}

TEST_CASE("prospective prediction never looks ahead") {
    const CovarianceModel m(Family::SphereGneitingStieltjes, fixtures::stieltjes_params());
    const auto pts = random_points(60, 7, 12);
    const auto g = build_graph(pts, NeighborConfig{});
    const SpaceTimePoint target{SpherePoint::from_latlon(-10, 40), 3.3};
    for (std::size_t j : prediction_neighbors(g, target, PredictionMode::prospective)) {
        CHECK(g.reference[j].time <= 3.3);
    }
    const SpaceTimePoint early{SpherePoint::from_latlon(-10, 40), -1.0};
    const auto r = predict_conditional(m, g, Vector::Ones(60), early, PredictionMode::prospective);
    CHECK(r.prior_fallback);
    CHECK(r.mean == 0.0);
    CHECK(r.variance == doctest::Approx(m.variance()));
    CHECK(prediction_neighbors(g, early, PredictionMode::retrospective).size() == 25);
}

}
