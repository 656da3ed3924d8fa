#include "spheretime/inference.hpp"
#include "spheretime/simulate.hpp"

#include "../support/conditional_oracles.hpp"
#include "doctest.h"
#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <numbers>
#include <random>
#include <set>
#include <vector>

using namespace spheretime;

namespace {

OrderedData ordered(const Vector& y, const Matrix& x) { return {y, x}; }

ChainState state(const Vector& beta, double tau2, double sigma2, const Vector& w) {
    ChainState s;
    s.beta = beta;
    s.tau2 = tau2;
    s.sigma2 = sigma2;
    s.w = w;
    return s;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sd_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double ss = 0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Small simulated dataset at the Stieltjes study parameters.
RegressionData simulated_data(const std::vector<SpaceTimePoint>& pts, std::uint64_t seed, double tau2 = 1.0) {
    const SimulationSpec spec{.points = pts,
                              .model = CovarianceModel(Family::SphereGneitingStieltjes, fixtures::stieltjes_params()),
                              .tau2 = tau2,
                              .seed = seed};
    const auto f = simulate_field(spec).front();
    RegressionData d;
    d.points = pts;
    d.y = f.y;
    d.X = Matrix::Ones(f.y.size(), 1);
    return d;
}

std::vector<SpaceTimePoint> small_grid() {
    return make_grid({{-70, -65}, arange_inclusive(-180, 0, 30), arange_inclusive(1, 5, 1)});
}

}  // namespace

TEST_SUITE("inference") {

TEST_CASE("beta conditional examples") {
    PriorSpec flat;
    const auto d = ordered(Vector(Eigen::Vector2d(1, 3)), Matrix::Identity(2, 2));
    const auto c = beta_conditional(state(Vector::Zero(2), 1.0, 1.0, Vector::Zero(2)), d, flat);
    CHECK(c.mean(0) == doctest::Approx(1.0));
    CHECK(c.mean(1) == doctest::Approx(3.0));
    CHECK((c.cov - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

    const Vector y = Vector(Eigen::Vector4d(1, 2, 4, 7));
    const auto d1 = ordered(y, Matrix::Ones(4, 1));
    const auto c1 = beta_conditional(state(Vector::Zero(1), 0.7, 1.0, Vector::Zero(4)), d1, flat);
    CHECK(c1.mean(0) == doctest::Approx(3.5));
    CHECK(c1.cov(0, 0) == doctest::Approx(0.7 / 4));

    PriorSpec strong;
    strong.beta_mean = Vector(Eigen::Vector2d(2, -1));
    strong.beta_precision = Matrix::Identity(2, 2);
    const auto c2 = beta_conditional(state(Vector::Zero(2), 1e12, 1.0, Vector::Zero(2)), d, strong);
    CHECK(c2.mean(0) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(c2.mean(1) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("beta draws follow the conditional moments") {
    PriorSpec prior;
    prior.beta_precision = 0.1 * Matrix::Identity(2, 2);
    Matrix x(5, 2);
    x << 1, 0.1, 1, 0.7, 1, -0.4, 1, 1.2, 1, 0.0;
    const auto d = ordered(Vector::LinSpaced(5, -1, 3), x);
    const auto s = state(Vector::Zero(2), 0.4, 1.0, Vector::Constant(5, 0.2));
    const auto c = beta_conditional(s, d, prior);
    std::mt19937_64 rng(3);
    const int n = 40000;
    Matrix draws(n, 2);
    for (int k = 0; k < n; ++k) draws.row(k) = gibbs_beta(s, d, prior, rng).transpose();
    const Vector mean = draws.colwise().mean();
    const Matrix centered = draws.rowwise() - mean.transpose();
    const Matrix cov = centered.transpose() * centered / (n - 1);
    for (int j = 0; j < 2; ++j) CHECK(std::abs(mean(j) - c.mean(j)) < 4 * std::sqrt(c.cov(j, j) / n));
    CHECK((cov - c.cov).cwiseAbs().maxCoeff() < 0.03 * c.cov.cwiseAbs().maxCoeff());
}

TEST_CASE("tau2 conditional examples") {
    PriorSpec prior;
    const auto d = ordered(Vector(Eigen::Vector2d(1, 1)), Matrix(2, 0));
    const auto ig = tau2_conditional(state(Vector(), 1, 1, Vector::Zero(2)), d, prior);
    CHECK(ig.shape == doctest::Approx(1.1));
    CHECK(ig.scale == doctest::Approx(1.1));
    const auto zero = tau2_conditional(state(Vector(), 1, 1, Vector::Ones(2)), d, prior);
    CHECK(zero.shape == doctest::Approx(1.1));
    CHECK(zero.scale == doctest::Approx(0.1));
    std::mt19937_64 rng(1);
    for (int k = 0; k < 1000; ++k) CHECK(gibbs_tau2(state(Vector(), 1, 1, Vector::Ones(2)), d, prior, rng) > 0);
}

TEST_CASE("sigma2 conditional examples") {
    PriorSpec prior;
    const std::vector<SpaceTimePoint> one{{SpherePoint::from_latlon(0, 0), 0.0}};
    const auto g = build_graph(one, NeighborConfig{});
    const NNGPFactors unit{{Vector()}, {1.0}};
    const auto ig = sigma2_conditional(state(Vector(), 1, 1, Vector::Constant(1, 2.0)), g, unit, prior);
    CHECK(ig.shape == doctest::Approx(0.6));
    CHECK(ig.scale == doctest::Approx(2.1));
    const auto printed =
        sigma2_conditional(state(Vector(), 1, 1, Vector::Constant(1, 2.0)), g, unit, prior, SigmaUpdate::as_printed);
    CHECK(printed.scale == doctest::Approx(4.1));

    const auto pts = small_grid();
    const auto big = build_graph(pts, NeighborConfig{});
    const auto f = compute_factors(big, CovarianceModel(Family::SphereGneitingStieltjes, fixtures::stieltjes_params()).unit_variance());
    const auto zero = sigma2_conditional(state(Vector(), 1, 1, Vector::Zero(static_cast<Eigen::Index>(pts.size()))), big, f, prior);
    CHECK(zero.shape == doctest::Approx(0.1 + 0.5 * static_cast<double>(pts.size())));
    CHECK(zero.scale == doctest::Approx(0.1));
}

TEST_CASE("sigma2 posterior concentrates on the truth") {
    std::mt19937_64 rng(21);
    std::vector<SpaceTimePoint> pts;
    std::uniform_real_distribution<double> t(0, 10);
    for (int i = 0; i < 2000; ++i) pts.push_back({sample_uniform_sphere(2, rng), t(rng)});
    const auto g = build_graph(pts, NeighborConfig{});
    const auto unit = compute_factors(g, CovarianceModel(Family::SphereGneitingStieltjes, fixtures::stieltjes_params()).unit_variance());
    // draw w from the NNGP prior in reference order
    const double truth = 2.5;
    std::normal_distribution<double> z;
    Vector w(2000);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double m = 0;
        for (std::size_t q = 0; q < g.neighbors[i].size(); ++q) m += unit.B[i](static_cast<Eigen::Index>(q)) * w(static_cast<Eigen::Index>(g.neighbors[i][q]));
        w(static_cast<Eigen::Index>(i)) = m + std::sqrt(truth * unit.F[i]) * z(rng);
    }
    const auto ig = sigma2_conditional(state(Vector(), 1, 1, w), g, unit, PriorSpec{});
    const double post_mean = ig.scale / (ig.shape - 1);
    CHECK(std::abs(post_mean / truth - 1) < 0.1);
    std::vector<double> draws(4000);
    for (auto& x : draws) x = gibbs_sigma2(state(Vector(), 1, 1, w), g, unit, PriorSpec{}, rng);
    CHECK(std::abs(mean_of(draws) / truth - 1) < 0.1);
}

TEST_CASE("w conditional of a lone site is the normal-normal update") {
    const std::vector<SpaceTimePoint> one{{SpherePoint::from_latlon(0, 0), 0.0}};
    const auto g = build_graph(one, NeighborConfig{});
    const NNGPFactors unit{{Vector()}, {1.0}};
    const auto d = ordered(Vector::Constant(1, 3.0), Matrix::Constant(1, 1, 1.0));
    const auto s = state(Vector::Constant(1, 0.5), 0.8, 2.0, Vector::Zero(1));
    const auto c = w_conditional(s, d, g, unit, 0);
    const double v = 1 / (1 / 0.8 + 1 / 2.0);
    CHECK(c.variance == doctest::Approx(v));
    CHECK(c.mean == doctest::Approx(v * 2.5 / 0.8));
}

TEST_CASE("w interpolates the data as the nugget vanishes") {
    const auto pts = small_grid();
    const auto g = build_graph(pts, NeighborConfig{});
    const auto unit = compute_factors(g, CovarianceModel(Family::SphereGneitingStieltjes, fixtures::stieltjes_params()).unit_variance());
    const auto n = static_cast<Eigen::Index>(pts.size());
    const Vector y = Vector::LinSpaced(n, -2, 2);
    const auto d = ordered(y, Matrix::Ones(n, 1));
    auto s = state(Vector::Constant(1, 0.3), 1e-10, 1.0, Vector::Zero(n));
    std::mt19937_64 rng(2);
    gibbs_w(s, d, g, unit, rng);
    for (Eigen::Index i = 0; i < n; ++i) CHECK(std::abs(s.w(i) - (y(i) - 0.3)) < 1e-4);
}

TEST_CASE("w sweeps recover the prior when the nugget is huge") {
    const auto pts = make_grid({{-70, -65}, {-180, -150, -120}, {1, 2}});
    const auto g = build_graph(pts, NeighborConfig{});
    const auto unit = compute_factors(g, CovarianceModel(Family::SphereGneitingStieltjes, fixtures::stieltjes_params()).unit_variance());
    const auto n = static_cast<Eigen::Index>(pts.size());
    const auto d = ordered(Vector::Constant(n, 5.0), Matrix(n, 0));
    auto s = state(Vector(), 1e12, 1.0, Vector::Zero(n));
    std::mt19937_64 rng(4);
    const int sweeps = 500, batches = 10;
    std::vector<double> batch_means(batches, 0.0);
    for (int k = 0; k < sweeps; ++k) {
        gibbs_w(s, d, g, unit, rng);
        batch_means[static_cast<std::size_t>(k / (sweeps / batches))] += s.w.mean() / (sweeps / batches);
    }
    const double grand = mean_of(batch_means);
    const double se = sd_of(batch_means) / std::sqrt(static_cast<double>(batches));
    CHECK(std::abs(grand) < 4 * se + 1e-12);
}

TEST_CASE("conditionals match brute-force grid posteriors") {
    const int draws = 100000;
    const double beta = oracle::tv_beta(11, draws);
    const double tau2 = oracle::tv_tau2(12, draws);
    const double sigma2 = oracle::tv_sigma2(13, draws);
    const double w = oracle::tv_w(14, draws);
    MESSAGE("TV beta " << beta << " tau2 " << tau2 << " sigma2 " << sigma2 << " w " << w);
    CHECK(beta < 0.05);
    CHECK(tau2 < 0.05);
    CHECK(sigma2 < 0.05);
    CHECK(w < 0.05);
}

TEST_CASE("inverse gamma draws have the right mean") {
    std::mt19937_64 rng(8);
    const InverseGammaParams ig{5.0, 8.0};
    std::vector<double> v(50000);
    for (auto& x : v) x = draw_inverse_gamma(ig, rng);
    CHECK(mean_of(v) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("default bounds") {
    CHECK(default_bounds(Family::SphereGneitingStieltjes, Param::c_s).hi == doctest::Approx(std::numbers::pi));
    CHECK(default_bounds(Family::SphereGneitingStieltjes, Param::c_t).hi == 10.0);
    CHECK(default_bounds(Family::SphereGneitingCauchy, Param::alpha).hi == 2.0);
    CHECK(default_bounds(Family::InvertedGneitingExp, Param::alpha).hi == 1.0);
    CHECK_THROWS_AS(default_bounds(Family::Heine, Param::sigma2), InferenceError);
}

TEST_CASE("metropolis block with a zero step never moves") {
    const auto pts = small_grid();
    const auto data = simulated_data(pts, 3);
    SamplerSpec spec;
    spec.start = fixtures::stieltjes_params();
    spec.sampled = {Param::c_s, Param::delta};
    KernelSampler k(spec, PriorSpec{}, 0.0);
    const auto g = build_graph(pts, NeighborConfig{});
    ChainState s;
    s.params = spec.start;
    s.sigma2 = spec.start.sigma2;
    s.w = Vector::Zero(static_cast<Eigen::Index>(pts.size()));
    k.initialize(s, g);
    std::mt19937_64 rng(1);
    for (int it = 0; it < 50; ++it) CHECK(k.step(s, g, rng));
    CHECK(s.params == spec.start);
}

TEST_CASE("GLS oracle for beta with everything else fixed at truth") {
    const auto pts = small_grid();
    const auto n = static_cast<Eigen::Index>(pts.size());
    const SimulationSpec sim{.points = pts,
                             .model = CovarianceModel(Family::SphereGneitingStieltjes, fixtures::stieltjes_params()),
                             .tau2 = 0.6,
                             .seed = 31};
    const auto field = simulate_field(sim).front();
    RegressionData data;
    data.points = pts;
    data.X.resize(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        data.X(i, 0) = 1.0;
        data.X(i, 1) = pts[static_cast<std::size_t>(i)].time - 3.0;
    }
    const Vector beta_true = Vector(Eigen::Vector2d(1.5, -0.4));
    data.y = data.X * beta_true + field.y;

    SamplerSpec spec;
    spec.start = fixtures::stieltjes_params();
    spec.tau2_start = 0.6;
    spec.w_start = field.w;
    spec.update_tau2 = spec.update_sigma2 = spec.update_w = false;
    McmcConfig mc;
    mc.iterations = 6000;
    mc.burn_in = 1000;
    mc.w_draws = 0;
    const auto fit = run_chain(data, spec, PriorSpec{}, NeighborConfig{}, mc);

    // (X'X)^{-1} X'(y - w) with covariance tau2 (X'X)^{-1}
    const Matrix xtx = data.X.transpose() * data.X;
    const Vector mean = xtx.ldlt().solve(data.X.transpose() * (data.y - field.w));
    const Matrix cov = 0.6 * xtx.inverse();
    for (int j = 0; j < 2; ++j) {
        const auto v = fit.samples.values("beta_" + std::to_string(j));
        const double se = std::sqrt(cov(j, j) / static_cast<double>(v.size()));
        CHECK(std::abs(mean_of(v) - mean(j)) < 3 * se);
        CHECK(sd_of(v) == doctest::Approx(std::sqrt(cov(j, j))).epsilon(0.05));
    }
    for (double t : fit.samples.values("tau2")) CHECK(t == 0.6);
}

TEST_CASE("pure nugget data: tau2 tracks the sample variance") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> z(3.0, std::sqrt(2.0));
    RegressionData data;
    data.points = make_grid({{-70, -65, -60, -55}, arange_inclusive(-180, 0, 20), arange_inclusive(1, 5, 1)});
    const auto n = static_cast<Eigen::Index>(data.points.size());
    data.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) data.y(i) = z(rng);
    data.X = Matrix::Ones(n, 1);
    SamplerSpec spec;
    spec.start = fixtures::stieltjes_params();
    spec.start.sigma2 = 1e-8;
    spec.update_sigma2 = false;
    McmcConfig mc;
    mc.iterations = 3000;
    mc.burn_in = 500;
    mc.w_draws = 0;
    const auto fit = run_chain(data, spec, PriorSpec{}, NeighborConfig{}, mc);
    const double ybar = data.y.mean();
    const double var = (data.y.array() - ybar).square().sum() / static_cast<double>(n - 1);
    CHECK(std::abs(mean_of(fit.samples.values("tau2")) / var - 1) < 0.05);
}

TEST_CASE("chains are reproducible and summaries recompute exactly") {
    const auto pts = small_grid();
    const auto data = simulated_data(pts, 5);
    SamplerSpec spec;
    spec.start = fixtures::stieltjes_params();
    spec.sampled = {Param::delta};
    McmcConfig mc;
    mc.iterations = 300;
    mc.burn_in = 100;
    mc.thin = 2;
    mc.w_draws = 20;
    mc.seed = 99;
    const auto a = run_chain(data, spec, PriorSpec{}, NeighborConfig{}, mc);
    const auto b = run_chain(data, spec, PriorSpec{}, NeighborConfig{}, mc);
    CHECK(a.samples.draws == b.samples.draws);
    CHECK(a.samples.w == b.samples.w);
    CHECK(a.samples.n_keep == 100);
    CHECK(a.samples.w_rows.size() == 20);
    CHECK(a.samples.iteration.front() == 100);
    CHECK(a.samples.iteration[1] == 102);
    mc.seed = 100;
    CHECK_FALSE(run_chain(data, spec, PriorSpec{}, NeighborConfig{}, mc).samples.draws == a.samples.draws);

    const auto again = summarize(a.samples);
    REQUIRE(again.size() == a.summary.size());
    for (std::size_t k = 0; k < again.size(); ++k) {
        CHECK(again[k].mean == a.summary[k].mean);
        CHECK(again[k].q025 == a.summary[k].q025);
        CHECK(again[k].q975 == a.summary[k].q975);
        auto v = a.samples.values(again[k].name);
        std::sort(v.begin(), v.end());
        CHECK(again[k].q025 == quantile_sorted(v, 0.025));
    }
    for (double t : a.samples.values("tau2")) CHECK(t > 0);
    for (double s : a.samples.values("sigma2")) CHECK(s > 0);
    const auto amp = a.samples.values("sigma2_kappa");
    const auto s2 = a.samples.values("sigma2");
    for (std::size_t k = 0; k < amp.size(); ++k) CHECK(amp[k] == s2[k] * kStieltjesKappa);
    for (double d : a.samples.values("delta")) CHECK((d > 0 && d < 1));
}

TEST_CASE("default chain length") {
    const McmcConfig mc;
    CHECK(mc.iterations - mc.burn_in == 25000);
    CHECK(mc.burn_in == 5000);
}

TEST_CASE("delta constraint holds on every stored draw") {
    const auto pts = small_grid();
    auto data = simulated_data(pts, 7);
    SamplerSpec spec;
    spec.family = Family::SphereGneitingCauchy;
    spec.start = fixtures::sphere_cauchy_params();
    spec.sampled = {Param::beta};
    spec.delta_from_beta = true;
    McmcConfig mc;
    mc.iterations = 300;
    mc.burn_in = 100;
    mc.w_draws = 0;
    const auto fit = run_chain(data, spec, PriorSpec{}, NeighborConfig{}, mc);
    const auto beta = fit.samples.values("beta");
    const auto delta = fit.samples.values("delta");
    CHECK(std::set<double>(beta.begin(), beta.end()).size() > 1);
    for (std::size_t k = 0; k < beta.size(); ++k) CHECK(delta[k] == 1.0 - 0.5 * beta[k]);

    SamplerSpec bad = spec;
    bad.sampled = {Param::beta, Param::delta};
    CHECK_THROWS_AS(run_chain(data, bad, PriorSpec{}, NeighborConfig{}, mc), InferenceError);
}

TEST_CASE("adapted acceptance lands in a sensible band") {
    const auto pts = make_grid({{-70, -65}, arange_inclusive(-180, 0, 15), arange_inclusive(1, 10, 1)});
    const auto data = simulated_data(pts, 13);
    SamplerSpec spec;
    spec.start = fixtures::stieltjes_params();
    spec.sampled = {Param::c_s, Param::c_t, Param::alpha, Param::delta};
    McmcConfig mc;
    mc.iterations = 1500;
    mc.burn_in = 750;
    mc.w_draws = 0;
    const auto fit = run_chain(data, spec, PriorSpec{}, NeighborConfig{}, mc);
    MESSAGE("acceptance " << fit.samples.acceptance << " scale " << fit.samples.final_scale);
    CHECK(fit.samples.acceptance >= 0.1);
    CHECK(fit.samples.acceptance <= 0.6);
}

TEST_CASE("an interrupted chain keeps what it has") {
    const auto pts = small_grid();
    const auto data = simulated_data(pts, 3);
    SamplerSpec spec;
    spec.start = fixtures::stieltjes_params();
    std::atomic<bool> stop{true};
    McmcConfig mc;
    mc.iterations = 100;
    mc.burn_in = 10;
    mc.stop = &stop;
    const auto fit = run_chain(data, spec, PriorSpec{}, NeighborConfig{}, mc);
    CHECK(fit.samples.interrupted);
    CHECK(fit.samples.n_keep == 0);
}

TEST_CASE("predictive draws: shape, thinning and determinism") {
    const auto pts = small_grid();
    const auto data = simulated_data(pts, 9);
    SamplerSpec spec;
    spec.start = fixtures::stieltjes_params();
    McmcConfig mc;
    mc.iterations = 400;
    mc.burn_in = 100;
    mc.w_draws = 50;
    const auto fit = run_chain(data, spec, PriorSpec{}, NeighborConfig{}, mc);
    const std::vector<SpaceTimePoint> targets{{SpherePoint::from_latlon(-67, -100), 3.0},
                                              {SpherePoint::from_latlon(-62, -20), 5.0},
                                              pts[4]};
    const Matrix cov = Matrix::Ones(3, 1);
    const Matrix a = predictive_draws(fit, targets, cov, PredictionMode::prospective, 5);
    CHECK(a.rows() == 3);
    CHECK(a.cols() == 50);
    CHECK(a == predictive_draws(fit, targets, cov, PredictionMode::prospective, 5, 3));
    CHECK(predictive_draws(fit, targets, cov, PredictionMode::prospective, 5, 1, 10).cols() == 10);
    CHECK_FALSE(a == predictive_draws(fit, targets, cov, PredictionMode::prospective, 6));
    CHECK(a.allFinite());
    CHECK_THROWS_AS(predictive_draws(fit, targets, Matrix::Ones(2, 1), PredictionMode::prospective, 5), InferenceError);
}

}
