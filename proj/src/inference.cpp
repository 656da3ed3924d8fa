#include "spheretime/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace spheretime {

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double to_logit(double x, const Bounds& b) {
    const double u = (x - b.lo) / (b.hi - b.lo);
    return std::log(u) - std::log1p(-u);
}

// log |dx/dz| for x = lo + (hi - lo) logistic(z)
double log_jacobian(double x, const Bounds& b) {
    return std::log(x - b.lo) + std::log(b.hi - x) - std::log(b.hi - b.lo);
}

Vector standard_normal(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = z(rng);
    return v;
}

Vector prior_mean(const PriorSpec& prior, Eigen::Index p) {
    if (prior.beta_mean.size() == 0) return Vector::Zero(p);
    if (prior.beta_mean.size() != p) throw InferenceError("prior beta mean has the wrong length");
    return prior.beta_mean;
}

Matrix prior_precision(const PriorSpec& prior, Eigen::Index p) {
    if (prior.beta_precision.size() == 0) return Matrix::Zero(p, p);
    if (prior.beta_precision.rows() != p || prior.beta_precision.cols() != p) {
        throw InferenceError("prior beta precision has the wrong shape");
    }
    return prior.beta_precision;
}

Vector fitted(const ChainState& s, const OrderedData& d) {
    if (d.X.cols() == 0) return Vector::Zero(d.y.size());
    return d.X * s.beta;
}

void check_prior(const PriorSpec& prior) {
    for (double v : {prior.a_sigma2, prior.b_sigma2, prior.a_tau2, prior.b_tau2}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InferenceError("inverse-gamma shapes and scales must be positive");
        }
    }
}

}  // namespace

Bounds default_bounds(Family family, Param p) {
    switch (p) {
        case Param::c_s: return {0.0, std::numbers::pi};
        case Param::c_t: return {0.0, 10.0};
        case Param::alpha:
            return (family == Family::InvertedGneitingExp || family == Family::InvertedGneitingCauchy ||
                    family == Family::Heine)
                       ? Bounds{0.0, 1.0}
                       : Bounds{0.0, 2.0};
        case Param::beta:
        case Param::gamma: return {0.0, 1.0};
        case Param::delta:
            return (family == Family::SphereGneitingStieltjes || family == Family::SphereGneitingCauchy ||
                    family == Family::Heine)
                       ? Bounds{0.0, 1.0}
                       : Bounds{0.0, 5.0};
        case Param::lambda: return {0.0, 5.0};
        case Param::sigma2:
        case Param::nu: break;
    }
    throw InferenceError(std::string(param_name(p)) + " cannot be sampled by Metropolis");
}

OrderedData reorder(const RegressionData& data, const NeighborGraph& graph) {
    const auto n = static_cast<Eigen::Index>(graph.size());
    if (data.y.size() != n || data.X.rows() != n) {
        throw InferenceError("response or design matrix does not match the point count");
    }
    OrderedData d;
    d.y.resize(n);
    d.X.resize(n, data.X.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto src = static_cast<Eigen::Index>(graph.order[static_cast<std::size_t>(i)]);
        d.y(i) = data.y(src);
        d.X.row(i) = data.X.row(src);
    }
    return d;
}

NormalConditional beta_conditional(const ChainState& s, const OrderedData& d, const PriorSpec& prior) {
    const Eigen::Index p = d.X.cols();
    const Matrix vinv = prior_precision(prior, p);
    const Matrix precision = d.X.transpose() * d.X / s.tau2 + vinv;
    const Vector rhs = vinv * prior_mean(prior, p) + d.X.transpose() * (d.y - s.w) / s.tau2;
    auto chol = try_cholesky(precision);
    if (!chol.ok()) throw InferenceError("beta full conditional precision is not positive definite");
    NormalConditional out;
    out.mean = cholesky_solve(chol.factor, rhs);
    out.cov = cholesky_inverse(chol.factor);
    return out;
}

InverseGammaParams tau2_conditional(const ChainState& s, const OrderedData& d, const PriorSpec& prior) {
    const Vector r = d.y - fitted(s, d) - s.w;
    return {prior.a_tau2 + 0.5 * static_cast<double>(d.y.size()), prior.b_tau2 + 0.5 * r.squaredNorm()};
}

InverseGammaParams sigma2_conditional(const ChainState& s, const NeighborGraph& g,
                                      const NNGPFactors& unit, const PriorSpec& prior,
                                      SigmaUpdate mode) {
    const Vector r = nngp_residuals(unit, g, s.w);
    double q = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) q += r(i) * r(i) / unit.F[static_cast<std::size_t>(i)];
    const double shape = prior.a_sigma2 + 0.5 * static_cast<double>(r.size());
    // sigma2 * sum r^2 / (sigma2 F~) collapses to sum r^2 / F~
    return {shape, prior.b_sigma2 + (mode == SigmaUpdate::standard ? 0.5 * q : q)};
}

ScalarNormal w_conditional(const ChainState& s, const OrderedData& d, const NeighborGraph& g,
                           const NNGPFactors& unit, std::size_t i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double xb = d.X.cols() == 0 ? 0.0 : d.X.row(ii).dot(s.beta);
    const double fi = s.sigma2 * unit.F[i];

    double prec = 1.0 / s.tau2 + 1.0 / fi;
    double lin = (d.y(ii) - xb) / s.tau2;

    const auto& nb = g.neighbors[i];
    double mean_i = 0.0;
    for (std::size_t q = 0; q < nb.size(); ++q) {
        mean_i += unit.B[i](static_cast<Eigen::Index>(q)) * s.w(static_cast<Eigen::Index>(nb[q]));
    }
    lin += mean_i / fi;

    for (const auto& edge : g.inverse[i]) {
        const auto& nbj = g.neighbors[edge.site];
        const Vector& bj = unit.B[edge.site];
        const double fj = s.sigma2 * unit.F[edge.site];
        double a = s.w(static_cast<Eigen::Index>(edge.site));
        for (std::size_t q = 0; q < nbj.size(); ++q) {
            if (q != edge.slot) a -= bj(static_cast<Eigen::Index>(q)) * s.w(static_cast<Eigen::Index>(nbj[q]));
        }
        const double b = bj(static_cast<Eigen::Index>(edge.slot));
        prec += b * b / fj;
        lin += b * a / fj;
    }
    return {lin / prec, 1.0 / prec};
}

double draw_inverse_gamma(const InverseGammaParams& ig, std::mt19937_64& rng) {
    std::gamma_distribution<double> g(ig.shape, 1.0 / ig.scale);
    double x = 0.0;
    while (!(x > 0.0)) x = g(rng);
    return 1.0 / x;
}

Vector gibbs_beta(const ChainState& s, const OrderedData& d, const PriorSpec& prior,
                  std::mt19937_64& rng) {
    const Eigen::Index p = d.X.cols();
    if (p == 0) return {};
    const Matrix vinv = prior_precision(prior, p);
    const Matrix precision = d.X.transpose() * d.X / s.tau2 + vinv;
    const Vector rhs = vinv * prior_mean(prior, p) + d.X.transpose() * (d.y - s.w) / s.tau2;
    auto chol = try_cholesky(precision);
    if (!chol.ok()) throw InferenceError("beta full conditional precision is not positive definite");
    const Vector mean = cholesky_solve(chol.factor, rhs);
    // precision = L L^T, so L^{-T} z has covariance precision^{-1}
    const Vector z = standard_normal(p, rng);
    return mean + chol.factor.triangularView<Eigen::Lower>().transpose().solve(z);
}

double gibbs_tau2(const ChainState& s, const OrderedData& d, const PriorSpec& prior,
                  std::mt19937_64& rng) {
    return draw_inverse_gamma(tau2_conditional(s, d, prior), rng);
}

double gibbs_sigma2(const ChainState& s, const NeighborGraph& g, const NNGPFactors& unit,
                    const PriorSpec& prior, std::mt19937_64& rng, SigmaUpdate mode) {
    return draw_inverse_gamma(sigma2_conditional(s, g, unit, prior, mode), rng);
}

void gibbs_w(ChainState& s, const OrderedData& d, const NeighborGraph& g, const NNGPFactors& unit,
             std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto c = w_conditional(s, d, g, unit, i);
        s.w(static_cast<Eigen::Index>(i)) = c.mean + std::sqrt(c.variance) * z(rng);
    }
}

KernelSampler::KernelSampler(const SamplerSpec& spec, const PriorSpec& prior, double proposal_scale,
                             int threads)
    : family_(spec.family),
      sampled_(spec.sampled),
      delta_from_beta_(spec.delta_from_beta),
      scale_(proposal_scale),
      threads_(threads) {
    if (!(proposal_scale >= 0.0)) throw InferenceError("proposal scale must be >= 0");
    for (Param p : sampled_) {
        if (!family_uses(family_, p)) {
            throw InferenceError(std::string(param_name(p)) + " is not a parameter of " +
                                 std::string(family_name(family_)));
        }
        if (delta_from_beta_ && p == Param::delta) {
            throw InferenceError("delta is derived from beta and cannot also be sampled");
        }
        auto it = prior.bounds.find(p);
        const Bounds b = it != prior.bounds.end() ? it->second : default_bounds(family_, p);
        if (!(b.lo < b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) {
            throw InferenceError("prior bounds of " + std::string(param_name(p)) + " are empty");
        }
        bounds_.push_back(b);
    }
    if (delta_from_beta_ && (!family_uses(family_, Param::beta) || !family_uses(family_, Param::delta))) {
        throw InferenceError("delta constraint needs a family with beta and delta");
    }
}

void KernelSampler::apply_constraint(KernelParams& p) const {
    if (!delta_from_beta_) return;
    const double d = family_ == Family::GneitingChordal ? static_cast<double>(p.dim) : 1.0;
    p.delta = 1.0 - 0.5 * p.beta * d;
}

void KernelSampler::initialize(const ChainState& s, const NeighborGraph& g) {
    for (std::size_t k = 0; k < sampled_.size(); ++k) {
        const double x = s.params.get(sampled_[k]);
        if (!(x > bounds_[k].lo && x < bounds_[k].hi)) {
            throw InferenceError("initial " + std::string(param_name(sampled_[k])) +
                                 " lies outside its prior bounds");
        }
    }
    const CovarianceModel model = CovarianceModel(family_, s.params).unit_variance();
    factors_ = compute_factors(g, model, true, threads_);
}

bool KernelSampler::step(ChainState& s, const NeighborGraph& g, std::mt19937_64& rng) {
    if (sampled_.empty() || scale_ == 0.0) return true;  // proposal equals the current state

    std::normal_distribution<double> z;
    KernelParams prop = s.params;
    double log_ratio = 0.0;
    for (std::size_t k = 0; k < sampled_.size(); ++k) {
        const Bounds& b = bounds_[k];
        const double cur = s.params.get(sampled_[k]);
        const double x = b.lo + (b.hi - b.lo) * logistic(to_logit(cur, b) + scale_ * z(rng));
        if (!(x > b.lo && x < b.hi)) return false;
        prop.set(sampled_[k], x);
        log_ratio += log_jacobian(x, b) - log_jacobian(cur, b);
    }
    apply_constraint(prop);

    NNGPFactors cand;
    try {
        const CovarianceModel model = CovarianceModel(family_, prop).unit_variance();
        cand = compute_factors(g, model, true, threads_);
    } catch (const KernelParamError&) {
        return false;
    } catch (const NNGPError&) {
        return false;
    } catch (const NotPositiveDefinite&) {
        return false;
    }
    log_ratio += nngp_logpdf_scaled(cand, g, s.w, s.sigma2) - nngp_logpdf_scaled(factors_, g, s.w, s.sigma2);

    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (std::isfinite(log_ratio) && std::log(u(rng)) < log_ratio) {
        s.params = prop;
        factors_ = std::move(cand);
        return true;
    }
    return false;
}

long PosteriorSamples::column(std::string_view name) const {
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (names[k] == name) return static_cast<long>(k);
    }
    return -1;
}

std::vector<double> PosteriorSamples::values(std::string_view name) const {
    const long c = column(name);
    if (c < 0) throw InferenceError("no posterior column named " + std::string(name));
    std::vector<double> out(static_cast<std::size_t>(draws.rows()));
    for (Eigen::Index r = 0; r < draws.rows(); ++r) out[static_cast<std::size_t>(r)] = draws(r, c);
    return out;
}

std::vector<ParamSummary> summarize(const PosteriorSamples& samples) {
    std::vector<ParamSummary> out;
    const auto n = samples.draws.rows();
    if (n == 0) return out;
    for (std::size_t c = 0; c < samples.names.size(); ++c) {
        std::vector<double> v = samples.values(samples.names[c]);
        ParamSummary s;
        s.name = samples.names[c];
        double sum = 0.0;
        for (double x : v) sum += x;
        s.mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (double x : v) ss += (x - s.mean) * (x - s.mean);
        s.sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        std::sort(v.begin(), v.end());
        s.q025 = quantile_sorted(v, 0.025);
        s.q975 = quantile_sorted(v, 0.975);
        out.push_back(std::move(s));
    }
    return out;
}

KernelParams ModelFit::params_at(long k) const {
    KernelParams p = spec.start;
    for (Param q : family_params(spec.family)) {
        const long c = samples.column(param_name(q));
        if (c >= 0) p.set(q, samples.draws(k, c));
    }
    return p;
}

Vector ModelFit::beta_at(long k) const {
    const Eigen::Index p = data.X.cols();
    Vector b(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        b(j) = samples.draws(k, samples.column("beta_" + std::to_string(j)));
    }
    return b;
}

ModelFit run_chain(const RegressionData& data, const SamplerSpec& spec, const PriorSpec& prior,
                   const NeighborConfig& neighbors, const McmcConfig& mcmc) {
    if (data.points.empty()) throw InferenceError("no observations to fit");
    if (mcmc.iterations <= mcmc.burn_in || mcmc.burn_in < 0 || mcmc.thin < 1) {
        throw InferenceError("need iterations > burn_in >= 0 and thin >= 1");
    }
    check_prior(prior);
    for (Param p : spec.sampled) {
        if (p == Param::sigma2) throw InferenceError("sigma2 has a Gibbs update; do not list it as sampled");
    }

    ModelFit fit;
    fit.spec = spec;
    fit.prior = prior;
    fit.neighbors = neighbors;
    fit.data = data;
    fit.graph = build_graph(data.points, neighbors);
    const NeighborGraph& g = fit.graph;
    const OrderedData d = reorder(data, g);
    const auto n = static_cast<Eigen::Index>(g.size());
    const Eigen::Index p = d.X.cols();

    KernelSampler kernel(spec, prior, mcmc.proposal_scale, mcmc.threads);

    ChainState s;
    s.params = spec.start;
    kernel.apply_constraint(s.params);
    validate_params(spec.family, s.params);
    s.sigma2 = s.params.sigma2;
    s.tau2 = spec.tau2_start;
    if (!(s.tau2 > 0.0)) throw InferenceError("initial tau2 must be positive");
    if (spec.w_start.size() == 0) {
        s.w = Vector::Zero(n);
    } else {
        if (spec.w_start.size() != n) throw InferenceError("initial w has the wrong length");
        s.w.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            s.w(i) = spec.w_start(static_cast<Eigen::Index>(g.order[static_cast<std::size_t>(i)]));
        }
    }
    if (spec.beta_start.size() == p) {
        s.beta = spec.beta_start;
    } else if (spec.beta_start.size() == 0) {
        s.beta = p == 0 ? Vector() : Vector(d.X.colPivHouseholderQr().solve(d.y - s.w));
    } else {
        throw InferenceError("initial beta has the wrong length");
    }
    kernel.initialize(s, g);

    auto& out = fit.samples;
    for (Eigen::Index j = 0; j < p; ++j) out.names.push_back("beta_" + std::to_string(j));
    out.names.emplace_back("tau2");
    out.names.emplace_back("sigma2");
    std::vector<Param> recorded;
    for (Param q : family_params(spec.family)) {
        if (q == Param::sigma2) continue;
        recorded.push_back(q);
        out.names.emplace_back(param_name(q));
    }
    const bool with_amplitude = spec.family == Family::SphereGneitingStieltjes;
    if (with_amplitude) out.names.emplace_back("sigma2_kappa");

    const int kept_max = (mcmc.iterations - mcmc.burn_in + mcmc.thin - 1) / mcmc.thin;
    out.draws.resize(kept_max, static_cast<Eigen::Index>(out.names.size()));
    // w is stored at kept rows floor(j * kept_max / n_w), j = 0..n_w-1
    const int n_w = std::clamp(mcmc.w_draws, 0, std::max(kept_max, 0));
    out.w.resize(n_w, n);
    int next_w = 0;
    auto w_target = [&](int j) {
        return static_cast<int>(static_cast<long long>(j) * kept_max / std::max(n_w, 1));
    };
    out.n_burn = mcmc.burn_in;
    out.thin = mcmc.thin;
    out.seed = mcmc.seed;

    std::mt19937_64 rng = rng_stream(mcmc.seed, 0);
    int batch_accept = 0;
    int batch_count = 0;
    int batches = 0;
    long post_accept = 0;
    long post_total = 0;
    int kept = 0;

    for (int it = 0; it < mcmc.iterations; ++it) {
        if (mcmc.stop != nullptr && mcmc.stop->load(std::memory_order_relaxed)) {
            out.interrupted = true;
            break;
        }
        if (spec.update_beta && p > 0) s.beta = gibbs_beta(s, d, prior, rng);
        if (spec.update_tau2) s.tau2 = gibbs_tau2(s, d, prior, rng);
        if (spec.update_sigma2) {
            s.sigma2 = gibbs_sigma2(s, g, kernel.factors(), prior, rng, spec.sigma_update);
        }
        s.params.sigma2 = s.sigma2;
        if (!kernel.sampled().empty()) {
            const bool acc = kernel.step(s, g, rng);
            s.params.sigma2 = s.sigma2;
            if (it < mcmc.burn_in) {
                batch_accept += acc ? 1 : 0;
                if (++batch_count == mcmc.adapt_batch && mcmc.adapt && kernel.scale() > 0.0) {
                    ++batches;
                    const double rate = static_cast<double>(batch_accept) / batch_count;
                    const double gain = std::min(0.5, 1.0 / std::sqrt(static_cast<double>(batches)));
                    kernel.set_scale(kernel.scale() * std::exp(gain * (rate - mcmc.target_acceptance)));
                    batch_accept = 0;
                    batch_count = 0;
                }
            } else {
                post_accept += acc ? 1 : 0;
                ++post_total;
            }
        }
        if (spec.update_w) gibbs_w(s, d, g, kernel.factors(), rng);

        if (it >= mcmc.burn_in && (it - mcmc.burn_in) % mcmc.thin == 0) {
            auto row = out.draws.row(kept);
            Eigen::Index c = 0;
            for (Eigen::Index j = 0; j < p; ++j) row(c++) = s.beta(j);
            row(c++) = s.tau2;
            row(c++) = s.sigma2;
            for (Param q : recorded) row(c++) = s.params.get(q);
            if (with_amplitude) row(c++) = s.sigma2 * kStieltjesKappa;
            if (next_w < n_w && kept == w_target(next_w)) {
                ++next_w;
                const auto row = static_cast<Eigen::Index>(out.w_rows.size());
                for (Eigen::Index i = 0; i < n; ++i) {
                    out.w(row, static_cast<Eigen::Index>(g.order[static_cast<std::size_t>(i)])) = s.w(i);
                }
                out.w_rows.push_back(kept);
            }
            out.iteration.push_back(it);
            ++kept;
        }
    }

    out.draws.conservativeResize(kept, Eigen::NoChange);
    out.w.conservativeResize(static_cast<Eigen::Index>(out.w_rows.size()), out.w.cols());
    out.n_keep = kept;
    out.acceptance = post_total > 0 ? static_cast<double>(post_accept) / static_cast<double>(post_total) : 0.0;
    out.final_scale = kernel.scale();
    fit.summary = summarize(out);
    return fit;
}

Matrix predictive_draws(const ModelFit& fit, std::span<const SpaceTimePoint> targets,
                        const Matrix& covariates, PredictionMode mode, std::uint64_t seed,
                        int threads, int max_draws) {
    const auto& samples = fit.samples;
    if (samples.w_rows.empty() || samples.w.rows() != static_cast<Eigen::Index>(samples.w_rows.size())) {
        throw InferenceError("prediction needs stored w draws");
    }
    const Eigen::Index p = fit.data.X.cols();
    if (covariates.rows() != static_cast<Eigen::Index>(targets.size()) || covariates.cols() != p) {
        throw InferenceError("target covariates do not match the fitted design");
    }
    // positions into w_rows, evenly thinned
    std::vector<Eigen::Index> use;
    const auto total = static_cast<Eigen::Index>(samples.w_rows.size());
    if (max_draws > 0 && max_draws < total) {
        for (int j = 0; j < max_draws; ++j) use.push_back(static_cast<Eigen::Index>(j) * total / max_draws);
    } else {
        for (Eigen::Index k = 0; k < total; ++k) use.push_back(k);
    }
    const auto n_draws = static_cast<Eigen::Index>(use.size());
    const long c_tau = samples.column("tau2");
    const long c_sigma = samples.column("sigma2");

    std::vector<KernelParams> params(static_cast<std::size_t>(n_draws));
    std::vector<Vector> betas(static_cast<std::size_t>(n_draws));
    for (Eigen::Index k = 0; k < n_draws; ++k) {
        const long row = samples.w_rows[static_cast<std::size_t>(use[static_cast<std::size_t>(k)])];
        params[static_cast<std::size_t>(k)] = fit.params_at(row);
        params[static_cast<std::size_t>(k)].sigma2 = 1.0;
        betas[static_cast<std::size_t>(k)] = fit.beta_at(row);
    }

    Matrix out(static_cast<Eigen::Index>(targets.size()), n_draws);
    parallel_for(targets.size(), threads, [&](std::size_t t) {
        std::mt19937_64 rng = rng_stream(seed, t);
        std::normal_distribution<double> z;
        const auto nb = prediction_neighbors(fit.graph, targets[t], mode);
        // input-order column of each reference neighbor
        std::vector<Eigen::Index> cols(nb.size());
        for (std::size_t q = 0; q < nb.size(); ++q) cols[q] = static_cast<Eigen::Index>(fit.graph.order[nb[q]]);

        KrigingWeights kw;
        const KernelParams* cached = nullptr;
        for (Eigen::Index k = 0; k < n_draws; ++k) {
            const KernelParams& pk = params[static_cast<std::size_t>(k)];
            if (cached == nullptr || !(*cached == pk)) {
                const CovarianceModel unit(fit.spec.family, pk);
                if (nb.empty()) {
                    kw = KrigingWeights{Vector(), unit.variance(), -1};
                } else {
                    kw = kriging_weights(unit, fit.graph, targets[t], nb);
                }
                cached = &pk;
            }
            const Eigen::Index wrow = use[static_cast<std::size_t>(k)];
            const Eigen::Index row = samples.w_rows[static_cast<std::size_t>(wrow)];
            double mean = 0.0;
            for (std::size_t q = 0; q < nb.size(); ++q) {
                mean += kw.weights(static_cast<Eigen::Index>(q)) * samples.w(wrow, cols[q]);
            }
            const double sigma2 = samples.draws(row, c_sigma);
            const double tau2 = samples.draws(row, c_tau);
            const double w_star = mean + std::sqrt(sigma2 * kw.variance) * z(rng);
            const double xb = p == 0 ? 0.0 : covariates.row(static_cast<Eigen::Index>(t)).dot(betas[static_cast<std::size_t>(k)]);
            out(static_cast<Eigen::Index>(t), k) = xb + w_star + std::sqrt(tau2) * z(rng);
        }
    });
    return out;
}

}  // namespace spheretime
