#pragma once

#include "spheretime/kernels.hpp"
#include "spheretime/nngp.hpp"
#include "spheretime/numerics.hpp"

#include <atomic>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spheretime {

class InferenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Bounds {
    double lo = 0.0;
    double hi = 1.0;
};

struct PriorSpec {
    Vector beta_mean;        // empty: zeros
    Matrix beta_precision;   // V_beta^{-1}; empty: zero (flat prior)
    double a_sigma2 = 0.1;
    double b_sigma2 = 0.1;
    double a_tau2 = 0.1;
    double b_tau2 = 0.1;
    std::map<Param, Bounds> bounds;  // uniform priors of the sampled hyperparameters
};

/// Uniform prior ranges used when a sampled parameter has no explicit bounds.
Bounds default_bounds(Family family, Param p);

enum class SigmaUpdate {
    standard,    // IG(a + n/2, b + sum r^2 / (2 F~))
    as_printed,  // IG(a + n/2, b + sigma2 * sum r^2 / F), the literal printed scale
};

/// What the chain updates and where it starts.
struct SamplerSpec {
    Family family = Family::SphereGneitingStieltjes;
    KernelParams start;               // initial values; unsampled entries stay fixed
    std::vector<Param> sampled;       // Metropolis block; sigma2 is never listed here
    bool delta_from_beta = false;     // delta = 1 - beta/2 (1 - beta d/2 for the chordal family)
    double tau2_start = 1.0;
    Vector beta_start;                // empty: least squares
    Vector w_start;                   // input order; empty: zeros
    bool update_beta = true;
    bool update_tau2 = true;
    bool update_sigma2 = true;
    bool update_w = true;
    SigmaUpdate sigma_update = SigmaUpdate::standard;
};

struct McmcConfig {
    int iterations = 30000;  // including burn-in
    int burn_in = 5000;
    int thin = 1;
    std::uint64_t seed = 1;
    double proposal_scale = 0.3;  // initial logit-scale step, shared by the block
    bool adapt = true;
    double target_acceptance = 0.3;
    int adapt_batch = 50;
    int w_draws = 1000;  // w is stored for at most this many evenly spaced kept draws
    int threads = 1;
    const std::atomic<bool>* stop = nullptr;  // polled once per iteration
};

/// Response, covariates and locations in input order.
struct RegressionData {
    std::vector<SpaceTimePoint> points;
    Vector y;
    Matrix X;  // n x p; p may be 0
};

struct ChainState {
    Vector beta;
    double tau2 = 1.0;
    double sigma2 = 1.0;
    KernelParams params;
    Vector w;  // reference order
};

/// Data permuted into the graph's reference order.
struct OrderedData {
    Vector y;
    Matrix X;
};

OrderedData reorder(const RegressionData& data, const NeighborGraph& graph);

struct NormalConditional {
    Vector mean;
    Matrix cov;
};

struct InverseGammaParams {
    double shape = 0.0;
    double scale = 0.0;
};

struct ScalarNormal {
    double mean = 0.0;
    double variance = 0.0;
};

NormalConditional beta_conditional(const ChainState& s, const OrderedData& d, const PriorSpec& prior);
InverseGammaParams tau2_conditional(const ChainState& s, const OrderedData& d, const PriorSpec& prior);
/// `unit` are factors of the unit-variance kernel, so F_i = sigma2 * unit.F[i].
InverseGammaParams sigma2_conditional(const ChainState& s, const NeighborGraph& g,
                                      const NNGPFactors& unit, const PriorSpec& prior,
                                      SigmaUpdate mode = SigmaUpdate::standard);
ScalarNormal w_conditional(const ChainState& s, const OrderedData& d, const NeighborGraph& g,
                           const NNGPFactors& unit, std::size_t i);

double draw_inverse_gamma(const InverseGammaParams& ig, std::mt19937_64& rng);

Vector gibbs_beta(const ChainState& s, const OrderedData& d, const PriorSpec& prior,
                  std::mt19937_64& rng);
double gibbs_tau2(const ChainState& s, const OrderedData& d, const PriorSpec& prior,
                  std::mt19937_64& rng);
double gibbs_sigma2(const ChainState& s, const NeighborGraph& g, const NNGPFactors& unit,
                    const PriorSpec& prior, std::mt19937_64& rng,
                    SigmaUpdate mode = SigmaUpdate::standard);
/// Sequential sweep in reference order; updates s.w in place.
void gibbs_w(ChainState& s, const OrderedData& d, const NeighborGraph& g, const NNGPFactors& unit,
             std::mt19937_64& rng);

/// Random-walk Metropolis over logit coordinates of the sampled hyperparameters.
class KernelSampler {
public:
    KernelSampler(const SamplerSpec& spec, const PriorSpec& prior, double proposal_scale,
                  int threads = 1);

    /// Unit-variance factors at the current parameters.
    [[nodiscard]] const NNGPFactors& factors() const noexcept { return factors_; }
    [[nodiscard]] double scale() const noexcept { return scale_; }
    void set_scale(double s) { scale_ = s; }
    [[nodiscard]] const std::vector<Param>& sampled() const noexcept { return sampled_; }

    /// Builds factors for s.params. Must be called once before step().
    void initialize(const ChainState& s, const NeighborGraph& g);

    /// One joint proposal. Returns whether it was accepted; s.params and the
    /// cached factors move together.
    bool step(ChainState& s, const NeighborGraph& g, std::mt19937_64& rng);

    /// Applies the delta constraint, if configured, to `p`.
    void apply_constraint(KernelParams& p) const;

private:
    Family family_;
    std::vector<Param> sampled_;
    std::vector<Bounds> bounds_;
    bool delta_from_beta_;
    double scale_;
    int threads_;
    NNGPFactors factors_;
};

struct PosteriorSamples {
    std::vector<std::string> names;  // beta_0.., tau2, sigma2, kernel params
    Matrix draws;                    // one row per kept iteration
    Matrix w;                        // stored w draws in input order
    std::vector<long> w_rows;        // kept-draw row of each stored w draw
    std::vector<long> iteration;
    int n_burn = 0;
    int n_keep = 0;
    int thin = 1;
    std::uint64_t seed = 0;
    double acceptance = 0.0;         // kernel block, after burn-in
    double final_scale = 0.0;        // frozen proposal scale
    bool interrupted = false;

    [[nodiscard]] long column(std::string_view name) const;
    [[nodiscard]] std::vector<double> values(std::string_view name) const;
};

struct ParamSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
};

std::vector<ParamSummary> summarize(const PosteriorSamples& samples);

struct ModelFit {
    SamplerSpec spec;
    PriorSpec prior;
    NeighborConfig neighbors;
    RegressionData data;
    NeighborGraph graph;
    PosteriorSamples samples;
    std::vector<ParamSummary> summary;

    /// Kernel parameters of kept draw `k`.
    [[nodiscard]] KernelParams params_at(long k) const;
    [[nodiscard]] Vector beta_at(long k) const;
};

/// Iteration order [beta, tau2, sigma2, kernel Metropolis, w sweep].
ModelFit run_chain(const RegressionData& data, const SamplerSpec& spec, const PriorSpec& prior,
                   const NeighborConfig& neighbors, const McmcConfig& mcmc);

/// Posterior predictive draws at `targets` (one row per target, one column
/// per used draw), using the draws that carry a stored w. `max_draws` > 0
/// thins those evenly.
Matrix predictive_draws(const ModelFit& fit, std::span<const SpaceTimePoint> targets,
                        const Matrix& covariates, PredictionMode mode, std::uint64_t seed,
                        int threads = 1, int max_draws = 0);

}  // namespace spheretime
