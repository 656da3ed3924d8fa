#pragma once

#include "spheretime/geometry.hpp"
#include "spheretime/kernels.hpp"
#include "spheretime/numerics.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace spheretime {

class NNGPError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class NeighborScheme {
    rectangular,    // m_s spatial nearest at each of the m_t closest times
    lexicographic,  // nearest by (|time lag|, spatial distance)
};

struct NeighborConfig {
    NeighborScheme scheme = NeighborScheme::rectangular;
    int m = 25;    // budget for the lexicographic scheme
    int m_s = 5;
    int m_t = 5;
    SpatialMetric metric = SpatialMetric::great_circle;

    [[nodiscard]] int budget() const {
        return scheme == NeighborScheme::rectangular ? m_s * m_t : m;
    }
};

/// Time-ordered reference set with its directed acyclic neighbor structure.
struct NeighborGraph {
    struct InverseEdge {
        std::size_t site;  // j with i in N(j)
        std::size_t slot;  // position of i inside N(j)
    };
    struct TimeBlock {
        double time;
        std::size_t begin;
        std::size_t end;
    };

    NeighborConfig config;
    std::vector<SpaceTimePoint> reference;  // sorted by (time, lat, lon)
    std::vector<std::size_t> order;         // reference[i] == input[order[i]]
    std::vector<TimeBlock> blocks;          // contiguous runs of equal time
    std::vector<std::vector<std::size_t>> neighbors;  // ascending, all < i
    std::vector<std::vector<InverseEdge>> inverse;

    [[nodiscard]] std::size_t size() const noexcept { return reference.size(); }
};

/// Sorts the points, checks for duplicates and builds N(i) and U(i).
NeighborGraph build_graph(std::span<const SpaceTimePoint> points, const NeighborConfig& config);

/// Per-site conditional regressions w_i | w_N(i) ~ N(B_i w_N(i), F_i).
struct NNGPFactors {
    std::vector<Vector> B;
    std::vector<double> F;
};

/// With `jitter`, failing neighbor blocks are retried with a ridge and F_i is
/// floored at 1e-10 C(0,0); without it any failure throws.
NNGPFactors compute_factors(const NeighborGraph& graph, const CovarianceModel& model,
                            bool jitter = false, int threads = 1);

/// w_i - B_i w_N(i) for every site.
Vector nngp_residuals(const NNGPFactors& factors, const NeighborGraph& graph, const Vector& w);

double nngp_logpdf(const NNGPFactors& factors, const NeighborGraph& graph, const Vector& w);

/// Same density with F_i scaled by `variance_scale` (unit-variance factors).
double nngp_logpdf_scaled(const NNGPFactors& factors, const NeighborGraph& graph, const Vector& w,
                          double variance_scale);

enum class PredictionMode { prospective, retrospective };

/// Reference indices used to predict at `target`. Prospective mode admits
/// only reference times <= target time. `m` <= 0 uses the graph budget.
std::vector<std::size_t> prediction_neighbors(const NeighborGraph& graph,
                                              const SpaceTimePoint& target, PredictionMode mode,
                                              int m = 0);

struct ConditionalNormal {
    double mean = 0.0;
    double variance = 0.0;
    bool prior_fallback = false;  // no admissible neighbors
    long exact_match = -1;        // reference index when target coincides with it
};

/// Kriging weights and conditional variance for a fixed neighbor set.
struct KrigingWeights {
    Vector weights;
    double variance = 0.0;
    long exact_match = -1;
};

KrigingWeights kriging_weights(const CovarianceModel& model, const NeighborGraph& graph,
                               const SpaceTimePoint& target,
                               std::span<const std::size_t> neighbors);

ConditionalNormal predict_conditional(const CovarianceModel& model, const NeighborGraph& graph,
                                      const Vector& w_ref, const SpaceTimePoint& target,
                                      PredictionMode mode, int m = 0);

}  // namespace spheretime
