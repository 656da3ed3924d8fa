#pragma once

#include "spheretime/geometry.hpp"
#include "spheretime/kernels.hpp"
#include "spheretime/numerics.hpp"

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace spheretime {

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimulationSpec {
    SphericalGrid grid;
    std::vector<SpaceTimePoint> points;  // used instead of the grid when nonempty
    CovarianceModel model;
    double tau2 = 1.0;
    int n_replicates = 1;
    std::uint64_t seed = 1;
    std::size_t max_points = 3000;

    [[nodiscard]] std::vector<SpaceTimePoint> locations() const;
};

struct SimulatedField {
    std::vector<SpaceTimePoint> points;
    Vector w;  // latent process
    Vector y;  // w plus nugget noise
};

/// Exact draws w = L z from the dense Cholesky factor of the Gram matrix, plus
/// N(0, tau2) noise. Replicate r uses stream r of the seed.
std::vector<SimulatedField> simulate_field(const SimulationSpec& spec, int threads = 1);

/// Southern-hemisphere grid at 5 degree spacing, -85..-60 by -180..0, times 1..10.
/// The -90 row is left out because its 37 longitudes are one point.
SphericalGrid desk_grid();

/// Parameter-recovery settings for the Stieltjes (sigma2 kappa = 4, c_s = 0.2,
/// c_t = 2, alpha = delta = 1/2) or generalized Cauchy (sigma2 = 4, c_s = 0.2,
/// c_t = 2, alpha = 1, beta = 1/2, delta = 3/4, lambda = 1, gamma = 1/2)
/// sphere-Gneiting families, both with tau2 = 1.
SimulationSpec default_study_spec(Family family, const SphericalGrid& grid = desk_grid());

}  // namespace spheretime
