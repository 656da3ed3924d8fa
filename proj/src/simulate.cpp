#include "spheretime/simulate.hpp"

#include <string>

namespace spheretime {

std::vector<SpaceTimePoint> SimulationSpec::locations() const {
    return points.empty() ? make_grid(grid) : points;
}

std::vector<SimulatedField> simulate_field(const SimulationSpec& spec, int threads) {
    if (spec.n_replicates < 1) throw SimulationError("need at least one replicate");
    if (!(spec.tau2 >= 0.0)) throw SimulationError("tau2 must be >= 0");
    const auto pts = spec.locations();
    if (pts.empty()) throw SimulationError("no simulation points");
    if (pts.size() > spec.max_points) {
        throw SimulationError(std::to_string(pts.size()) + " points exceed the dense simulation cap of " +
                              std::to_string(spec.max_points));
    }
    const Matrix l = cholesky_with_jitter(spec.model.gram(pts));
    const auto n = static_cast<Eigen::Index>(pts.size());
    const double nugget_sd = std::sqrt(spec.tau2);

    std::vector<SimulatedField> out(static_cast<std::size_t>(spec.n_replicates));
    parallel_for(out.size(), threads, [&](std::size_t r) {
        std::mt19937_64 rng = rng_stream(spec.seed, r);
        std::normal_distribution<double> z;
        Vector e(n);
        for (Eigen::Index i = 0; i < n; ++i) e(i) = z(rng);
        SimulatedField& f = out[r];
        f.points = pts;
        f.w = l.triangularView<Eigen::Lower>() * e;
        f.y = f.w;
        for (Eigen::Index i = 0; i < n; ++i) f.y(i) += nugget_sd * z(rng);
    });
    return out;
}

SphericalGrid desk_grid() {
    return {arange_inclusive(-85.0, -60.0, 5.0), arange_inclusive(-180.0, 0.0, 5.0),
            arange_inclusive(1.0, 10.0, 1.0)};
}

SimulationSpec default_study_spec(Family family, const SphericalGrid& grid) {
    KernelParams p;
    p.c_s = 0.2;
    p.c_t = 2.0;
    switch (family) {
        case Family::SphereGneitingStieltjes:
            p.sigma2 = 4.0 / kStieltjesKappa;
            p.alpha = 0.5;
            p.delta = 0.5;
            break;
        case Family::SphereGneitingCauchy:
            p.sigma2 = 4.0;
            p.alpha = 1.0;
            p.beta = 0.5;
            p.delta = 0.75;
            p.lambda = 1.0;
            p.gamma = 0.5;
            break;
        default:
            throw SimulationError("no study settings for " + std::string(family_name(family)));
    }
    return SimulationSpec{grid, {}, CovarianceModel(family, p), 1.0, 1, 1, 3000};
}

}  // namespace spheretime
