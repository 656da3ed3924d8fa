#pragma once

#include "spheretime/kernels.hpp"

#include <cmath>
#include <vector>

namespace fixtures {

using spheretime::CovarianceModel;
using spheretime::Family;
using spheretime::KernelParams;

inline KernelParams stieltjes_params() {
    KernelParams p;
    p.sigma2 = 4.0 / spheretime::kStieltjesKappa;
    p.c_s = 0.2;
    p.c_t = 2.0;
    p.alpha = 0.5;
    p.delta = 0.5;
    return p;
}

inline KernelParams sphere_cauchy_params() {
    KernelParams p;
    p.sigma2 = 4.0;
    p.c_s = 0.2;
    p.c_t = 2.0;
    p.alpha = 1.0;
    p.beta = 0.5;
    p.delta = 0.75;
    p.lambda = 1.0;
    p.gamma = 0.5;
    return p;
}

/// One valid parameter set for each of the six space-time families.
inline std::vector<CovarianceModel> paper_models() {
    std::vector<CovarianceModel> out;
    KernelParams g;
    g.sigma2 = 2.0;
    g.c_s = 0.5;
    g.c_t = 1.5;
    g.nu = 1.5;
    g.alpha = 1.0;
    g.beta = 0.5;
    g.delta = 0.5;
    out.emplace_back(Family::GneitingChordal, g);

    KernelParams inv;
    inv.sigma2 = 1.5;
    inv.c_s = 0.4;
    inv.c_t = 2.0;
    inv.alpha = 0.8;
    inv.beta = 0.6;
    inv.gamma = 0.5;
    inv.delta = 0.7;
    inv.lambda = 1.2;
    out.emplace_back(Family::InvertedGneitingExp, inv);
    out.emplace_back(Family::InvertedGneitingCauchy, inv);

    out.emplace_back(Family::SphereGneitingStieltjes, stieltjes_params());
    out.emplace_back(Family::SphereGneitingCauchy, sphere_cauchy_params());

    KernelParams h;
    h.sigma2 = 3.0;
    h.c_s = 0.5;
    h.alpha = 1.0;
    h.delta = 0.5;
    out.emplace_back(Family::Heine, h);
    return out;
}

}  // namespace fixtures
