#pragma once

#include "spheretime/geometry.hpp"
#include "spheretime/numerics.hpp"

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spheretime {

class KernelParamError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Family {
    GneitingChordal,          // Gneiting class, Matern margin, chordal distance
    InvertedGneitingExp,      // inverted Gneiting, exponential temporal margin
    InvertedGneitingCauchy,   // inverted Gneiting, generalized Cauchy temporal margin
    SphereGneitingStieltjes,  // space rescaled by time, Stieltjes generator
    SphereGneitingCauchy,     // space rescaled by time, generalized Cauchy spatial margin
    Heine,                    // erfc mixture, normalized to C(0,0) = sigma2
    MaternGreatCircle,        // purely spatial Matern of the great-circle angle; not valid in general
};

enum class Param { sigma2, c_s, c_t, nu, alpha, beta, gamma, delta, lambda };

inline constexpr std::array<Param, 9> kAllParams{Param::sigma2, Param::c_s,   Param::c_t,
                                                 Param::nu,     Param::alpha, Param::beta,
                                                 Param::gamma,  Param::delta, Param::lambda};

enum class SpatialMetric { great_circle, chordal };

/// Superset of every family's hyperparameters. Unused entries are ignored.
struct KernelParams {
    double sigma2 = 1.0;
    double c_s = 1.0;
    double c_t = 1.0;
    double nu = 0.5;
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 0.5;
    double delta = 1.0;
    double lambda = 1.0;
    int dim = 2;  // sphere dimension; enters the Gneiting chordal exponent

    [[nodiscard]] double get(Param p) const;
    void set(Param p, double value);

    friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

/// 1 / (1 - e^{-2}); makes the Stieltjes generator equal 1 at the origin.
inline const double kStieltjesKappa = 1.0 / (1.0 - std::exp(-2.0));

std::string_view family_name(Family f);
Family parse_family(std::string_view name);
std::string_view param_name(Param p);
Param parse_param(std::string_view name);

/// Parameters a family reads, sigma2 first.
std::span<const Param> family_params(Family f);
bool family_uses(Family f, Param p);
SpatialMetric family_metric(Family f);

/// Throws KernelParamError naming the family and the offending parameter.
void validate_params(Family f, const KernelParams& p);

/// Matern correlation with closed forms for nu in {1/2, 3/2}.
double matern(double t, double c_s, double nu);

/// Stieltjes generator kappa (1 - exp(-2 sqrt(t+1))) / sqrt(t+1).
double stieltjes_phi(double t);

double eval_gneiting_chordal(const KernelParams& p, double h, double u);

enum class InvertedVariant { exp, cauchy };
double eval_inverted_gneiting(InvertedVariant v, const KernelParams& p, double theta, double u);

enum class SphereVariant { stieltjes, cauchy };
double eval_sphere_gneiting(SphereVariant v, const KernelParams& p, double theta, double u);

/// Raw erfc mixture with psi(theta) = (1 + (theta / c_s)^alpha)^delta; no sigma2.
double eval_heine(const KernelParams& p, double theta, double u);

/// Immutable, validated covariance function on S^d x R.
class CovarianceModel {
public:
    CovarianceModel(Family family, KernelParams params);

    [[nodiscard]] Family family() const noexcept { return family_; }
    [[nodiscard]] const KernelParams& params() const noexcept { return params_; }
    [[nodiscard]] SpatialMetric metric() const noexcept { return family_metric(family_); }

    /// Covariance at great-circle angle theta and temporal lag u. Chordal
    /// families convert theta to 2 sin(theta / 2) internally.
    [[nodiscard]] double operator()(double theta, double u) const;

    [[nodiscard]] double between(const SpaceTimePoint& a, const SpaceTimePoint& b) const {
        return (*this)(great_circle(a.location, b.location), std::abs(a.time - b.time));
    }

    /// C(0, 0); equals sigma2 for every family.
    [[nodiscard]] double variance() const { return (*this)(0.0, 0.0); }

    /// sigma2 * kappa for the Stieltjes family, sigma2 otherwise.
    [[nodiscard]] double amplitude() const;

    [[nodiscard]] CovarianceModel with_params(const KernelParams& p) const {
        return {family_, p};
    }
    [[nodiscard]] CovarianceModel unit_variance() const;

    [[nodiscard]] Matrix gram(std::span<const SpaceTimePoint> pts) const;

private:
    Family family_;
    KernelParams params_;
    double heine_scale_ = 1.0;
};

/// Rows follow `thetas`, columns `lags`; entries C(theta, u) / C(0, 0).
Matrix correlation_surface(const CovarianceModel& model, std::span<const double> thetas,
                           std::span<const double> lags);

}  // namespace spheretime
