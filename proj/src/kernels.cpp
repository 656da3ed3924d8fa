#include "spheretime/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace spheretime {

namespace {

constexpr std::array<Param, 7> kGneitingChordal{Param::sigma2, Param::c_s,   Param::c_t,
                                                Param::nu,     Param::alpha, Param::beta,
                                                Param::delta};
constexpr std::array<Param, 7> kInvertedExp{Param::sigma2, Param::c_s,  Param::c_t,  Param::alpha,
                                            Param::beta,   Param::gamma, Param::delta};
constexpr std::array<Param, 8> kInvertedCauchy{Param::sigma2, Param::c_s,   Param::c_t,
                                               Param::alpha,  Param::beta,  Param::gamma,
                                               Param::delta,  Param::lambda};
constexpr std::array<Param, 5> kStieltjes{Param::sigma2, Param::c_s, Param::c_t, Param::alpha,
                                          Param::delta};
constexpr std::array<Param, 8> kSphereCauchy{Param::sigma2, Param::c_s,   Param::c_t,
                                             Param::alpha,  Param::beta,  Param::gamma,
                                             Param::delta,  Param::lambda};
constexpr std::array<Param, 4> kHeine{Param::sigma2, Param::c_s, Param::alpha, Param::delta};
constexpr std::array<Param, 3> kMatern{Param::sigma2, Param::c_s, Param::nu};

class Checker {
public:
    Checker(Family f, const KernelParams& p) : family_(f), p_(p) {}

    void positive(Param q) const {
        const double v = p_.get(q);
        if (!(v > 0.0) || !std::isfinite(v)) fail(q, "must be > 0");
    }
    void in_unit(Param q) const {  // (0, 1]
        const double v = p_.get(q);
        if (!(v > 0.0 && v <= 1.0)) fail(q, "must lie in (0, 1]");
    }
    void in_two(Param q) const {  // (0, 2]
        const double v = p_.get(q);
        if (!(v > 0.0 && v <= 2.0)) fail(q, "must lie in (0, 2]");
    }
    void smoothness() const {
        if (p_.nu != 0.5 && p_.nu != 1.5) fail(Param::nu, "must be 0.5 or 1.5");
    }

private:
    [[noreturn]] void fail(Param q, const char* what) const {
        throw KernelParamError(std::string(family_name(family_)) + ": " +
                               std::string(param_name(q)) + " = " +
                               std::to_string(p_.get(q)) + " " + what);
    }

    Family family_;
    const KernelParams& p_;
};

inline double temporal_psi(const KernelParams& p, double u) {
    return 1.0 + std::pow(std::abs(u) / p.c_t, p.alpha);
}

inline double spatial_psi(const KernelParams& p, double theta) {
    return 1.0 + std::pow(theta / p.c_s, p.alpha);
}

}  // namespace

double KernelParams::get(Param p) const {
    switch (p) {
        case Param::sigma2: return sigma2;
        case Param::c_s: return c_s;
        case Param::c_t: return c_t;
        case Param::nu: return nu;
        case Param::alpha: return alpha;
        case Param::beta: return beta;
        case Param::gamma: return gamma;
        case Param::delta: return delta;
        case Param::lambda: return lambda;
    }
    return 0.0;
}

void KernelParams::set(Param p, double value) {
    switch (p) {
        case Param::sigma2: sigma2 = value; break;
        case Param::c_s: c_s = value; break;
        case Param::c_t: c_t = value; break;
        case Param::nu: nu = value; break;
        case Param::alpha: alpha = value; break;
        case Param::beta: beta = value; break;
        case Param::gamma: gamma = value; break;
        case Param::delta: delta = value; break;
        case Param::lambda: lambda = value; break;
    }
}

std::string_view family_name(Family f) {
    switch (f) {
        case Family::GneitingChordal: return "gneiting_chordal";
        case Family::InvertedGneitingExp: return "inverted_gneiting_exp";
        case Family::InvertedGneitingCauchy: return "inverted_gneiting_cauchy";
        case Family::SphereGneitingStieltjes: return "sphere_gneiting_stieltjes";
        case Family::SphereGneitingCauchy: return "sphere_gneiting_cauchy";
        case Family::Heine: return "heine";
        case Family::MaternGreatCircle: return "matern_great_circle";
    }
    return "unknown";
}

Family parse_family(std::string_view name) {
    for (Family f : {Family::GneitingChordal, Family::InvertedGneitingExp,
                     Family::InvertedGneitingCauchy, Family::SphereGneitingStieltjes,
                     Family::SphereGneitingCauchy, Family::Heine, Family::MaternGreatCircle}) {
        if (family_name(f) == name) return f;
    }
    throw KernelParamError("unknown covariance family '" + std::string(name) + "'");
}

std::string_view param_name(Param p) {
    switch (p) {
        case Param::sigma2: return "sigma2";
        case Param::c_s: return "c_s";
        case Param::c_t: return "c_t";
        case Param::nu: return "nu";
        case Param::alpha: return "alpha";
        case Param::beta: return "beta";
        case Param::gamma: return "gamma";
        case Param::delta: return "delta";
        case Param::lambda: return "lambda";
    }
    return "unknown";
}

Param parse_param(std::string_view name) {
    for (Param p : kAllParams) {
        if (param_name(p) == name) return p;
    }
    throw KernelParamError("unknown kernel parameter '" + std::string(name) + "'");
}

std::span<const Param> family_params(Family f) {
    switch (f) {
        case Family::GneitingChordal: return kGneitingChordal;
        case Family::InvertedGneitingExp: return kInvertedExp;
        case Family::InvertedGneitingCauchy: return kInvertedCauchy;
        case Family::SphereGneitingStieltjes: return kStieltjes;
        case Family::SphereGneitingCauchy: return kSphereCauchy;
        case Family::Heine: return kHeine;
        case Family::MaternGreatCircle: return kMatern;
    }
    return {};
}

bool family_uses(Family f, Param p) {
    const auto ps = family_params(f);
    return std::find(ps.begin(), ps.end(), p) != ps.end();
}

SpatialMetric family_metric(Family f) {
    return f == Family::GneitingChordal ? SpatialMetric::chordal : SpatialMetric::great_circle;
}

void validate_params(Family f, const KernelParams& p) {
    const Checker c(f, p);
    c.positive(Param::sigma2);
    c.positive(Param::c_s);
    switch (f) {
        case Family::GneitingChordal:
            if (p.dim < 1) throw KernelParamError("gneiting_chordal: dim must be >= 1");
            c.positive(Param::c_t);
            c.smoothness();
            c.in_two(Param::alpha);
            c.in_unit(Param::beta);
            c.positive(Param::delta);
            break;
        case Family::InvertedGneitingExp:
        case Family::InvertedGneitingCauchy:
            c.positive(Param::c_t);
            c.in_unit(Param::alpha);
            c.in_unit(Param::beta);
            c.in_unit(Param::gamma);
            c.positive(Param::delta);
            if (f == Family::InvertedGneitingCauchy) c.positive(Param::lambda);
            break;
        case Family::SphereGneitingStieltjes:
            c.positive(Param::c_t);
            c.in_two(Param::alpha);
            c.in_unit(Param::delta);
            break;
        case Family::SphereGneitingCauchy:
            c.positive(Param::c_t);
            c.in_two(Param::alpha);
            c.in_unit(Param::beta);
            c.in_unit(Param::gamma);
            c.positive(Param::delta);
            c.positive(Param::lambda);
            break;
        case Family::Heine:
            c.in_unit(Param::alpha);
            c.in_unit(Param::delta);
            break;
        case Family::MaternGreatCircle:
            c.smoothness();
            break;
    }
}

double matern(double t, double c_s, double nu) {
    const double r = t / c_s;
    if (nu == 0.5) return std::exp(-r);
    if (nu == 1.5) return std::exp(-r) * (1.0 + r);
    throw KernelParamError("matern: only nu = 0.5 and nu = 1.5 are supported");
}

double stieltjes_phi(double t) {
    const double s = std::sqrt(t + 1.0);
    return kStieltjesKappa * (-std::expm1(-2.0 * s)) / s;
}

double eval_gneiting_chordal(const KernelParams& p, double h, double u) {
    const double psi = temporal_psi(p, u);
    const double exponent = p.delta + 0.5 * p.beta * p.dim;
    return p.sigma2 / std::pow(psi, exponent) * matern(h / std::pow(psi, 0.5 * p.beta), p.c_s, p.nu);
}

double eval_inverted_gneiting(InvertedVariant v, const KernelParams& p, double theta, double u) {
    const double psi = spatial_psi(p, theta);
    const double scale = p.sigma2 / std::pow(psi, p.delta + 0.5 * p.beta);
    const double ratio = std::pow(std::abs(u) / p.c_t, 2.0 * p.gamma) / std::pow(psi, p.beta * p.gamma);
    if (v == InvertedVariant::exp) return scale * std::exp(-ratio);
    return scale * std::pow(1.0 + ratio, -p.lambda);
}

double eval_sphere_gneiting(SphereVariant v, const KernelParams& p, double theta, double u) {
    const double psi = temporal_psi(p, u);
    if (v == SphereVariant::stieltjes) {
        const double dilation = std::pow(psi, p.delta);
        return p.sigma2 / dilation * stieltjes_phi(theta / (p.c_s * dilation));
    }
    const double scale = p.sigma2 / std::pow(psi, p.delta + 0.5 * p.beta);
    const double ratio =
        std::pow(theta / p.c_s, p.gamma) / std::pow(psi, p.beta * p.gamma);
    return scale * std::pow(1.0 + ratio, -p.lambda);
}

double eval_heine(const KernelParams& p, double theta, double u) {
    const double psi = std::pow(spatial_psi(p, theta), p.delta);
    const double root = std::sqrt(psi);
    const double lag = std::abs(u);
    const double shift = lag / (2.0 * root);
    const double decaying = std::exp(-lag) * erfc(root - shift);
    // e^{|u|} erfc(.) overflows as infinity * 0 for large lags; combine in log space.
    const double growing = std::exp(lag + log_erfc(root + shift));
    return decaying + growing;
}

CovarianceModel::CovarianceModel(Family family, KernelParams params)
    : family_(family), params_(params) {
    validate_params(family_, params_);
    if (family_ == Family::Heine) {
        KernelParams raw = params_;
        heine_scale_ = params_.sigma2 / eval_heine(raw, 0.0, 0.0);
    }
}

double CovarianceModel::operator()(double theta, double u) const {
    switch (family_) {
        case Family::GneitingChordal:
            return eval_gneiting_chordal(params_, chordal_from_angle(theta), u);
        case Family::InvertedGneitingExp:
            return eval_inverted_gneiting(InvertedVariant::exp, params_, theta, u);
        case Family::InvertedGneitingCauchy:
            return eval_inverted_gneiting(InvertedVariant::cauchy, params_, theta, u);
        case Family::SphereGneitingStieltjes:
            return eval_sphere_gneiting(SphereVariant::stieltjes, params_, theta, u);
        case Family::SphereGneitingCauchy:
            return eval_sphere_gneiting(SphereVariant::cauchy, params_, theta, u);
        case Family::Heine:
            return heine_scale_ * eval_heine(params_, theta, u);
        case Family::MaternGreatCircle:
            return params_.sigma2 * matern(theta, params_.c_s, params_.nu);
    }
    return 0.0;
}

double CovarianceModel::amplitude() const {
    return family_ == Family::SphereGneitingStieltjes ? params_.sigma2 * kStieltjesKappa
                                                      : params_.sigma2;
}

CovarianceModel CovarianceModel::unit_variance() const {
    KernelParams p = params_;
    p.sigma2 = 1.0;
    return {family_, p};
}

Matrix CovarianceModel::gram(std::span<const SpaceTimePoint> pts) const {
    const auto n = static_cast<Eigen::Index>(pts.size());
    Matrix g(n, n);
    const double c00 = variance();
    for (Eigen::Index i = 0; i < n; ++i) {
        g(i, i) = c00;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double c = between(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
            g(i, j) = c;
            g(j, i) = c;
        }
    }
    return g;
}

Matrix correlation_surface(const CovarianceModel& model, std::span<const double> thetas,
                           std::span<const double> lags) {
    const double c0 = model.variance();
    Matrix out(static_cast<Eigen::Index>(thetas.size()), static_cast<Eigen::Index>(lags.size()));
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        for (std::size_t j = 0; j < lags.size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                model(thetas[i], lags[j]) / c0;
        }
    }
    return out;
}

}  // namespace spheretime
