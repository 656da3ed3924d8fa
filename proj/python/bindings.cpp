#include "spheretime/commands.hpp"
#include "spheretime/geometry.hpp"
#include "spheretime/inference.hpp"
#include "spheretime/kernels.hpp"
#include "spheretime/nngp.hpp"
#include "spheretime/scoring.hpp"
#include "spheretime/simulate.hpp"
#include "spheretime/validity.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace py = pybind11;
namespace st = spheretime;

namespace {

using ParamDict = std::map<std::string, double>;

st::KernelParams to_params(const ParamDict& d) {
    st::KernelParams p;
    for (const auto& [name, value] : d) {
        if (name == "dim") {
            p.dim = static_cast<int>(value);
        } else {
            p.set(st::parse_param(name), value);
        }
    }
    return p;
}

st::CovarianceModel make_model(const std::string& family, const ParamDict& params) {
    return {st::parse_family(family), to_params(params)};
}

std::vector<st::SpaceTimePoint> to_points(const std::vector<double>& lat, const std::vector<double>& lon,
                                          const std::vector<double>& time) {
    if (lat.size() != lon.size() || lat.size() != time.size()) {
        throw std::invalid_argument("lat, lon and time must have equal lengths");
    }
    std::vector<st::SpaceTimePoint> pts;
    pts.reserve(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        pts.push_back({st::SpherePoint::from_latlon(lat[i], lon[i]), time[i]});
    }
    return pts;
}

py::dict report_dict(const st::PDReport& r) {
    py::dict d;
    d["method"] = r.method;
    d["verdict"] = std::string(st::verdict_name(r.verdict));
    d["refuted"] = r.refuted();
    d["trials"] = r.trials;
    d["min_eig_ratio"] = r.min_eig_ratio;
    d["notes"] = r.notes;
    if (r.witness) {
        py::dict w;
        w["kind"] = r.witness->kind;
        w["value"] = r.witness->eigenvalue;
        w["radius"] = r.witness->radius;
        w["degree"] = r.witness->degree;
        w["tau"] = r.witness->tau;
        d["witness"] = w;
    } else {
        d["witness"] = py::none();
    }
    return d;
}

st::NeighborConfig neighbor_config(int m_s, int m_t) {
    st::NeighborConfig c;
    c.m_s = m_s;
    c.m_t = m_t;
    return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "C++ core of the spheretime package";

    py::register_exception<st::KernelParamError>(m, "KernelParamError", PyExc_ValueError);
    py::register_exception<st::NNGPError>(m, "NNGPError", PyExc_RuntimeError);
    py::register_exception<st::InferenceError>(m, "InferenceError", PyExc_RuntimeError);
    py::register_exception<st::NotPositiveDefinite>(m, "NotPositiveDefinite", PyExc_ArithmeticError);

    std::vector<std::string> families;
    for (auto f : {st::Family::GneitingChordal, st::Family::InvertedGneitingExp, st::Family::InvertedGneitingCauchy,
                   st::Family::SphereGneitingStieltjes, st::Family::SphereGneitingCauchy, st::Family::Heine,
                   st::Family::MaternGreatCircle}) {
        families.emplace_back(st::family_name(f));
    }
    m.attr("FAMILIES") = families;

    py::enum_<st::ExitCode>(m, "ExitCode")
        .value("OK", st::kExitOk)
        .value("CONFIG", st::kExitConfig)
        .value("IO", st::kExitIo)
        .value("REFUTED", st::kExitRefuted)
        .value("NUMERICAL", st::kExitNumerical);

    m.def(
        "great_circle",
        [](double lat1, double lon1, double lat2, double lon2) {
            return st::great_circle(st::SpherePoint::from_latlon(lat1, lon1), st::SpherePoint::from_latlon(lat2, lon2));
        },
        py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"),
        "Great-circle angle in radians between two (lat, lon) points in degrees.");

    m.def(
        "covariance",
        [](const std::string& family, const ParamDict& params, double theta, double u) {
            return make_model(family, params)(theta, u);
        },
        py::arg("family"), py::arg("params"), py::arg("theta"), py::arg("u"),
        "C(theta, u) with theta the great-circle angle.");

    m.def(
        "correlation_surface",
        [](const std::string& family, const ParamDict& params, const std::vector<double>& thetas,
           const std::vector<double>& lags) { return st::correlation_surface(make_model(family, params), thetas, lags); },
        py::arg("family"), py::arg("params"), py::arg("thetas"), py::arg("lags"));

    m.def(
        "gram_eig_check",
        [](const std::string& family, const ParamDict& params, int n_points, int n_trials, std::uint64_t seed) {
            st::GramOptions o;
            o.n_points = n_points;
            o.n_trials = n_trials;
            o.seed = seed;
            py::gil_scoped_release release;
            auto r = st::gram_eig_check(make_model(family, params), o);
            py::gil_scoped_acquire acquire;
            return report_dict(r);
        },
        py::arg("family"), py::arg("params"), py::arg("n_points") = 200, py::arg("n_trials") = 20,
        py::arg("seed") = 1);

    m.def(
        "check_schoenberg",
        [](const std::string& family, const ParamDict& params, int max_k) {
            st::SchoenbergOptions o;
            o.max_k = max_k;
            return report_dict(st::check_schoenberg(make_model(family, params), o));
        },
        py::arg("family"), py::arg("params"), py::arg("max_k") = 60);

    m.def(
        "nngp_logpdf",
        [](const std::string& family, const ParamDict& params, const std::vector<double>& lat,
           const std::vector<double>& lon, const std::vector<double>& time, const st::Vector& w, int m_s, int m_t) {
            const auto pts = to_points(lat, lon, time);
            const auto g = st::build_graph(pts, neighbor_config(m_s, m_t));
            st::Vector w_ref(w.size());
            for (std::size_t i = 0; i < g.size(); ++i) {
                w_ref(static_cast<Eigen::Index>(i)) = w(static_cast<Eigen::Index>(g.order[i]));
            }
            return st::nngp_logpdf(st::compute_factors(g, make_model(family, params)), g, w_ref);
        },
        py::arg("family"), py::arg("params"), py::arg("lat"), py::arg("lon"), py::arg("time"), py::arg("w"),
        py::arg("m_s") = 5, py::arg("m_t") = 5, "Vecchia log-density of w (input order).");

    m.def(
        "exact_logpdf",
        [](const std::string& family, const ParamDict& params, const std::vector<double>& lat,
           const std::vector<double>& lon, const std::vector<double>& time, const st::Vector& w) {
            const auto pts = to_points(lat, lon, time);
            const st::Matrix l = st::cholesky(make_model(family, params).gram(pts));
            const st::Vector z = l.triangularView<Eigen::Lower>().solve(w);
            constexpr double kLog2Pi = 1.8378770664093454835606594728112;
            return -0.5 * (static_cast<double>(w.size()) * kLog2Pi + st::cholesky_logdet(l) + z.squaredNorm());
        },
        py::arg("family"), py::arg("params"), py::arg("lat"), py::arg("lon"), py::arg("time"), py::arg("w"),
        "Dense multivariate-normal log-density of w.");

    m.def(
        "simulate",
        [](const std::string& family, const ParamDict& params, double tau2, const std::vector<double>& lat,
           const std::vector<double>& lon, const std::vector<double>& time, int replicates, std::uint64_t seed) {
            st::SimulationSpec spec{{}, to_points(lat, lon, time), make_model(family, params), tau2, replicates, seed,
                                    3000};
            const auto fields = st::simulate_field(spec);
            st::Matrix y(static_cast<Eigen::Index>(fields.size()), static_cast<Eigen::Index>(lat.size()));
            st::Matrix w(y.rows(), y.cols());
            for (std::size_t r = 0; r < fields.size(); ++r) {
                y.row(static_cast<Eigen::Index>(r)) = fields[r].y.transpose();
                w.row(static_cast<Eigen::Index>(r)) = fields[r].w.transpose();
            }
            return py::make_tuple(y, w);
        },
        py::arg("family"), py::arg("params"), py::arg("tau2"), py::arg("lat"), py::arg("lon"), py::arg("time"),
        py::arg("replicates") = 1, py::arg("seed") = 1,
        "Exact draws at the given points; returns (y, w), one row per replicate.");

    m.def(
        "run_chain",
        [](const std::string& family, const ParamDict& start, const std::vector<std::string>& sampled,
           const std::vector<double>& lat, const std::vector<double>& lon, const std::vector<double>& time,
           const st::Vector& y, int iterations, int burn_in, std::uint64_t seed, int m_s, int m_t, double tau2_start) {
            st::RegressionData data;
            data.points = to_points(lat, lon, time);
            data.y = y;
            data.X = st::Matrix::Ones(y.size(), 1);
            st::SamplerSpec spec;
            spec.family = st::parse_family(family);
            spec.start = to_params(start);
            spec.tau2_start = tau2_start;
            for (const auto& s : sampled) spec.sampled.push_back(st::parse_param(s));
            st::McmcConfig mc;
            mc.iterations = iterations;
            mc.burn_in = burn_in;
            mc.seed = seed;
            mc.w_draws = 0;
            st::ModelFit fit;
            {
                py::gil_scoped_release release;
                fit = st::run_chain(data, spec, {}, neighbor_config(m_s, m_t), mc);
            }
            py::dict draws;
            for (std::size_t c = 0; c < fit.samples.names.size(); ++c) {
                draws[py::str(fit.samples.names[c])] = st::Vector(fit.samples.draws.col(static_cast<Eigen::Index>(c)));
            }
            py::dict out;
            out["draws"] = draws;
            out["acceptance"] = fit.samples.acceptance;
            py::dict summary;
            for (const auto& s : fit.summary) {
                summary[py::str(s.name)] = py::dict(py::arg("mean") = s.mean, py::arg("sd") = s.sd,
                                                    py::arg("q025") = s.q025, py::arg("q975") = s.q975);
            }
            out["summary"] = summary;
            return out;
        },
        py::arg("family"), py::arg("start"), py::arg("sampled"), py::arg("lat"), py::arg("lon"), py::arg("time"),
        py::arg("y"), py::arg("iterations") = 2000, py::arg("burn_in") = 500, py::arg("seed") = 1, py::arg("m_s") = 5,
        py::arg("m_t") = 5, py::arg("tau2_start") = 1.0,
        "Intercept-only NNGP Gibbs sampler; returns draws, summary and acceptance.");

    m.def("crps_empirical", [](const std::vector<double>& draws, double y) { return st::crps_empirical(draws, y); },
          py::arg("draws"), py::arg("y"));
    m.def("crps_gaussian", &st::crps_gaussian, py::arg("mu"), py::arg("sigma"), py::arg("y"));

    m.def(
        "run_command",
        [](const std::string& verb, const std::string& config, const std::string& data, const std::string& out,
           const std::string& fit, const std::vector<std::string>& predictions, std::optional<std::uint64_t> seed) {
            st::CommandOptions o{config, data, out, fit, predictions, seed, std::nullopt};
            std::ostringstream so;
            std::ostringstream se;
            int rc = 0;
            {
                py::gil_scoped_release release;
                rc = st::run_command(verb, o, so, se);
            }
            return py::make_tuple(rc, so.str(), se.str());
        },
        py::arg("verb"), py::arg("config") = "", py::arg("data") = "", py::arg("out") = "", py::arg("fit") = "",
        py::arg("predictions") = std::vector<std::string>{}, py::arg("seed") = py::none(),
        "Runs a CLI verb in-process; returns (exit_code, stdout, stderr).");
}
