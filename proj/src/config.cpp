#include "spheretime/config.hpp"

#include "spheretime/dataset.hpp"
#include "spheretime/simulate.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace spheretime {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string f;
    while (std::getline(ss, f, sep)) {
        f = trim(f);
        if (!f.empty()) out.push_back(f);
    }
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ',';
        out += fmt(v[i]);
    }
    return out;
}

// Consumes keys from a ConfigMap; whatever is left over is unknown.
class Reader {
public:
    explicit Reader(const ConfigMap& m) : map_(m) {}

    const ConfigEntry* take(const std::string& key) {
        auto it = map_.find(key);
        if (it == map_.end()) return nullptr;
        used_.insert(key);
        return &it->second;
    }

    [[noreturn]] static void bad(const std::string& key, const ConfigEntry& e, const std::string& why) {
        throw ConfigError("line " + std::to_string(e.line) + ": " + key + " = '" + e.value + "': " + why);
    }

    static double to_double(const std::string& key, const ConfigEntry& e, const std::string& text) {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
            bad(key, e, "not a finite number");
        }
        return v;
    }

    void real(const std::string& key, double& out) {
        if (const auto* e = take(key)) out = to_double(key, *e, e->value);
    }

    void positive(const std::string& key, double& out) {
        if (const auto* e = take(key)) {
            out = to_double(key, *e, e->value);
            if (!(out > 0.0)) bad(key, *e, "must be > 0");
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out, long long lo) {
        if (const auto* e = take(key)) {
            errno = 0;
            char* end = nullptr;
            const long long v = std::strtoll(e->value.c_str(), &end, 10);
            if (e->value.empty() || end != e->value.c_str() + e->value.size() || errno == ERANGE) {
                bad(key, *e, "not an integer");
            }
            if (v < lo) bad(key, *e, "must be >= " + std::to_string(lo));
            out = static_cast<Int>(v);
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const auto* e = take(key)) {
            if (e->value == "true" || e->value == "1" || e->value == "yes") {
                out = true;
            } else if (e->value == "false" || e->value == "0" || e->value == "no") {
                out = false;
            } else {
                bad(key, *e, "expected true or false");
            }
        }
    }

    // "lo:hi:step" (inclusive) or "a,b,c"
    void axis(const std::string& key, std::vector<double>& out) {
        const auto* e = take(key);
        if (e == nullptr) return;
        if (e->value.find(':') != std::string::npos) {
            const auto parts = split_list(e->value, ':');
            if (parts.size() != 3) bad(key, *e, "range must be lo:hi:step");
            try {
                out = arange_inclusive(to_double(key, *e, parts[0]), to_double(key, *e, parts[1]),
                                       to_double(key, *e, parts[2]));
            } catch (const std::exception& ex) {
                bad(key, *e, ex.what());
            }
        } else {
            out.clear();
            for (const auto& p : split_list(e->value, ',')) out.push_back(to_double(key, *e, p));
        }
        if (out.empty()) bad(key, *e, "empty axis");
    }

    void finish() const {
        for (const auto& [key, e] : map_) {
            if (used_.count(key) == 0) {
                throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + key + "'");
            }
        }
    }

private:
    const ConfigMap& map_;
    std::set<std::string> used_;
};

bool domain_capped(Family f, Param p) {
    switch (p) {
        case Param::alpha:
        case Param::beta:
        case Param::gamma: return true;
        case Param::delta: return f == Family::SphereGneitingStieltjes || f == Family::Heine;
        default: return false;
    }
}

}  // namespace

ConfigMap parse_config_text(std::istream& in, const std::string& source) {
    ConfigMap out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
        if (out.count(key) != 0) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": key '" + key +
                              "' repeats line " + std::to_string(out[key].line));
        }
        out[key] = {value, line_no};
    }
    return out;
}

ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    return parse_config_text(in, path);
}

void set_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.mcmc.seed = seed;
    cfg.validate.gram_options.seed = seed;
}

RunConfig parse_run_config(const ConfigMap& entries) {
    RunConfig cfg;
    cfg.simulate.grid = desk_grid();
    Reader r(entries);

    std::uint64_t seed = 1;
    r.integer("seed", seed, 0);
    r.boolean("intercept", cfg.intercept);
    if (const auto* e = r.take("output.dir")) cfg.output_dir = e->value;

    auto& sp = cfg.sampler;
    if (const auto* e = r.take("model.family")) {
        try {
            sp.family = parse_family(e->value);
        } catch (const std::exception& ex) {
            Reader::bad("model.family", *e, ex.what());
        }
    }
    for (Param p : kAllParams) {
        const std::string key = "model." + std::string(param_name(p));
        if (const auto* e = r.take(key)) {
            if (!family_uses(sp.family, p)) Reader::bad(key, *e, "not a parameter of " + std::string(family_name(sp.family)));
            sp.start.set(p, Reader::to_double(key, *e, e->value));
        }
    }
    r.integer("model.dim", sp.start.dim, 1);
    r.positive("model.tau2", sp.tau2_start);
    if (const auto* e = r.take("model.sample")) {
        for (const auto& name : split_list(e->value, ',')) {
            Param p{};
            try {
                p = parse_param(name);
            } catch (const std::exception& ex) {
                Reader::bad("model.sample", *e, ex.what());
            }
            if (p == Param::sigma2 || p == Param::nu) {
                Reader::bad("model.sample", *e, name + " is not sampled by Metropolis");
            }
            if (!family_uses(sp.family, p)) {
                Reader::bad("model.sample", *e, name + " is not a parameter of " + std::string(family_name(sp.family)));
            }
            for (Param q : sp.sampled) {
                if (q == p) Reader::bad("model.sample", *e, name + " listed twice");
            }
            sp.sampled.push_back(p);
        }
    }
    if (const auto* e = r.take("model.constraint")) {
        if (e->value == "delta_from_beta") {
            sp.delta_from_beta = true;
        } else if (e->value != "none") {
            Reader::bad("model.constraint", *e, "expected none or delta_from_beta");
        }
    }
    if (const auto* e = r.take("model.sigma_update")) {
        if (e->value == "standard") {
            sp.sigma_update = SigmaUpdate::standard;
        } else if (e->value == "as_printed") {
            sp.sigma_update = SigmaUpdate::as_printed;
        } else {
            Reader::bad("model.sigma_update", *e, "expected standard or as_printed");
        }
    }

    auto& pr = cfg.prior;
    r.positive("prior.a_sigma2", pr.a_sigma2);
    r.positive("prior.b_sigma2", pr.b_sigma2);
    r.positive("prior.a_tau2", pr.a_tau2);
    r.positive("prior.b_tau2", pr.b_tau2);
    std::vector<double> beta_mean;
    if (const auto* e = r.take("prior.beta_mean")) {
        for (const auto& v : split_list(e->value, ',')) beta_mean.push_back(Reader::to_double("prior.beta_mean", *e, v));
    }
    double beta_precision = 0.0;
    if (const auto* e = r.take("prior.beta_precision")) {
        beta_precision = Reader::to_double("prior.beta_precision", *e, e->value);
        if (beta_precision < 0.0) Reader::bad("prior.beta_precision", *e, "must be >= 0");
    }
    for (Param p : kAllParams) {
        const std::string key = "prior." + std::string(param_name(p));
        const auto* e = r.take(key);
        if (e == nullptr) continue;
        const auto parts = split_list(e->value, ',');
        if (parts.size() != 2) Reader::bad(key, *e, "expected lo,hi");
        const Bounds b{Reader::to_double(key, *e, parts[0]), Reader::to_double(key, *e, parts[1])};
        if (!(b.lo >= 0.0 && b.lo < b.hi)) Reader::bad(key, *e, "need 0 <= lo < hi");
        if (p == Param::sigma2 || p == Param::nu) Reader::bad(key, *e, "bounds apply to Metropolis parameters only");
        if (domain_capped(sp.family, p) && b.hi > default_bounds(sp.family, p).hi) {
            Reader::bad(key, *e, "upper bound exceeds the parameter domain");
        }
        pr.bounds[p] = b;
    }

    auto& nb = cfg.neighbors;
    if (const auto* e = r.take("neighbors.scheme")) {
        if (e->value == "rectangular") {
            nb.scheme = NeighborScheme::rectangular;
        } else if (e->value == "lexicographic") {
            nb.scheme = NeighborScheme::lexicographic;
        } else {
            Reader::bad("neighbors.scheme", *e, "expected rectangular or lexicographic");
        }
    }
    r.integer("neighbors.m", nb.m, 1);
    r.integer("neighbors.m_s", nb.m_s, 1);
    r.integer("neighbors.m_t", nb.m_t, 1);
    if (const auto* e = r.take("neighbors.metric")) {
        if (e->value == "great_circle") {
            nb.metric = SpatialMetric::great_circle;
        } else if (e->value == "chordal") {
            nb.metric = SpatialMetric::chordal;
        } else {
            Reader::bad("neighbors.metric", *e, "expected great_circle or chordal");
        }
    }

    auto& mc = cfg.mcmc;
    r.integer("mcmc.iterations", mc.iterations, 1);
    r.integer("mcmc.burn_in", mc.burn_in, 0);
    r.integer("mcmc.thin", mc.thin, 1);
    r.real("mcmc.proposal_scale", mc.proposal_scale);
    r.boolean("mcmc.adapt", mc.adapt);
    r.positive("mcmc.target_acceptance", mc.target_acceptance);
    r.integer("mcmc.adapt_batch", mc.adapt_batch, 1);
    r.integer("mcmc.w_draws", mc.w_draws, 0);
    r.integer("threads", mc.threads, 1);

    auto& sim = cfg.simulate;
    r.axis("simulate.lat", sim.grid.latitudes);
    r.axis("simulate.lon", sim.grid.longitudes);
    r.axis("simulate.time", sim.grid.times);
    r.integer("simulate.replicates", sim.replicates, 1);
    r.integer("simulate.max_points", sim.max_points, 1);
    r.integer("simulate.holdout_locations", sim.holdout_locations, 0);

    if (const auto* e = r.take("predict.mode")) {
        if (e->value == "prospective") {
            cfg.predict.mode = PredictionMode::prospective;
        } else if (e->value == "retrospective") {
            cfg.predict.mode = PredictionMode::retrospective;
        } else {
            Reader::bad("predict.mode", *e, "expected prospective or retrospective");
        }
    }
    r.integer("predict.max_draws", cfg.predict.max_draws, 0);

    auto& va = cfg.validate;
    if (const auto* e = r.take("validate.methods")) {
        va.gram = va.schoenberg = va.fourier = false;
        for (const auto& m : split_list(e->value, ',')) {
            if (m == "gram") {
                va.gram = true;
            } else if (m == "schoenberg") {
                va.schoenberg = true;
            } else if (m == "fourier") {
                va.fourier = true;
            } else {
                Reader::bad("validate.methods", *e, "unknown method " + m);
            }
        }
    }
    r.integer("validate.points", va.gram_options.n_points, 2);
    r.integer("validate.trials", va.gram_options.n_trials, 1);
    r.positive("validate.time_span", va.gram_options.time_span);
    r.positive("validate.rel_tol", va.gram_options.rel_tol);
    r.integer("validate.max_k", va.schoenberg_options.max_k, 0);
    r.integer("validate.fourier_max_k", va.fourier_options.max_k, 0);
    va.schoenberg_options.rel_tol = va.gram_options.rel_tol;
    va.fourier_options.rel_tol = va.gram_options.rel_tol;
    va.gram_options.dim = va.schoenberg_options.dim = va.fourier_options.dim = sp.start.dim;
    va.gram_options.threads = mc.threads;

    auto& co = cfg.contour;
    r.positive("contour.theta_max", co.theta_max);
    r.integer("contour.theta_points", co.theta_points, 2);
    r.positive("contour.lag_max", co.lag_max);
    r.integer("contour.lag_points", co.lag_points, 2);
    r.integer("contour.max_draws", co.max_draws, 1);

    r.finish();

    // cross-key checks
    if (mc.iterations <= mc.burn_in) throw ConfigError("mcmc.iterations must exceed mcmc.burn_in");
    if (!(mc.proposal_scale >= 0.0)) throw ConfigError("mcmc.proposal_scale must be >= 0");
    if (sp.delta_from_beta) {
        if (!family_uses(sp.family, Param::beta) || !family_uses(sp.family, Param::delta)) {
            throw ConfigError("model.constraint delta_from_beta needs a family with beta and delta");
        }
        for (Param p : sp.sampled) {
            if (p == Param::delta) throw ConfigError("model.sample lists delta, which the constraint derives");
        }
        const double d = sp.family == Family::GneitingChordal ? sp.start.dim : 1.0;
        sp.start.delta = 1.0 - 0.5 * sp.start.beta * d;
    }
    try {
        validate_params(sp.family, sp.start);
    } catch (const KernelParamError& ex) {
        throw ConfigError(std::string("model parameters: ") + ex.what());
    }
    for (std::size_t k = 0; k < sp.sampled.size(); ++k) {
        const Param p = sp.sampled[k];
        auto it = pr.bounds.find(p);
        const Bounds b = it != pr.bounds.end() ? it->second : default_bounds(sp.family, p);
        const double v = sp.start.get(p);
        if (!(v > b.lo && v < b.hi)) {
            throw ConfigError("model." + std::string(param_name(p)) + " = " + fmt(v) +
                              " lies outside its prior bounds");
        }
    }
    for (const auto& [p, b] : pr.bounds) {
        bool listed = false;
        for (Param q : sp.sampled) listed = listed || q == p;
        if (!listed) {
            throw ConfigError("prior." + std::string(param_name(p)) + " given for a parameter that is not sampled");
        }
    }
    const Eigen::Index p_beta = (cfg.intercept ? 1 : 0);
    if (!beta_mean.empty()) pr.beta_mean = Eigen::Map<Vector>(beta_mean.data(), static_cast<Eigen::Index>(beta_mean.size()));
    if (beta_precision > 0.0) {
        const Eigen::Index dim = beta_mean.empty() ? p_beta : static_cast<Eigen::Index>(beta_mean.size());
        pr.beta_precision = Matrix::Identity(dim, dim) * beta_precision;
    }
    set_seed(cfg, seed);
    return cfg;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(load_config_file(path)); }

std::string render_config(const RunConfig& cfg) {
    std::ostringstream o;
    const auto& sp = cfg.sampler;
    o << "seed = " << cfg.seed << '\n';
    o << "threads = " << cfg.mcmc.threads << '\n';
    o << "intercept = " << (cfg.intercept ? "true" : "false") << '\n';
    o << "output.dir = " << cfg.output_dir << '\n';
    o << "model.family = " << family_name(sp.family) << '\n';
    for (Param p : family_params(sp.family)) o << "model." << param_name(p) << " = " << fmt(sp.start.get(p)) << '\n';
    o << "model.dim = " << sp.start.dim << '\n';
    o << "model.tau2 = " << fmt(sp.tau2_start) << '\n';
    if (!sp.sampled.empty()) {
        o << "model.sample = ";
        for (std::size_t k = 0; k < sp.sampled.size(); ++k) o << (k ? "," : "") << param_name(sp.sampled[k]);
        o << '\n';
    }
    o << "model.constraint = " << (sp.delta_from_beta ? "delta_from_beta" : "none") << '\n';
    o << "model.sigma_update = " << (sp.sigma_update == SigmaUpdate::standard ? "standard" : "as_printed") << '\n';
    const auto& pr = cfg.prior;
    o << "prior.a_sigma2 = " << fmt(pr.a_sigma2) << '\n';
    o << "prior.b_sigma2 = " << fmt(pr.b_sigma2) << '\n';
    o << "prior.a_tau2 = " << fmt(pr.a_tau2) << '\n';
    o << "prior.b_tau2 = " << fmt(pr.b_tau2) << '\n';
    if (pr.beta_mean.size() > 0) {
        o << "prior.beta_mean = " << fmt_list(std::vector<double>(pr.beta_mean.data(), pr.beta_mean.data() + pr.beta_mean.size())) << '\n';
    }
    if (pr.beta_precision.size() > 0) o << "prior.beta_precision = " << fmt(pr.beta_precision(0, 0)) << '\n';
    for (const auto& [p, b] : pr.bounds) o << "prior." << param_name(p) << " = " << fmt(b.lo) << ',' << fmt(b.hi) << '\n';
    const auto& nb = cfg.neighbors;
    o << "neighbors.scheme = " << (nb.scheme == NeighborScheme::rectangular ? "rectangular" : "lexicographic") << '\n';
    o << "neighbors.m = " << nb.m << '\n';
    o << "neighbors.m_s = " << nb.m_s << '\n';
    o << "neighbors.m_t = " << nb.m_t << '\n';
    o << "neighbors.metric = " << (nb.metric == SpatialMetric::great_circle ? "great_circle" : "chordal") << '\n';
    const auto& mc = cfg.mcmc;
    o << "mcmc.iterations = " << mc.iterations << '\n';
    o << "mcmc.burn_in = " << mc.burn_in << '\n';
    o << "mcmc.thin = " << mc.thin << '\n';
    o << "mcmc.proposal_scale = " << fmt(mc.proposal_scale) << '\n';
    o << "mcmc.adapt = " << (mc.adapt ? "true" : "false") << '\n';
    o << "mcmc.target_acceptance = " << fmt(mc.target_acceptance) << '\n';
    o << "mcmc.adapt_batch = " << mc.adapt_batch << '\n';
    o << "mcmc.w_draws = " << mc.w_draws << '\n';
    const auto& sim = cfg.simulate;
    o << "simulate.lat = " << fmt_list(sim.grid.latitudes) << '\n';
    o << "simulate.lon = " << fmt_list(sim.grid.longitudes) << '\n';
    o << "simulate.time = " << fmt_list(sim.grid.times) << '\n';
    o << "simulate.replicates = " << sim.replicates << '\n';
    o << "simulate.max_points = " << sim.max_points << '\n';
    o << "simulate.holdout_locations = " << sim.holdout_locations << '\n';
    o << "predict.mode = " << (cfg.predict.mode == PredictionMode::prospective ? "prospective" : "retrospective") << '\n';
    o << "predict.max_draws = " << cfg.predict.max_draws << '\n';
    const auto& va = cfg.validate;
    std::string methods;
    if (va.gram) methods += "gram,";
    if (va.schoenberg) methods += "schoenberg,";
    if (va.fourier) methods += "fourier,";
    if (!methods.empty()) methods.pop_back();
    o << "validate.methods = " << methods << '\n';
    o << "validate.points = " << va.gram_options.n_points << '\n';
    o << "validate.trials = " << va.gram_options.n_trials << '\n';
    o << "validate.time_span = " << fmt(va.gram_options.time_span) << '\n';
    o << "validate.rel_tol = " << fmt(va.gram_options.rel_tol) << '\n';
    o << "validate.max_k = " << va.schoenberg_options.max_k << '\n';
    o << "validate.fourier_max_k = " << va.fourier_options.max_k << '\n';
    const auto& co = cfg.contour;
    o << "contour.theta_max = " << fmt(co.theta_max) << '\n';
    o << "contour.theta_points = " << co.theta_points << '\n';
    o << "contour.lag_max = " << fmt(co.lag_max) << '\n';
    o << "contour.lag_points = " << co.lag_points << '\n';
    o << "contour.max_draws = " << co.max_draws << '\n';
    return o.str();
}

}  // namespace spheretime
