#include "spheretime/commands.hpp"

#include "spheretime/simulate.hpp"

#include "json.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

namespace spheretime {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) out.push_back(f);
    return out;
}

double to_double(const std::string& s, const std::string& where) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw DataError(where + ": cannot parse '" + s + "'");
    return v;
}

// Headered tab-separated numeric table.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Table read_table(const std::string& path) {
    auto in = open_in(path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    t.header = split_tabs(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        if (f.size() != t.header.size()) {
            throw DataError(path + ":" + std::to_string(line_no) + ": wrong number of columns");
        }
        std::vector<double> row;
        row.reserve(f.size());
        for (const auto& v : f) row.push_back(to_double(v, path + ":" + std::to_string(line_no)));
        t.rows.push_back(std::move(row));
    }
    return t;
}

json report_json(const PDReport& r) {
    json j;
    j["method"] = r.method;
    j["verdict"] = std::string(verdict_name(r.verdict));
    j["trials"] = r.trials;
    j["min_eig_ratio"] = std::isfinite(r.min_eig_ratio) ? json(r.min_eig_ratio) : json(nullptr);
    j["notes"] = r.notes;
    if (r.witness) {
        json w;
        w["kind"] = r.witness->kind;
        w["value"] = r.witness->eigenvalue;
        w["radius"] = r.witness->radius;
        w["degree"] = r.witness->degree;
        w["tau"] = r.witness->tau;
        w["n_points"] = r.witness->points.size();
        j["witness"] = w;
    }
    return j;
}

json point_json(const SpaceTimePoint& p) {
    json j;
    if (p.location.sphere_dim() == 2) {
        j["lat"] = p.location.latitude();
        j["lon"] = p.location.longitude();
    }
    j["coords"] = p.location.coords();
    j["time"] = p.time;
    return j;
}

std::vector<double> row_sorted(const Matrix& m, Eigen::Index r) {
    std::vector<double> v(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) v[static_cast<std::size_t>(j)] = m(r, j);
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

void save_samples(const std::string& path, const PosteriorSamples& s) {
    auto out = open_out(path);
    out << "iteration";
    for (const auto& n : s.names) out << '\t' << n;
    out << '\n';
    for (Eigen::Index r = 0; r < s.draws.rows(); ++r) {
        out << s.iteration[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < s.draws.cols(); ++c) out << '\t' << fmt(s.draws(r, c));
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

void save_w_draws(const std::string& path, const PosteriorSamples& s) {
    auto out = open_out(path);
    out << "draw";
    for (Eigen::Index i = 0; i < s.w.cols(); ++i) out << "\tw_" << i;
    out << '\n';
    for (Eigen::Index r = 0; r < s.w.rows(); ++r) {
        out << s.w_rows[static_cast<std::size_t>(r)];
        for (Eigen::Index i = 0; i < s.w.cols(); ++i) out << '\t' << fmt(s.w(r, i));
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + path);
}

PosteriorSamples load_samples(const std::string& path) {
    const Table t = read_table(path);
    if (t.header.empty() || t.header[0] != "iteration") throw DataError(path + ": missing iteration column");
    PosteriorSamples s;
    s.names.assign(t.header.begin() + 1, t.header.end());
    s.draws.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(s.names.size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        s.iteration.push_back(static_cast<long>(t.rows[r][0]));
        for (std::size_t c = 0; c < s.names.size(); ++c) {
            s.draws(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t.rows[r][c + 1];
        }
    }
    s.n_keep = static_cast<int>(t.rows.size());
    return s;
}

void load_w_draws(const std::string& path, PosteriorSamples& s) {
    const Table t = read_table(path);
    if (t.header.empty() || t.header[0] != "draw") throw DataError(path + ": missing draw column");
    const auto n = static_cast<Eigen::Index>(t.header.size() - 1);
    s.w.resize(static_cast<Eigen::Index>(t.rows.size()), n);
    s.w_rows.clear();
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto row = static_cast<long>(t.rows[r][0]);
        if (row < 0 || row >= s.draws.rows()) throw DataError(path + ": draw index out of range");
        s.w_rows.push_back(row);
        for (Eigen::Index i = 0; i < n; ++i) s.w(static_cast<Eigen::Index>(r), i) = t.rows[r][static_cast<std::size_t>(i) + 1];
    }
}

void save_fit(const std::string& dir, const ModelFit& fit, const RunConfig& cfg, const Dataset& train) {
    if (train.size() != fit.data.points.size()) throw DataError("training rows do not match the fit");
    ensure_dir(dir);
    {
        auto out = open_out(join(dir, "config.cfg"));
        out << render_config(cfg);
    }
    save_csv(join(dir, "train.csv"), train, false);

    save_samples(join(dir, "samples.tsv"), fit.samples);
    save_w_draws(join(dir, "w.tsv"), fit.samples);

    {
        auto out = open_out(join(dir, "summary.tsv"));
        auto lines = open_out(join(dir, "summary.jsonl"));
        out << "parameter\tmean\tsd\tq2.5\tq97.5\n";
        for (const auto& s : fit.summary) {
            out << s.name << '\t' << fmt(s.mean) << '\t' << fmt(s.sd) << '\t' << fmt(s.q025) << '\t'
                << fmt(s.q975) << '\n';
            lines << json{{"parameter", s.name}, {"mean", s.mean}, {"sd", s.sd}, {"q2.5", s.q025}, {"q97.5", s.q975}}.dump()
                  << '\n';
        }
    }
    json meta;
    meta["family"] = std::string(family_name(fit.spec.family));
    meta["n_train"] = fit.data.points.size();
    meta["n_burn"] = fit.samples.n_burn;
    meta["n_keep"] = fit.samples.n_keep;
    meta["thin"] = fit.samples.thin;
    meta["seed"] = fit.samples.seed;
    meta["acceptance"] = fit.samples.acceptance;
    meta["final_scale"] = fit.samples.final_scale;
    meta["interrupted"] = fit.samples.interrupted;
    auto out = open_out(join(dir, "fit.json"));
    out << meta.dump(2) << '\n';
}

LoadedFit load_fit(const std::string& dir) {
    LoadedFit lf;
    lf.config = load_run_config(join(dir, "config.cfg"));
    const Dataset train = load_csv(join(dir, "train.csv"));
    auto& fit = lf.fit;
    fit.spec = lf.config.sampler;
    fit.prior = lf.config.prior;
    fit.neighbors = lf.config.neighbors;
    fit.data = train.regression(lf.config.intercept);
    fit.graph = build_graph(fit.data.points, fit.neighbors);
    fit.samples = load_samples(join(dir, "samples.tsv"));
    load_w_draws(join(dir, "w.tsv"), fit.samples);
    if (fit.samples.w.cols() != static_cast<Eigen::Index>(train.size())) {
        throw DataError(dir + ": w draws do not match train.csv");
    }
    std::ifstream meta_in(join(dir, "fit.json"));
    if (meta_in) {
        const json meta = json::parse(meta_in, nullptr, false);
        if (!meta.is_discarded()) {
            fit.samples.n_burn = meta.value("n_burn", 0);
            fit.samples.thin = meta.value("thin", 1);
            fit.samples.seed = meta.value("seed", std::uint64_t{0});
            fit.samples.acceptance = meta.value("acceptance", 0.0);
            fit.samples.final_scale = meta.value("final_scale", 0.0);
            fit.samples.interrupted = meta.value("interrupted", false);
        }
    }
    fit.summary = summarize(fit.samples);
    return lf;
}

std::vector<Dataset> cmd_simulate(const RunConfig& cfg, const std::string& out_dir) {
    if (cfg.sampler.start.dim != 2) throw ConfigError("simulate needs model.dim = 2 (lat/lon grid)");
    SimulationSpec spec{cfg.simulate.grid, {}, cfg.model(), cfg.sampler.tau2_start, cfg.simulate.replicates,
                        cfg.seed, cfg.simulate.max_points};
    const auto fields = simulate_field(spec, cfg.mcmc.threads);
    const auto& g = cfg.simulate.grid;

    // hold-out locations shared by every replicate
    std::set<std::size_t> held;
    const std::size_t n_loc = g.latitudes.size() * g.longitudes.size();
    if (cfg.simulate.holdout_locations > 0) {
        if (cfg.simulate.holdout_locations >= n_loc) throw ConfigError("simulate.holdout_locations leaves no training locations");
        std::vector<std::size_t> loc(n_loc);
        for (std::size_t k = 0; k < n_loc; ++k) loc[k] = k;
        std::mt19937_64 rng = rng_stream(cfg.seed, 1u << 20);
        std::shuffle(loc.begin(), loc.end(), rng);
        held.insert(loc.begin(), loc.begin() + static_cast<long>(cfg.simulate.holdout_locations));
    }

    ensure_dir(out_dir);
    std::vector<Dataset> out;
    for (std::size_t r = 0; r < fields.size(); ++r) {
        Dataset d;
        std::size_t i = 0;
        for (double t : g.times) {
            for (std::size_t a = 0; a < g.latitudes.size(); ++a) {
                for (std::size_t b = 0; b < g.longitudes.size(); ++b, ++i) {
                    const Split s = held.count(a * g.longitudes.size() + b) ? Split::holdout : Split::train;
                    d.push_back(g.latitudes[a], g.longitudes[b], t, fields[r].y(static_cast<Eigen::Index>(i)), s);
                }
            }
        }
        d.source = "simulate";
        char name[32];
        if (fields.size() == 1) {
            std::snprintf(name, sizeof name, "data.csv");
        } else {
            std::snprintf(name, sizeof name, "data_%03zu.csv", r + 1);
        }
        save_csv(join(out_dir, name), d);
        out.push_back(std::move(d));
    }
    auto truth = open_out(join(out_dir, "truth.cfg"));
    truth << render_config(cfg);
    return out;
}

ModelFit cmd_fit(const RunConfig& cfg, const Dataset& data, const std::string& out_dir,
                 const std::atomic<bool>* stop) {
    const Dataset train = data.subset(Split::train);
    if (train.size() == 0) throw DataError("no training rows in " + data.source);
    for (double v : train.y) {
        if (!std::isfinite(v)) throw DataError("training response contains missing values");
    }
    McmcConfig mc = cfg.mcmc;
    mc.stop = stop;
    ModelFit fit = run_chain(train.regression(cfg.intercept), cfg.sampler, cfg.prior, cfg.neighbors, mc);
    save_fit(out_dir, fit, cfg, train);
    return fit;
}

PredictionResult cmd_predict(const LoadedFit& lf, const PredictSettings& settings, const Dataset& targets,
                             const std::string& out_dir) {
    PredictionResult res;
    res.model = std::string(family_name(lf.fit.spec.family));
    res.targets = targets.subset(Split::holdout);
    if (res.targets.size() == 0) res.targets = targets;
    if (res.targets.size() == 0) throw DataError("no prediction targets");
    if (res.targets.X.cols() + (lf.config.intercept ? 1 : 0) != lf.fit.data.X.cols()) {
        throw DataError("targets carry a different number of covariates than the fit");
    }
    const auto pts = res.targets.points();
    const std::uint64_t seed = lf.config.seed * 0x9E3779B97F4A7C15ULL + 1;
    res.draws = predictive_draws(lf.fit, pts, res.targets.design(lf.config.intercept), settings.mode, seed,
                                 lf.config.mcmc.threads, settings.max_draws);

    ensure_dir(out_dir);
    {
        auto out = open_out(join(out_dir, "predictions.csv"));
        out << "lat,lon,time,y,mean,sd,q05,q95\n";
        for (Eigen::Index i = 0; i < res.draws.rows(); ++i) {
            const auto v = row_sorted(res.draws, i);
            const double mean = res.draws.row(i).mean();
            const double sd = std::sqrt((res.draws.row(i).array() - mean).square().sum() /
                                        std::max<double>(1.0, static_cast<double>(res.draws.cols() - 1)));
            const auto k = static_cast<std::size_t>(i);
            out << fmt(res.targets.lat[k]) << ',' << fmt(res.targets.lon[k]) << ',' << fmt(res.targets.time[k]) << ','
                << fmt(res.targets.y[k]) << ',' << fmt(mean) << ',' << fmt(sd) << ',' << fmt(quantile_sorted(v, 0.05))
                << ',' << fmt(quantile_sorted(v, 0.95)) << '\n';
        }
    }
    {
        auto out = open_out(join(out_dir, "draws.tsv"));
        out << "lat\tlon\ttime\ty";
        for (Eigen::Index j = 0; j < res.draws.cols(); ++j) out << "\td" << j;
        out << '\n';
        for (Eigen::Index i = 0; i < res.draws.rows(); ++i) {
            const auto k = static_cast<std::size_t>(i);
            out << fmt(res.targets.lat[k]) << '\t' << fmt(res.targets.lon[k]) << '\t' << fmt(res.targets.time[k]) << '\t'
                << fmt(res.targets.y[k]);
            for (Eigen::Index j = 0; j < res.draws.cols(); ++j) out << '\t' << fmt(res.draws(i, j));
            out << '\n';
        }
    }
    json meta;
    meta["model"] = res.model;
    meta["mode"] = settings.mode == PredictionMode::prospective ? "prospective" : "retrospective";
    meta["n_targets"] = res.draws.rows();
    meta["n_draws"] = res.draws.cols();
    auto out = open_out(join(out_dir, "predict.json"));
    out << meta.dump(2) << '\n';
    return res;
}

PredictionResult load_prediction(const std::string& dir) {
    PredictionResult res;
    auto meta_in = open_in(join(dir, "predict.json"));
    const json meta = json::parse(meta_in, nullptr, false);
    if (meta.is_discarded() || !meta.contains("model")) throw DataError(dir + "/predict.json is malformed");
    res.model = meta["model"].get<std::string>();
    const Table t = read_table(join(dir, "draws.tsv"));
    if (t.header.size() < 6) throw DataError(dir + "/draws.tsv needs at least two draws");
    const auto m = static_cast<Eigen::Index>(t.header.size() - 4);
    res.draws.resize(static_cast<Eigen::Index>(t.rows.size()), m);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        res.targets.push_back(r[0], r[1], r[2], r[3], Split::holdout);
        for (Eigen::Index j = 0; j < m; ++j) res.draws(static_cast<Eigen::Index>(i), j) = r[static_cast<std::size_t>(j) + 4];
    }
    return res;
}

std::vector<ScoreReport> cmd_compare(const std::vector<std::string>& prediction_dirs, const std::string& out_dir) {
    if (prediction_dirs.empty()) throw ConfigError("compare needs at least one prediction directory");
    std::vector<ScoreReport> reports;
    std::map<std::string, int> seen;
    for (const auto& dir : prediction_dirs) {
        const auto pred = load_prediction(dir);
        const Vector y = Eigen::Map<const Vector>(pred.targets.y.data(), static_cast<Eigen::Index>(pred.targets.size()));
        if (!y.allFinite()) throw DataError(dir + ": observed values are missing; nothing to score");
        std::string name = pred.model;
        if (seen[name]++ > 0) name += "#" + std::to_string(seen[pred.model]);
        reports.push_back(score_model(pred.draws, y, name));
    }
    normalize_relative_crps(reports);

    ensure_dir(out_dir);
    auto table = open_out(join(out_dir, "compare.txt"));
    table << render_table(reports);
    auto lines = open_out(join(out_dir, "compare.jsonl"));
    for (const auto& r : reports) {
        lines << json{{"model", r.model},         {"n", r.n},
                      {"prmse", r.prmse},         {"pmae", r.pmae},
                      {"coverage90", r.coverage90}, {"crps", r.mean_crps},
                      {"relative_crps", r.relative_crps}}
                     .dump()
              << '\n';
    }
    return reports;
}

std::vector<PDReport> cmd_validate(const RunConfig& cfg, const std::string& out_dir) {
    const CovarianceModel model = cfg.model();
    const auto& va = cfg.validate;
    std::vector<PDReport> reports;
    if (va.gram) reports.push_back(gram_eig_check(model, va.gram_options));
    if (va.schoenberg) reports.push_back(check_schoenberg(model, va.schoenberg_options));
    if (va.fourier) reports.push_back(check_temporal_fourier(model, va.fourier_options));
    if (reports.empty()) throw ConfigError("validate.methods selects no check");

    ensure_dir(out_dir);
    auto lines = open_out(join(out_dir, "validate.jsonl"));
    json witnesses = json::array();
    for (const auto& r : reports) {
        json j = report_json(r);
        j["family"] = std::string(family_name(model.family()));
        lines << j.dump() << '\n';
        if (r.witness) {
            json w = j["witness"];
            w["method"] = r.method;
            json pts = json::array();
            for (const auto& p : r.witness->points) pts.push_back(point_json(p));
            w["points"] = pts;
            witnesses.push_back(w);
        }
    }
    if (!witnesses.empty()) {
        auto out = open_out(join(out_dir, "witness.json"));
        out << witnesses.dump(2) << '\n';
    }
    return reports;
}

ContourGrid cmd_contour(const RunConfig& cfg, const LoadedFit* fit, const std::string& out_dir) {
    const auto& co = cfg.contour;
    ContourGrid g;
    for (int i = 0; i < co.theta_points; ++i) g.thetas.push_back(co.theta_max * i / (co.theta_points - 1));
    for (int j = 0; j < co.lag_points; ++j) g.lags.push_back(co.lag_max * j / (co.lag_points - 1));

    if (fit == nullptr) {
        g.values = correlation_surface(cfg.model(), g.thetas, g.lags);
    } else {
        const auto& f = fit->fit;
        const Eigen::Index total = f.samples.draws.rows();
        if (total == 0) throw DataError("fit has no posterior draws");
        const Eigen::Index use = std::min<Eigen::Index>(total, co.max_draws);
        g.values = Matrix::Zero(static_cast<Eigen::Index>(g.thetas.size()), static_cast<Eigen::Index>(g.lags.size()));
        for (Eigen::Index k = 0; k < use; ++k) {
            const CovarianceModel m(f.spec.family, f.params_at(k * total / use));
            g.values += correlation_surface(m, g.thetas, g.lags);
        }
        g.values /= static_cast<double>(use);
    }

    ensure_dir(out_dir);
    auto out = open_out(join(out_dir, "contour.csv"));
    out << "theta";
    for (double u : g.lags) out << ",u=" << fmt(u);
    out << '\n';
    for (std::size_t i = 0; i < g.thetas.size(); ++i) {
        out << fmt(g.thetas[i]);
        for (std::size_t j = 0; j < g.lags.size(); ++j) {
            out << ',' << fmt(g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out << '\n';
    }
    return g;
}

int run_command(const std::string& verb, const CommandOptions& opts, std::ostream& out, std::ostream& err,
                const std::atomic<bool>* stop) {
    auto resolve = [&](const std::string& config_path) {
        RunConfig cfg = config_path.empty() ? parse_run_config({}) : load_run_config(config_path);
        if (opts.seed) set_seed(cfg, *opts.seed);
        if (opts.threads) {
            cfg.mcmc.threads = *opts.threads;
            cfg.validate.gram_options.threads = *opts.threads;
        }
        return cfg;
    };
    auto out_dir = [&](const RunConfig& cfg) { return opts.out.empty() ? cfg.output_dir : opts.out; };
    auto need = [](const std::string& v, const char* flag, const std::string& verb_name) {
        if (v.empty()) throw ConfigError(verb_name + " requires " + flag);
    };

    try {
        if (verb == "simulate") {
            const RunConfig cfg = resolve(opts.config);
            const auto sets = cmd_simulate(cfg, out_dir(cfg));
            out << "simulated " << sets.size() << " dataset(s) of " << sets.front().size() << " rows into "
                << out_dir(cfg) << '\n';
        } else if (verb == "fit") {
            need(opts.data, "--data", verb);
            const RunConfig cfg = resolve(opts.config);
            const Dataset data = load_csv(opts.data);
            const ModelFit fit = cmd_fit(cfg, data, out_dir(cfg), stop);
            out << family_name(fit.spec.family) << ": kept " << fit.samples.n_keep << " draws, acceptance "
                << fit.samples.acceptance << (fit.samples.interrupted ? " (interrupted)" : "") << '\n';
            for (const auto& s : fit.summary) {
                out << "  " << s.name << "  mean " << s.mean << "  sd " << s.sd << "  [" << s.q025 << ", " << s.q975
                    << "]\n";
            }
        } else if (verb == "predict") {
            need(opts.fit, "--fit", verb);
            need(opts.data, "--data", verb);
            LoadedFit lf = load_fit(opts.fit);
            if (opts.seed) set_seed(lf.config, *opts.seed);
            if (opts.threads) lf.config.mcmc.threads = *opts.threads;
            const PredictSettings settings = opts.config.empty() ? lf.config.predict : resolve(opts.config).predict;
            const std::string dir = opts.out.empty() ? lf.config.output_dir : opts.out;
            const auto res = cmd_predict(lf, settings, load_csv(opts.data), dir);
            out << res.model << ": " << res.draws.rows() << " targets x " << res.draws.cols() << " draws into " << dir
                << '\n';
        } else if (verb == "compare") {
            if (opts.predictions.empty()) throw ConfigError("compare requires --pred (one per model)");
            const std::string dir = opts.out.empty() ? "." : opts.out;
            const auto reports = cmd_compare(opts.predictions, dir);
            out << render_table(reports);
        } else if (verb == "validate") {
            const RunConfig cfg = resolve(opts.config);
            const auto reports = cmd_validate(cfg, out_dir(cfg));
            bool refuted = false;
            for (const auto& r : reports) {
                out << r.method << ": " << verdict_name(r.verdict);
                if (std::isfinite(r.min_eig_ratio)) out << " (min eigenvalue ratio " << r.min_eig_ratio << ")";
                out << '\n';
                refuted = refuted || r.refuted();
            }
            if (refuted) {
                err << "refuted: " << family_name(cfg.family()) << " is not positive definite; see "
                    << join(out_dir(cfg), "witness.json") << '\n';
                return kExitRefuted;
            }
        } else if (verb == "contour") {
            if (!opts.fit.empty()) {
                const LoadedFit lf = load_fit(opts.fit);
                const RunConfig cfg = opts.config.empty() ? lf.config : resolve(opts.config);
                const std::string dir = opts.out.empty() ? lf.config.output_dir : opts.out;
                const auto g = cmd_contour(cfg, &lf, dir);
                out << "posterior mean correlation grid " << g.thetas.size() << " x " << g.lags.size() << '\n';
            } else {
                const RunConfig cfg = resolve(opts.config);
                const auto g = cmd_contour(cfg, nullptr, out_dir(cfg));
                out << "correlation grid " << g.thetas.size() << " x " << g.lags.size() << '\n';
            }
        } else {
            err << "unknown command '" << verb << "'\n";
            return kExitConfig;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        err << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace spheretime
