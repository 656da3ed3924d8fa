#include "spheretime/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace spheretime {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) out.push_back(trim(f));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

[[noreturn]] void fail(const std::string& source, std::size_t line, const std::string& what) {
    throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& field, const std::string& column, const std::string& source,
                    std::size_t line) {
    if (field.empty()) fail(source, line, "empty value in column '" + column + "'");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size() || errno == ERANGE) {
        fail(source, line, "cannot parse '" + field + "' in column '" + column + "'");
    }
    return v;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::vector<SpaceTimePoint> Dataset::points() const {
    std::vector<SpaceTimePoint> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
        out.push_back({SpherePoint::from_latlon(lat[i], lon[i]), time[i]});
    }
    return out;
}

Dataset Dataset::select(const std::vector<std::size_t>& rows) const {
    Dataset d;
    d.covariate_names = covariate_names;
    d.source = source;
    d.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const std::size_t i = rows[k];
        d.lat.push_back(lat[i]);
        d.lon.push_back(lon[i]);
        d.time.push_back(time[i]);
        d.y.push_back(y[i]);
        d.split.push_back(split[i]);
        if (X.cols() > 0) d.X.row(static_cast<Eigen::Index>(k)) = X.row(static_cast<Eigen::Index>(i));
    }
    return d;
}

Dataset Dataset::subset(Split which) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < size(); ++i) {
        if (split[i] == which) rows.push_back(i);
    }
    return select(rows);
}

Matrix Dataset::design(bool intercept) const {
    const auto n = static_cast<Eigen::Index>(size());
    const Eigen::Index p = X.cols() + (intercept ? 1 : 0);
    Matrix d(n, p);
    if (intercept) d.col(0).setOnes();
    if (X.cols() > 0) d.rightCols(X.cols()) = X;
    return d;
}

RegressionData Dataset::regression(bool intercept) const {
    RegressionData r;
    r.points = points();
    r.y = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
    r.X = design(intercept);
    return r;
}

void Dataset::push_back(double la, double lo, double t, double v, Split s) {
    if (X.cols() > 0) throw DataError("push_back cannot add covariates");
    lat.push_back(la);
    lon.push_back(lo);
    time.push_back(t);
    y.push_back(v);
    split.push_back(s);
    X.resize(static_cast<Eigen::Index>(size()), 0);
}

Dataset parse_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_fields(line);
            break;
        }
    }
    if (header.size() < 4 || header[0] != "lat" || header[1] != "lon" || header[2] != "time" ||
        header[3] != "y") {
        fail(source, line_no == 0 ? 1 : line_no, "header must start with lat,lon,time,y");
    }
    const bool has_split = header.back() == "split";
    const std::size_t n_cov = header.size() - 4 - (has_split ? 1 : 0);

    Dataset d;
    d.source = source;
    d.covariate_names.assign(header.begin() + 4, header.begin() + 4 + static_cast<long>(n_cov));
    std::vector<std::vector<double>> cov;
    std::map<std::tuple<double, double, double>, std::size_t> seen;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto f = split_fields(line);
        if (f.size() != header.size()) {
            fail(source, line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                      std::to_string(f.size()));
        }
        const double la = parse_number(f[0], "lat", source, line_no);
        const double lo = parse_number(f[1], "lon", source, line_no);
        const double t = parse_number(f[2], "time", source, line_no);
        const double v = f[3] == "nan" || f[3] == "NA" || f[3].empty() ? std::nan("")
                                                                         : parse_number(f[3], "y", source, line_no);
        if (!(la >= -90.0 && la <= 90.0)) fail(source, line_no, "lat " + f[0] + " outside [-90, 90]");
        if (!(lo >= -180.0 && lo <= 180.0)) fail(source, line_no, "lon " + f[1] + " outside [-180, 180]");
        if (!std::isfinite(t)) fail(source, line_no, "time must be finite");
        std::vector<double> row(n_cov);
        for (std::size_t k = 0; k < n_cov; ++k) {
            row[k] = parse_number(f[4 + k], header[4 + k], source, line_no);
            if (!std::isfinite(row[k])) fail(source, line_no, "covariate " + header[4 + k] + " is not finite");
        }
        Split s = Split::train;
        if (has_split) {
            const std::string& tag = f.back();
            if (tag == "holdout") {
                s = Split::holdout;
            } else if (tag != "train" && !tag.empty()) {
                fail(source, line_no, "split must be train or holdout, got '" + tag + "'");
            }
        }
        const auto key = std::make_tuple(la, lo, t);
        if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
            fail(source, line_no, "duplicate (lat, lon, time) also on line " + std::to_string(it->second));
        }
        d.lat.push_back(la);
        d.lon.push_back(lo);
        d.time.push_back(t);
        d.y.push_back(v);
        d.split.push_back(s);
        cov.push_back(std::move(row));
    }
    d.X.resize(static_cast<Eigen::Index>(cov.size()), static_cast<Eigen::Index>(n_cov));
    for (std::size_t i = 0; i < cov.size(); ++i) {
        for (std::size_t k = 0; k < n_cov; ++k) {
            d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = cov[i][k];
        }
    }
    return d;
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    return parse_csv(in, path);
}

void write_csv(std::ostream& out, const Dataset& data, bool with_split) {
    out << "lat,lon,time,y";
    for (const auto& name : data.covariate_names) out << ',' << name;
    if (with_split) out << ",split";
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << format_double(data.lat[i]) << ',' << format_double(data.lon[i]) << ','
            << format_double(data.time[i]) << ',' << format_double(data.y[i]);
        for (Eigen::Index k = 0; k < data.X.cols(); ++k) {
            out << ',' << format_double(data.X(static_cast<Eigen::Index>(i), k));
        }
        if (with_split) out << ',' << (data.split[i] == Split::holdout ? "holdout" : "train");
        out << '\n';
    }
}

void save_csv(const std::string& path, const Dataset& data, bool with_split) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    write_csv(out, data, with_split);
    if (!out) throw IoError("write failed for " + path);
}

ThinResult thin_grid(const Dataset& data, double lat_step, double lon_step,
                     std::size_t holdout_locations, std::uint64_t seed) {
    if (!(lat_step > 0.0) || !(lon_step > 0.0)) throw DataError("thinning steps must be positive");
    if (data.size() == 0) throw DataError("nothing to thin");
    const double lat0 = *std::min_element(data.lat.begin(), data.lat.end());
    const double lon0 = *std::min_element(data.lon.begin(), data.lon.end());
    auto on_lattice = [](double v, double origin, double step) {
        const double k = (v - origin) / step;
        return std::abs(k - std::round(k)) < 1e-9 * std::max(1.0, std::abs(k));
    };

    std::vector<std::size_t> train_rows;
    std::map<std::pair<double, double>, std::vector<std::size_t>> off;  // location -> rows
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (on_lattice(data.lat[i], lat0, lat_step) && on_lattice(data.lon[i], lon0, lon_step)) {
            train_rows.push_back(i);
        } else {
            off[{data.lat[i], data.lon[i]}].push_back(i);
        }
    }
    if (train_rows.empty()) throw DataError("thinning left no training rows");

    std::vector<const std::vector<std::size_t>*> pool;
    for (const auto& [loc, rows] : off) pool.push_back(&rows);
    std::mt19937_64 rng = rng_stream(seed, 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t take = std::min(holdout_locations, pool.size());
    std::vector<std::size_t> hold_rows;
    for (std::size_t k = 0; k < take; ++k) hold_rows.insert(hold_rows.end(), pool[k]->begin(), pool[k]->end());
    std::sort(hold_rows.begin(), hold_rows.end());

    ThinResult r;
    r.candidate_locations = pool.size();
    r.train = data.select(train_rows);
    r.holdout = data.select(hold_rows);
    std::fill(r.train.split.begin(), r.train.split.end(), Split::train);
    std::fill(r.holdout.split.begin(), r.holdout.split.end(), Split::holdout);
    return r;
}

}  // namespace spheretime
