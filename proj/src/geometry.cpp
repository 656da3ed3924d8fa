#include "spheretime/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace spheretime {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void require_ascending(const std::vector<double>& axis, const char* name) {
    if (axis.empty()) {
        throw GeometryError(std::string("grid axis '") + name + "' is empty");
    }
    for (std::size_t i = 1; i < axis.size(); ++i) {
        if (!(axis[i] > axis[i - 1])) {
            throw GeometryError(std::string("grid axis '") + name +
                                "' must be strictly ascending");
        }
    }
}

}  // namespace

SpherePoint SpherePoint::from_coords(std::span<const double> coords) {
    if (coords.size() < 2) {
        throw GeometryError("sphere points need at least two coordinates");
    }
    double norm2 = 0.0;
    for (double c : coords) {
        if (!std::isfinite(c)) throw GeometryError("non-finite sphere coordinate");
        norm2 += c * c;
    }
    if (norm2 == 0.0) throw GeometryError("cannot normalize the zero vector");
    const double inv = 1.0 / std::sqrt(norm2);
    SpherePoint p;
    p.coords_.reserve(coords.size());
    for (double c : coords) p.coords_.push_back(c * inv);
    return p;
}

SpherePoint SpherePoint::from_latlon(double lat_deg, double lon_deg) {
    if (!std::isfinite(lat_deg) || lat_deg < -90.0 || lat_deg > 90.0) {
        throw GeometryError("latitude " + std::to_string(lat_deg) + " outside [-90, 90]");
    }
    if (!std::isfinite(lon_deg) || lon_deg < -180.0 || lon_deg > 180.0) {
        throw GeometryError("longitude " + std::to_string(lon_deg) + " outside [-180, 180]");
    }
    const double lat = lat_deg * kDeg;
    const double lon = lon_deg * kDeg;
    SpherePoint p;
    p.coords_ = {std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon), std::sin(lat)};
    return p;
}

double SpherePoint::latitude() const {
    if (sphere_dim() != 2) throw GeometryError("latitude is defined on S^2 only");
    return std::asin(std::clamp(coords_[2], -1.0, 1.0)) / kDeg;
}

double SpherePoint::longitude() const {
    if (sphere_dim() != 2) throw GeometryError("longitude is defined on S^2 only");
    return std::atan2(coords_[1], coords_[0]) / kDeg;
}

SpaceTimePoint::SpaceTimePoint(SpherePoint loc, double t) : location(std::move(loc)), time(t) {
    if (!std::isfinite(t)) throw GeometryError("time coordinate must be finite");
}

double great_circle(const SpherePoint& a, const SpherePoint& b) {
    const auto& x = a.coords();
    const auto& y = b.coords();
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
    return std::acos(std::clamp(dot, -1.0, 1.0));
}

double chordal(const SpherePoint& a, const SpherePoint& b) {
    const auto& x = a.coords();
    const auto& y = b.coords();
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double diff = x[i] - y[i];
        s += diff * diff;
    }
    return std::min(std::sqrt(s), 2.0);
}

std::vector<SpaceTimePoint> make_grid(const SphericalGrid& grid) {
    require_ascending(grid.latitudes, "latitudes");
    require_ascending(grid.longitudes, "longitudes");
    require_ascending(grid.times, "times");

    std::vector<SpaceTimePoint> out;
    out.reserve(grid.size());
    for (double t : grid.times) {
        for (double lat : grid.latitudes) {
            for (double lon : grid.longitudes) {
                out.emplace_back(SpherePoint::from_latlon(lat, lon), t);
            }
        }
    }
    return out;
}

std::vector<double> arange_inclusive(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw GeometryError("invalid range: need step > 0 and lo <= hi");
    std::vector<double> out;
    for (long i = 0;; ++i) {
        const double v = lo + static_cast<double>(i) * step;
        if (v > hi + 1e-9 * step) break;
        out.push_back(v);
    }
    return out;
}

SpherePoint sample_uniform_sphere(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    std::vector<double> v(static_cast<std::size_t>(dim) + 1);
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (double& c : v) {
            c = normal(rng);
            n2 += c * c;
        }
    } while (n2 < 1e-300);
    return SpherePoint::from_coords(v);
}

bool time_major_less(const SpaceTimePoint& a, const SpaceTimePoint& b) {
    if (a.time != b.time) return a.time < b.time;
    const auto& x = a.location.coords();
    const auto& y = b.location.coords();
    if (x.size() == 3 && y.size() == 3) {
        // latitude is monotone in z; longitude via atan2
        if (x[2] != y[2]) return x[2] < y[2];
        return std::atan2(x[1], x[0]) < std::atan2(y[1], y[0]);
    }
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

}  // namespace spheretime
