#pragma once

#include <cmath>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace spheretime {

class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A point on the unit sphere S^d, stored as a unit vector in R^{d+1}.
class SpherePoint {
public:
    SpherePoint() = default;

    /// Normalizes `coords`; throws GeometryError on a zero or non-finite vector.
    static SpherePoint from_coords(std::span<const double> coords);

    /// Latitude in [-90, 90], longitude in [-180, 180] (degrees), d = 2.
    static SpherePoint from_latlon(double lat_deg, double lon_deg);

    [[nodiscard]] const std::vector<double>& coords() const noexcept { return coords_; }
    [[nodiscard]] int sphere_dim() const noexcept { return static_cast<int>(coords_.size()) - 1; }

    // Both require sphere_dim() == 2.
    [[nodiscard]] double latitude() const;
    [[nodiscard]] double longitude() const;

    friend bool operator==(const SpherePoint&, const SpherePoint&) = default;

private:
    std::vector<double> coords_;
};

struct SpaceTimePoint {
    SpherePoint location;
    double time = 0.0;

    SpaceTimePoint() = default;
    SpaceTimePoint(SpherePoint loc, double t);
};

/// Axes of a regular lat/lon/time grid, each strictly ascending.
struct SphericalGrid {
    std::vector<double> latitudes;
    std::vector<double> longitudes;
    std::vector<double> times;

    [[nodiscard]] std::size_t size() const noexcept {
        return latitudes.size() * longitudes.size() * times.size();
    }
};

/// Angle in [0, pi] between two unit vectors.
double great_circle(const SpherePoint& a, const SpherePoint& b);

/// Euclidean distance through the ball, 2 sin(theta / 2).
double chordal(const SpherePoint& a, const SpherePoint& b);

inline double chordal_from_angle(double theta) { return 2.0 * std::sin(0.5 * theta); }

/// Enumerates the grid ordered by (time, latitude, longitude) ascending.
std::vector<SpaceTimePoint> make_grid(const SphericalGrid& grid);

/// Evenly spaced values lo, lo + step, ... up to hi (inclusive within 1e-9 * step).
std::vector<double> arange_inclusive(double lo, double hi, double step);

/// Uniform draw on S^dim.
SpherePoint sample_uniform_sphere(int dim, std::mt19937_64& rng);

/// Lexicographic (time, latitude, longitude) ordering used for reference sets.
/// Falls back to coordinate order when the sphere is not S^2.
bool time_major_less(const SpaceTimePoint& a, const SpaceTimePoint& b);

}  // namespace spheretime
