#pragma once

#include "spheretime/geometry.hpp"
#include "spheretime/inference.hpp"
#include "spheretime/numerics.hpp"

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace spheretime {

/// Unreadable or unwritable files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invalid data content.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Split { train, holdout };

/// Rows of (lat, lon, time, y, covariates, split). Coordinates in degrees.
struct Dataset {
    std::vector<double> lat;
    std::vector<double> lon;
    std::vector<double> time;
    std::vector<double> y;
    Matrix X;                                // n x p covariates, no intercept
    std::vector<std::string> covariate_names;
    std::vector<Split> split;
    std::string source;

    [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
    [[nodiscard]] std::vector<SpaceTimePoint> points() const;
    [[nodiscard]] Dataset subset(Split which) const;
    [[nodiscard]] Dataset select(const std::vector<std::size_t>& rows) const;
    /// Design matrix [1, X] (intercept first) or X alone.
    [[nodiscard]] Matrix design(bool intercept) const;
    [[nodiscard]] RegressionData regression(bool intercept) const;
    void push_back(double lat, double lon, double time, double y, Split s = Split::train);
};

/// Header "lat,lon,time,y[,x1,...][,split]". Rows without a split are train.
/// Errors carry the 1-based line number.
Dataset parse_csv(std::istream& in, const std::string& source = "<stream>");
Dataset load_csv(const std::string& path);

/// Writes 17 significant digits so a reload is bit-exact.
void write_csv(std::ostream& out, const Dataset& data, bool with_split = true);
void save_csv(const std::string& path, const Dataset& data, bool with_split = true);

struct ThinResult {
    Dataset train;
    Dataset holdout;
    std::size_t candidate_locations = 0;  // off-lattice locations available for hold-out
};

/// Rows whose (lat, lon) fall on the lattice anchored at the smallest
/// coordinates with the given steps are train; `holdout_locations` random
/// off-lattice locations (every time) form the hold-out set.
ThinResult thin_grid(const Dataset& data, double lat_step, double lon_step,
                     std::size_t holdout_locations, std::uint64_t seed);

}  // namespace spheretime
