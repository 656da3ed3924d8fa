#pragma once

#include "spheretime/geometry.hpp"
#include "spheretime/inference.hpp"
#include "spheretime/nngp.hpp"
#include "spheretime/validity.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

namespace spheretime {

/// Unknown keys, malformed values or inconsistent settings.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ConfigEntry {
    std::string value;
    int line = 0;
};

using ConfigMap = std::map<std::string, ConfigEntry>;

/// "key = value" lines with dotted keys; '#' starts a comment.
ConfigMap parse_config_text(std::istream& in, const std::string& source = "<config>");
ConfigMap load_config_file(const std::string& path);

struct SimulateSettings {
    SphericalGrid grid;
    int replicates = 1;
    std::size_t max_points = 3000;
    std::size_t holdout_locations = 0;  // random locations tagged holdout at every time
};

struct PredictSettings {
    PredictionMode mode = PredictionMode::prospective;
    int max_draws = 500;
};

struct ValidateSettings {
    bool gram = true;
    bool schoenberg = true;
    bool fourier = false;
    GramOptions gram_options;
    SchoenbergOptions schoenberg_options;
    FourierOptions fourier_options;
};

struct ContourSettings {
    double theta_max = 1.0;  // radians
    int theta_points = 41;
    double lag_max = 10.0;
    int lag_points = 11;
    int max_draws = 200;
};

struct RunConfig {
    std::uint64_t seed = 1;
    bool intercept = true;
    SamplerSpec sampler;
    PriorSpec prior;
    NeighborConfig neighbors;
    McmcConfig mcmc;
    SimulateSettings simulate;
    PredictSettings predict;
    ValidateSettings validate;
    ContourSettings contour;
    std::string output_dir = "out";

    [[nodiscard]] Family family() const noexcept { return sampler.family; }
    [[nodiscard]] CovarianceModel model() const { return {sampler.family, sampler.start}; }
};

/// Every key is checked before anything runs; unknown keys are errors.
RunConfig parse_run_config(const ConfigMap& entries);
RunConfig load_run_config(const std::string& path);

/// Sets the seed used by every stochastic step.
void set_seed(RunConfig& cfg, std::uint64_t seed);

/// Canonical text for `cfg`; parsing it back yields an equal configuration.
std::string render_config(const RunConfig& cfg);

}  // namespace spheretime
