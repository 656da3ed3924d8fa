#pragma once

#include "spheretime/config.hpp"
#include "spheretime/dataset.hpp"
#include "spheretime/inference.hpp"
#include "spheretime/scoring.hpp"
#include "spheretime/validity.hpp"

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spheretime {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 1,     // bad arguments or configuration
    kExitIo = 2,         // missing or malformed files
    kExitRefuted = 3,    // validate found a non positive definite witness
    kExitNumerical = 4,  // factorization, quadrature or sampler failure
};

// Posterior draws as headered, tab-separated columns: iteration then one
// column per name. A second file holds the stored w draws.
void save_samples(const std::string& path, const PosteriorSamples& s);
void save_w_draws(const std::string& path, const PosteriorSamples& s);
PosteriorSamples load_samples(const std::string& path);
void load_w_draws(const std::string& path, PosteriorSamples& s);

/// Writes config.cfg, train.csv, samples.tsv, w.tsv, summary.tsv,
/// summary.jsonl and fit.json into `dir`. `train` holds the rows that were fitted.
void save_fit(const std::string& dir, const ModelFit& fit, const RunConfig& cfg, const Dataset& train);

struct LoadedFit {
    RunConfig config;
    ModelFit fit;
};

LoadedFit load_fit(const std::string& dir);

/// Simulated datasets (one per replicate); written as data.csv or data_NNN.csv.
std::vector<Dataset> cmd_simulate(const RunConfig& cfg, const std::string& out_dir);

/// Fits the train rows of `data`.
ModelFit cmd_fit(const RunConfig& cfg, const Dataset& data, const std::string& out_dir,
                 const std::atomic<bool>* stop = nullptr);

struct PredictionResult {
    std::string model;
    Dataset targets;
    Matrix draws;  // one row per target
};

/// Predicts at the hold-out rows of `targets`, or at every row when none is
/// tagged; writes predictions.csv, draws.tsv and predict.json.
PredictionResult cmd_predict(const LoadedFit& fit, const PredictSettings& settings,
                             const Dataset& targets, const std::string& out_dir);

PredictionResult load_prediction(const std::string& dir);

/// Scores each prediction directory; writes compare.txt and compare.jsonl.
std::vector<ScoreReport> cmd_compare(const std::vector<std::string>& prediction_dirs,
                                     const std::string& out_dir);

/// Runs the configured checks; writes validate.jsonl and, when refuted, witness.json.
std::vector<PDReport> cmd_validate(const RunConfig& cfg, const std::string& out_dir);

struct ContourGrid {
    std::vector<double> thetas;
    std::vector<double> lags;
    Matrix values;  // correlations, rows follow thetas
};

/// Correlation surface at the configured parameters, or averaged over posterior
/// draws when `fit` is given; writes contour.csv.
ContourGrid cmd_contour(const RunConfig& cfg, const LoadedFit* fit, const std::string& out_dir);

struct CommandOptions {
    std::string config;
    std::string data;
    std::string out;
    std::string fit;
    std::vector<std::string> predictions;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

/// Dispatches a verb, reports errors to `err` and returns an ExitCode.
int run_command(const std::string& verb, const CommandOptions& opts, std::ostream& out,
                std::ostream& err, const std::atomic<bool>* stop = nullptr);

}  // namespace spheretime
