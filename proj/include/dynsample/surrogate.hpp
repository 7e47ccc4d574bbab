#pragma once

// Lag-window nearest-neighbor one-step-ahead predictor. It only serves to
// compare the quality of campaign datasets: train on one dataset, measure the
// one-step error on withheld trajectories.

#include "dynsample/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynsample::surrogate {

using Vector = std::vector<double>;
using dataset::Normalizer;

class SurrogateError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct LagSpec {
    std::size_t output_lags = 2;              // N
    std::vector<std::size_t> control_lags;    // O per control channel
    std::size_t k_neighbors = 1;

    void validate(std::size_t n_controls) const;
    std::size_t window() const; // max over N and every O
    std::size_t feature_size() const;

    bool operator==(const LagSpec&) const = default;
};

/// Normalization for features and labels; shared between training and testing.
struct Scaling {
    Normalizer outputs;  // all model outputs
    Normalizer controls; // all control channels

    static Scaling fit(const dataset::Dataset& ds);
};

struct Examples {
    std::vector<Vector> features;
    Vector labels;
    std::vector<std::size_t> skipped_runs; // too short for the window
};

/// Features (y_{k-N+1..k}, then per channel u_{k-O+1..k}) and label y_{k+1}.
/// Windows never cross run boundaries; diverged runs are not used.
Examples build_examples(const dataset::Dataset& ds, const LagSpec& lags, std::size_t output_index,
                        const Scaling& scaling);

class Predictor {
  public:
    Predictor(Examples examples, LagSpec lags);

    /// Inverse-distance-weighted mean of the k nearest stored labels. Exact
    /// matches share the weight equally among themselves.
    double predict(std::span<const double> features) const;

    const LagSpec& lags() const { return lags_; }
    std::size_t size() const { return examples_.labels.size(); }

  private:
    Examples examples_;
    LagSpec lags_;
};

Predictor fit(Examples examples, const LagSpec& lags);

/// Closed-loop prediction: the first `window` outputs come from `initial_outputs`,
/// later ones are fed back. `controls` holds one normalized control vector per
/// step and must cover `steps + window - 1` entries.
Vector rollout(const Predictor& predictor, std::span<const double> initial_outputs,
               const std::vector<Vector>& controls, std::size_t steps);

double mse(std::span<const double> predictions, std::span<const double> truth);

struct OutputReport {
    std::size_t output_index = 0;
    double mse = 0.0;
    std::size_t train_examples = 0;
    std::size_t test_examples = 0;
};

struct EvalReport {
    LagSpec lags;
    std::vector<OutputReport> outputs;

    nlohmann::json to_json() const;
};

/// One-step-ahead test MSE per output, in the test dataset's normalization.
/// Throws SurrogateError when the datasets' dimensions differ.
EvalReport evaluate(const dataset::Dataset& train, const dataset::Dataset& test, const LagSpec& lags,
                    const std::vector<std::size_t>& output_indices);

} // namespace dynsample::surrogate
