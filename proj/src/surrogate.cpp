#include "dynsample/surrogate.hpp"

#include "dynsample/geometry.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dynsample::surrogate {

void LagSpec::validate(std::size_t n_controls) const {
    if (output_lags < 1) {
        throw SurrogateError("lag spec: output lag count N must be at least 1");
    }
    if (control_lags.size() != n_controls) {
        throw SurrogateError(fmt::format("lag spec: {} control lag counts for {} control channels",
                                         control_lags.size(), n_controls));
    }
    for (std::size_t c = 0; c < control_lags.size(); ++c) {
        if (control_lags[c] < 1) {
            throw SurrogateError(fmt::format("lag spec: control lag of channel {} must be >= 1", c));
        }
    }
    if (k_neighbors < 1) {
        throw SurrogateError("lag spec: k_neighbors must be at least 1");
    }
}

std::size_t LagSpec::window() const {
    std::size_t w = output_lags;
    for (std::size_t o : control_lags) {
        w = std::max(w, o);
    }
    return w;
}

std::size_t LagSpec::feature_size() const {
    return output_lags + std::accumulate(control_lags.begin(), control_lags.end(), std::size_t{0});
}

Scaling Scaling::fit(const dataset::Dataset& ds) {
    std::vector<Vector> outputs;
    std::vector<Vector> controls;
    for (const auto& r : ds.runs) {
        if (!r.trajectory.completed()) {
            continue;
        }
        outputs.insert(outputs.end(), r.trajectory.outputs.begin(), r.trajectory.outputs.end());
        controls.insert(controls.end(), r.trajectory.controls.begin(), r.trajectory.controls.end());
    }
    if (outputs.empty()) {
        throw SurrogateError("scaling: dataset has no completed runs");
    }
    return {Normalizer::fit(outputs), Normalizer::fit(controls)};
}

namespace {

// Features of the window ending at sample k (inclusive).
void window_features(std::span<const double> outputs, const std::vector<Vector>& controls,
                     std::size_t k, const LagSpec& lags, Vector& out) {
    out.clear();
    for (std::size_t i = lags.output_lags; i-- > 0;) {
        out.push_back(outputs[k - i]);
    }
    for (std::size_t c = 0; c < lags.control_lags.size(); ++c) {
        for (std::size_t i = lags.control_lags[c]; i-- > 0;) {
            out.push_back(controls[k - i][c]);
        }
    }
}

} // namespace

Examples build_examples(const dataset::Dataset& ds, const LagSpec& lags, std::size_t output_index,
                        const Scaling& scaling) {
    lags.validate(ds.meta.n_controls);
    if (output_index >= ds.meta.n_outputs) {
        throw SurrogateError(fmt::format("output index {} out of range ({} outputs)", output_index,
                                         ds.meta.n_outputs));
    }
    const std::size_t window = lags.window();
    Examples ex;
    Vector feat;
    for (const auto& r : ds.runs) {
        const auto& tr = r.trajectory;
        if (!tr.completed()) {
            continue;
        }
        if (tr.samples() <= window) {
            ex.skipped_runs.push_back(r.run_id);
            continue;
        }
        Vector y(tr.samples());
        std::vector<Vector> u(tr.samples());
        for (std::size_t k = 0; k < tr.samples(); ++k) {
            y[k] = scaling.outputs.apply(tr.outputs[k])[output_index];
            u[k] = scaling.controls.apply(tr.controls[k]);
        }
        for (std::size_t k = window - 1; k + 1 < tr.samples(); ++k) {
            window_features(y, u, k, lags, feat);
            ex.features.push_back(feat);
            ex.labels.push_back(y[k + 1]);
        }
    }
    return ex;
}

Predictor::Predictor(Examples examples, LagSpec lags)
    : examples_(std::move(examples)), lags_(std::move(lags)) {
    if (examples_.labels.empty()) {
        throw SurrogateError("predictor: empty training set");
    }
    if (lags_.k_neighbors < 1) {
        throw SurrogateError("predictor: k_neighbors must be at least 1");
    }
}

double Predictor::predict(std::span<const double> features) const {
    const std::size_t n = examples_.labels.size();
    const std::size_t k = std::min(lags_.k_neighbors, n);
    // (squared distance, index); the k smallest, ties by lowest index.
    std::vector<std::pair<double, std::size_t>> best;
    best.reserve(k + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double sq = geometry::squared_distance(features, examples_.features[i]);
        if (best.size() == k && sq >= best.back().first) {
            continue;
        }
        const auto pos = std::upper_bound(best.begin(), best.end(), std::make_pair(sq, i));
        best.insert(pos, {sq, i});
        if (best.size() > k) {
            best.pop_back();
        }
    }
    double exact_sum = 0.0;
    std::size_t exact = 0;
    for (const auto& [sq, i] : best) {
        if (sq == 0.0) {
            exact_sum += examples_.labels[i];
            ++exact;
        }
    }
    if (exact > 0) {
        return exact_sum / static_cast<double>(exact);
    }
    double num = 0.0;
    double den = 0.0;
    for (const auto& [sq, i] : best) {
        const double w = 1.0 / std::sqrt(sq);
        num += w * examples_.labels[i];
        den += w;
    }
    return num / den;
}

Predictor fit(Examples examples, const LagSpec& lags) { return Predictor(std::move(examples), lags); }

Vector rollout(const Predictor& predictor, std::span<const double> initial_outputs,
               const std::vector<Vector>& controls, std::size_t steps) {
    const auto& lags = predictor.lags();
    const std::size_t window = lags.window();
    if (initial_outputs.size() < window) {
        throw SurrogateError("rollout: initial window shorter than the lag window");
    }
    if (controls.size() < steps + window - 1) {
        throw SurrogateError("rollout: control sequence too short");
    }
    Vector y(initial_outputs.begin(), initial_outputs.begin() + static_cast<std::ptrdiff_t>(window));
    Vector feat;
    Vector predicted;
    predicted.reserve(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t k = window - 1 + s;
        window_features(y, controls, k, lags, feat);
        const double next = predictor.predict(feat);
        y.push_back(next);
        predicted.push_back(next);
    }
    return predicted;
}

double mse(std::span<const double> predictions, std::span<const double> truth) {
    if (predictions.size() != truth.size() || predictions.empty()) {
        throw SurrogateError("mse: size mismatch or empty input");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double e = predictions[i] - truth[i];
        s += e * e;
    }
    return s / static_cast<double>(predictions.size());
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& o : outputs) {
        outs.push_back({{"output_index", o.output_index},
                        {"mse", o.mse},
                        {"train_examples", o.train_examples},
                        {"test_examples", o.test_examples}});
    }
    return {{"lag_spec",
             {{"output_lags", lags.output_lags},
              {"control_lags", lags.control_lags},
              {"k_neighbors", lags.k_neighbors}}},
            {"outputs", outs}};
}

EvalReport evaluate(const dataset::Dataset& train, const dataset::Dataset& test, const LagSpec& lags,
                    const std::vector<std::size_t>& output_indices) {
    if (train.meta.n_outputs != test.meta.n_outputs ||
        train.meta.n_controls != test.meta.n_controls) {
        throw SurrogateError(fmt::format(
            "incompatible datasets: train has {} outputs / {} controls, test has {} / {}",
            train.meta.n_outputs, train.meta.n_controls, test.meta.n_outputs, test.meta.n_controls));
    }
    lags.validate(train.meta.n_controls);
    const Scaling scaling = Scaling::fit(test);
    EvalReport report;
    report.lags = lags;
    for (std::size_t out : output_indices) {
        auto train_ex = build_examples(train, lags, out, scaling);
        const auto test_ex = build_examples(test, lags, out, scaling);
        if (test_ex.labels.empty()) {
            throw SurrogateError("test dataset yields no examples");
        }
        const std::size_t n_train = train_ex.labels.size();
        const Predictor predictor = fit(std::move(train_ex), lags);
        Vector pred(test_ex.labels.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            pred[i] = predictor.predict(test_ex.features[i]);
        }
        report.outputs.push_back({out, mse(pred, test_ex.labels), n_train, test_ex.labels.size()});
    }
    return report;
}

} // namespace dynsample::surrogate
