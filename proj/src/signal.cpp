#include "dynsample/signal.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace dynsample::signal {

namespace {

double time_tolerance(double total) { return 1e-9 * std::max(1.0, std::abs(total)); }

} // namespace

void ControlBounds::validate() const {
    const std::size_t n = lower.size();
    if (n == 0) {
        throw ConfigError("control bounds: no channels");
    }
    if (upper.size() != n || faprbs_amplitude.size() != n) {
        throw ConfigError("control bounds: lower, upper and amplitude lengths differ");
    }
    for (std::size_t c = 0; c < n; ++c) {
        if (!std::isfinite(lower[c]) || !std::isfinite(upper[c]) ||
            !std::isfinite(faprbs_amplitude[c])) {
            throw ConfigError(fmt::format("control channel {}: non-finite bound or amplitude", c));
        }
        if (!(lower[c] < upper[c])) {
            throw ConfigError(fmt::format("control channel {}: lower bound {} not below upper bound {}",
                                          c, lower[c], upper[c]));
        }
        if (!(faprbs_amplitude[c] > 0.0)) {
            throw ConfigError(fmt::format("control channel {}: amplitude must be positive", c));
        }
        if (faprbs_amplitude[c] > 0.5 * (upper[c] - lower[c])) {
            throw ConfigError(fmt::format(
                "control channel {}: amplitude {} exceeds half the range (upper - lower)/2 = {}", c,
                faprbs_amplitude[c], 0.5 * (upper[c] - lower[c])));
        }
    }
}

Vector ControlBounds::to_engineering(const Vector& normalized) const {
    Vector out(normalized.size());
    for (std::size_t c = 0; c < normalized.size(); ++c) {
        out[c] = lower[c] + normalized[c] * (upper[c] - lower[c]);
    }
    return out;
}

Vector ControlBounds::to_normalized(const Vector& engineering) const {
    Vector out(engineering.size());
    for (std::size_t c = 0; c < engineering.size(); ++c) {
        out[c] = (engineering[c] - lower[c]) / (upper[c] - lower[c]);
    }
    return out;
}

std::vector<double> ControlSignal::plateau_lengths() const {
    std::vector<double> out;
    out.reserve(breakpoints.size());
    for (std::size_t k = 0; k < breakpoints.size(); ++k) {
        const double end = k + 1 < breakpoints.size() ? breakpoints[k + 1] : total_duration;
        out.push_back(end - breakpoints[k]);
    }
    return out;
}

double total_duration(const std::vector<FaprbsSegment>& segments) {
    double total = 0.0;
    for (const auto& s : segments) {
        total += static_cast<double>(s.n_holds) * s.hold_duration;
    }
    return total;
}

ControlSignal generate_faprbs(const Vector& mean_u, const std::vector<FaprbsSegment>& segments,
                              const ControlBounds& bounds, std::uint64_t rng_seed) {
    bounds.validate();
    const std::size_t channels = bounds.channels();
    if (mean_u.size() != channels) {
        throw ConfigError(fmt::format("faprbs: mean has {} channels, bounds have {}", mean_u.size(),
                                      channels));
    }
    for (std::size_t c = 0; c < channels; ++c) {
        if (!(mean_u[c] >= bounds.lower[c] && mean_u[c] <= bounds.upper[c])) {
            throw ConfigError(fmt::format("faprbs: mean {} of channel {} outside [{}, {}]",
                                          mean_u[c], c, bounds.lower[c], bounds.upper[c]));
        }
    }
    if (segments.empty()) {
        throw ConfigError("faprbs: no segments");
    }
    for (const auto& s : segments) {
        if (!(s.hold_duration > 0.0) || !std::isfinite(s.hold_duration)) {
            throw ConfigError("faprbs: hold duration must be positive");
        }
        if (s.n_holds == 0) {
            throw ConfigError("faprbs: segment with zero holds");
        }
    }

    std::mt19937_64 rng(rng_seed);
    std::vector<std::uniform_real_distribution<double>> draw;
    draw.reserve(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        draw.emplace_back(mean_u[c] - bounds.faprbs_amplitude[c],
                          mean_u[c] + bounds.faprbs_amplitude[c]);
    }

    ControlSignal sig;
    sig.mean_u = mean_u;
    // Plateau starts accumulate segment by segment from exact products so that
    // grid-aligned holds produce grid-aligned breakpoints.
    double segment_start = 0.0;
    for (const auto& s : segments) {
        for (std::size_t k = 0; k < s.n_holds; ++k) {
            sig.breakpoints.push_back(segment_start + static_cast<double>(k) * s.hold_duration);
            Vector level(channels);
            for (std::size_t c = 0; c < channels; ++c) {
                level[c] = std::clamp(draw[c](rng), bounds.lower[c], bounds.upper[c]);
            }
            sig.levels.push_back(std::move(level));
        }
        segment_start += static_cast<double>(s.n_holds) * s.hold_duration;
    }
    sig.total_duration = segment_start;
    return sig;
}

const Vector& sample_at(const ControlSignal& signal, double t) {
    const double tol = time_tolerance(signal.total_duration);
    if (signal.levels.empty()) {
        throw std::out_of_range("sample_at: empty signal");
    }
    if (!(t >= -tol && t <= signal.total_duration + tol)) {
        throw std::out_of_range(fmt::format("sample_at: t = {} outside [0, {}]", t,
                                            signal.total_duration));
    }
    // First breakpoint strictly greater than t + tol; the plateau is the one before it.
    const auto it = std::upper_bound(signal.breakpoints.begin(), signal.breakpoints.end(), t + tol);
    const auto idx = static_cast<std::size_t>(std::distance(signal.breakpoints.begin(), it));
    return signal.levels[idx == 0 ? 0 : idx - 1];
}

} // namespace dynsample::signal
