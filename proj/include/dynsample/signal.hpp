#pragma once

// Frequency- and amplitude-modulated pseudo-random binary signals (FAPRBS):
// concatenated APRBS segments with different hold durations, drawn around a
// mean control vector.

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynsample::signal {

using Vector = std::vector<double>;

class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

struct FaprbsSegment {
    double hold_duration = 0.0; // seconds
    std::size_t n_holds = 0;

    bool operator==(const FaprbsSegment&) const = default;
};

struct ControlBounds {
    Vector lower;
    Vector upper;
    Vector faprbs_amplitude;

    std::size_t channels() const { return lower.size(); }

    /// Throws ConfigError naming the first offending channel.
    void validate() const;

    /// Maps [0,1]^n to [lower, upper] and back.
    Vector to_engineering(const Vector& normalized) const;
    Vector to_normalized(const Vector& engineering) const;

    bool operator==(const ControlBounds&) const = default;
};

/// Piecewise-constant multichannel signal. Plateau k covers
/// [breakpoints[k], breakpoints[k+1]); all channels switch together.
struct ControlSignal {
    Vector breakpoints; // plateau start times, breakpoints[0] == 0
    std::vector<Vector> levels;
    Vector mean_u;
    double total_duration = 0.0;

    std::size_t plateaus() const { return levels.size(); }
    std::vector<double> plateau_lengths() const;

    bool operator==(const ControlSignal&) const = default;
};

ControlSignal generate_faprbs(const Vector& mean_u, const std::vector<FaprbsSegment>& segments,
                              const ControlBounds& bounds, std::uint64_t rng_seed);

/// Level of the plateau containing t. Breakpoints are right-open, t equal to
/// the total duration returns the last level. Times within 1e-9 (relative) of
/// a breakpoint are treated as lying on it.
const Vector& sample_at(const ControlSignal& signal, double t);

double total_duration(const std::vector<FaprbsSegment>& segments);

} // namespace dynsample::signal
