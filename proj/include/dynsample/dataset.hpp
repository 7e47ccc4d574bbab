#pragma once

// Campaign record: runs, seeds, used targets, initial conditions and
// per-epoch normalization, with JSONL/CSV persistence and output-space
// coverage measurement.

#include "dynsample/models.hpp"
#include "dynsample/signal.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynsample::dataset {

using Vector = std::vector<double>;

inline constexpr int kSchemaVersion = 1;

class DatasetError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Min-max map of a coordinate subset onto [0,1]^d. Zero-width dimensions map
/// with unit width so that constant data stays finite.
struct Normalizer {
    Vector lower;
    Vector upper;

    static Normalizer fit(const std::vector<Vector>& samples);
    Vector apply(const Vector& raw) const;
    Vector invert(const Vector& normalized) const;
    std::size_t dim() const { return lower.size(); }

    bool operator==(const Normalizer&) const = default;
};

/// The output-space representative of one run.
struct Seed {
    std::size_t run_id = 0;
    Vector y_bar; // normalized output-subset coordinates
    Vector u_bar; // normalized input coordinates
    std::size_t epoch = 0;

    bool operator==(const Seed&) const = default;
};

struct UsedTarget {
    std::size_t run_id = 0;  // run simulated for this target
    Vector t_star;           // normalized coordinates of its epoch
    Vector t_star_raw;       // engineering units
    double r_star_at_use = 0.0;

    bool operator==(const UsedTarget&) const = default;
};

/// Why a phase-2/3 run was started.
struct Provenance {
    std::vector<std::size_t> parents; // 2 run ids (phase 2) or d+1 (phase 3)
    Vector t_star;
    double score = 0.0;
    double l_star = 0.0;
    double r_star = 0.0;
    std::optional<Vector> voronoi_vertex;

    bool operator==(const Provenance&) const = default;
};

struct RunRecord {
    std::size_t run_id = 0;
    std::size_t epoch = 0;
    int phase = 1;
    Vector u_bar; // engineering units
    std::uint64_t signal_seed = 0;
    signal::ControlSignal signal;
    models::Trajectory trajectory;
    std::optional<Seed> seed;
    std::optional<Provenance> provenance;

    bool operator==(const RunRecord&) const = default;
};

struct InitialCondition {
    Vector x0;
    std::optional<std::size_t> source_run; // absent for the model default
    std::optional<std::size_t> source_sample;

    bool operator==(const InitialCondition&) const = default;
};

struct PhaseCounts {
    std::size_t phase1_pre_dedup = 0;
    std::size_t phase1 = 0;
    std::size_t phase2 = 0;
    std::size_t phase3 = 0;

    std::size_t total() const { return phase1 + phase2 + phase3; }
    bool operator==(const PhaseCounts&) const = default;
};

struct EpochRecord {
    std::size_t epoch = 0;
    InitialCondition initial_condition;
    Normalizer output_normalization;
    std::vector<UsedTarget> used_targets;
    PhaseCounts counts;
    std::vector<std::size_t> phase2_candidate_counts;  // per iteration, C(n, 2)
    std::vector<double> phase2_hull_volumes;           // before the phase and after each run
    std::vector<std::size_t> phase3_vertex_counts;     // per iteration
    std::vector<std::size_t> phase3_sample_counts;     // output samples scanned per iteration
    std::vector<double> phase3_mean_radius;            // per iteration
    std::string phase2_stop;
    std::string phase3_stop;

    bool operator==(const EpochRecord&) const = default;
};

struct Meta {
    int schema_version = kSchemaVersion;
    std::string model_name;
    std::uint64_t rng_seed = 0;
    std::size_t n_states = 0;
    std::size_t n_controls = 0;
    std::size_t n_outputs = 0;
    std::vector<std::size_t> output_subset;
    std::vector<std::size_t> state_subset;
    nlohmann::json config = nlohmann::json::object();
    std::vector<EpochRecord> epochs;
    std::string campaign_stop;
    std::optional<std::string> created_utc;

    bool operator==(const Meta&) const = default;
};

struct Dataset {
    Meta meta;
    std::vector<RunRecord> runs;

    /// Run ids dense from 0, epochs known, phases in {1,2,3}.
    void check_invariants() const;

    bool operator==(const Dataset&) const = default;
};

nlohmann::json to_json(const Meta& meta);
nlohmann::json to_json(const RunRecord& run);
Meta meta_from_json(const nlohmann::json& j);
RunRecord run_from_json(const nlohmann::json& j);

/// One JSON object per line: the meta line, then one line per run.
void export_jsonl(const Dataset& dataset, const std::filesystem::path& path);
std::string to_jsonl(const Dataset& dataset);
Dataset load_jsonl(const std::filesystem::path& path);

/// One row per time sample: run_id, epoch, phase, t, u_*, x_*, y_*.
void export_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Output samples (restricted to `subset`) of every recorded time step.
std::vector<Vector> output_samples(const Dataset& dataset, const std::vector<std::size_t>& subset);

/// Fraction of occupied cells of a bins^d grid over the normalized output
/// subset. Without explicit bounds the data's own min/max are used.
double coverage(const Dataset& dataset, std::size_t bins,
                const std::optional<Normalizer>& bounds = std::nullopt);
double coverage(const std::vector<Vector>& samples, std::size_t bins, const Normalizer& bounds);

} // namespace dynsample::dataset
