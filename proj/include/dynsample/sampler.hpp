#pragma once

// The adaptive campaign. Each epoch shares one initial condition and runs
// four phases:
//   1. space-filling mean inputs (corners, face centers, Hammersley points),
//   2. hull expansion from pairs of runs,
//   3. population of empty regions via Voronoi vertices of the seeds,
//   4. choice of the next initial condition from recorded states.
// Output-space geometry works on seeds, the weighted means of each run's
// output samples, in min-max normalized coordinates frozen per epoch.

#include "dynsample/dataset.hpp"
#include "dynsample/geometry.hpp"
#include "dynsample/models.hpp"
#include "dynsample/signal.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynsample::sampler {

using Vector = std::vector<double>;
using dataset::Normalizer;
using dataset::Seed;
using dataset::UsedTarget;
using geometry::Point;
using geometry::PointSet;

/// Phase 1 produced no completed run.
class EpochFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct SeedWeighting {
    enum class Kind { uniform, discount };
    Kind kind = Kind::uniform;
    double gamma = 0.5; // discount only; w_k = 1 - gamma^(k+1)

    bool operator==(const SeedWeighting&) const = default;
};

struct CampaignConfig {
    std::size_t n_hss = 15;
    std::size_t max_sims_phase2 = 15;
    double score_threshold_phase2 = 0.0;
    std::size_t max_sims_phase3 = 30;
    std::size_t kappa = 3;
    double radius_plateau_tol = 0.02;
    std::size_t radius_plateau_iters = 3;
    std::size_t max_epochs = 1;
    std::optional<double> ic_min_distance;
    std::vector<std::size_t> output_subset;
    std::vector<std::size_t> state_subset;
    SeedWeighting seed_weighting;
    std::uint64_t rng_seed = 1;
    double dt = 0.05;
    double horizon = 0.0; // 0 means the full FAPRBS duration
    std::vector<signal::FaprbsSegment> segments;
    std::optional<signal::ControlBounds> bounds; // overrides the model's bounds
    double divergence_limit = 1e8;
    double min_completed_fraction = 0.5; // diverged runs seed only past this fraction

    /// Throws signal::ConfigError on the first violated precondition.
    void validate(const models::Model& model) const;
    double effective_horizon() const;
    const signal::ControlBounds& effective_bounds(const models::Model& model) const;

    bool operator==(const CampaignConfig&) const = default;
};

nlohmann::json to_json(const CampaignConfig& config);
CampaignConfig campaign_config_from_json(const nlohmann::json& j);

struct Candidate {
    Vector u_star; // normalized input coordinates
    Point t_star;  // normalized output coordinates
    double score = 0.0;
    double l_star = 0.0;
    double r_star = 0.0;
    std::vector<std::size_t> provenance; // sorted run ids
    std::optional<Point> voronoi_vertex;
};

struct ExpansionMetrics {
    double l_star = 0.0;
    double r_star = 0.0;
};

// ---- seeds ---------------------------------------------------------------

/// Weighted mean of the output subset, normalized. Throws on an empty trajectory.
Seed compute_seed(const models::Trajectory& traj, const SeedWeighting& weighting,
                  const Normalizer& normalizer, std::span<const std::size_t> output_subset);

/// Completed runs qualify; diverged ones only past `min_fraction` of the horizon.
bool seed_qualifies(const models::Trajectory& traj, double horizon, double min_fraction);

// ---- phase 1 -------------------------------------------------------------

struct Phase1Design {
    std::size_t pre_dedup_count = 0; // 2^d + 2d + n_hss
    PointSet points;                 // deduplicated, in [0,1]^d
};

Phase1Design phase1_design(std::size_t d_u, std::size_t n_hss);

// ---- phase 2 -------------------------------------------------------------

ExpansionMetrics expansion_metrics(const Point& t_star, const PointSet& seeds);
double score_expansion(double l_star, double r_star);

/// All C(n,2) pair candidates, scored, in lexicographic pair order.
std::vector<Candidate> expansion_candidates(const std::vector<Seed>& seeds);

/// False when t lies strictly inside the exclusion ball of any used target.
bool is_valid_target(const Point& t_star, const std::vector<UsedTarget>& used);

/// Highest-scoring valid candidate; ties go to the lexicographically lowest
/// provenance.
std::optional<std::size_t> select_best(const std::vector<Candidate>& candidates,
                                       const std::vector<UsedTarget>& used);

// ---- phase 3 -------------------------------------------------------------

/// One candidate per Voronoi vertex of the seeds, built from the vertex's d+1
/// defining runs. Throws geometry::GeometryError when too few seeds or a
/// degenerate configuration.
std::vector<Candidate> population_candidates(const std::vector<Seed>& seeds);

/// Cumulative counts n_j of samples within j * r_star of t_star, j = 1..kappa.
std::vector<std::size_t> count_in_balls(const Point& t_star, double r_star, std::size_t kappa,
                                        const std::vector<Vector>& samples);

/// r / (1 + sum_j w_j n_j), w_j = (kappa - j + 1) / kappa.
double score_population(double r_star, std::span<const std::size_t> counts, std::size_t kappa);

/// Tracks the relative change of the mean candidate radius between iterations.
class RadiusPlateau {
  public:
    RadiusPlateau(double tolerance, std::size_t iterations);
    /// Feeds the next mean radius; true once the change stayed below the
    /// tolerance for the configured number of consecutive iterations.
    bool update(double mean_radius);

  private:
    double tolerance_;
    std::size_t iterations_;
    std::size_t streak_ = 0;
    std::optional<double> previous_;
};

// ---- phase 4 -------------------------------------------------------------

struct IcChoice {
    Vector x0;
    std::size_t run_id = 0;
    std::size_t sample = 0;
    double distance_to_center = 0.0;
};

/// Farthest recorded state (normalized state subset) from the center of all
/// recorded states that keeps `min_distance` to every used initial condition.
std::optional<IcChoice> phase4_next_ic(const std::vector<const models::Trajectory*>& trajectories,
                                       const std::vector<Vector>& used_ics,
                                       std::span<const std::size_t> state_subset,
                                       double min_distance);

/// Default minimum IC distance: mean distance of two random points in [0,1]^d.
double default_ic_min_distance(std::size_t d);

// ---- campaign --------------------------------------------------------------

struct ProgressEvent {
    std::size_t epoch = 0;
    int phase = 0;
    std::size_t run_id = 0;
    std::optional<double> score;
    models::RunStatus status = models::RunStatus::completed;
};

struct CampaignOptions {
    bool phase2 = true;
    bool phase3 = true;
    std::size_t jobs = 1; // parallel phase-1 simulations
    std::function<void(const ProgressEvent&)> progress;
    std::function<void(const std::string&)> log; // skip reasons and phase stops
};

struct Timing {
    double simulation_seconds = 0.0;
    double signal_seconds = 0.0;
    double target_seconds = 0.0;   // candidate construction and scoring
    double matrix_seconds = 0.0;   // phase-3 ball counting
    double total_seconds = 0.0;
};

struct CampaignResult {
    dataset::Dataset dataset;
    Timing timing;
};

CampaignResult run_campaign_detailed(const CampaignConfig& config, const models::Model& model,
                                     const CampaignOptions& options = {});

dataset::Dataset run_campaign(const CampaignConfig& config, const models::Model& model,
                              const CampaignOptions& options = {});

/// Deterministic per-run FAPRBS seed derived from the campaign seed.
std::uint64_t signal_seed(std::uint64_t campaign_seed, std::size_t run_id);

} // namespace dynsample::sampler
