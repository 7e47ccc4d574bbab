#include "dynsample/sampler.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

namespace dynsample::sampler {

using signal::ConfigError;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

void check_subset(const std::vector<std::size_t>& subset, std::size_t limit, const char* what) {
    std::set<std::size_t> seen;
    for (std::size_t i : subset) {
        if (i >= limit) {
            throw ConfigError(fmt::format("{}: index {} out of range (model has {})", what, i, limit));
        }
        if (!seen.insert(i).second) {
            throw ConfigError(fmt::format("{}: duplicate index {}", what, i));
        }
    }
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

Vector pick(const Vector& v, std::span<const std::size_t> subset) {
    Vector out(subset.size());
    for (std::size_t j = 0; j < subset.size(); ++j) {
        out[j] = v[subset[j]];
    }
    return out;
}

Vector midpoint(const Vector& a, const Vector& b) {
    Vector m(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) {
        m[j] = 0.5 * (a[j] + b[j]);
    }
    return m;
}

bool provenance_less(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

// ---- configuration --------------------------------------------------------

double CampaignConfig::effective_horizon() const {
    return horizon > 0.0 ? horizon : signal::total_duration(segments);
}

const signal::ControlBounds& CampaignConfig::effective_bounds(const models::Model& model) const {
    return bounds ? *bounds : model.control_bounds();
}

void CampaignConfig::validate(const models::Model& model) const {
    const auto& b = effective_bounds(model);
    if (b.channels() != model.n_controls()) {
        throw ConfigError(fmt::format("control bounds have {} channels, model {} has {} controls",
                                      b.channels(), model.name(), model.n_controls()));
    }
    b.validate();
    if (model.n_controls() > geometry::kMaxDimension) {
        throw ConfigError("more than 7 control channels are not supported");
    }
    if (segments.empty()) {
        throw ConfigError("faprbs: no segments configured");
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (!(segments[s].hold_duration > 0.0) || !std::isfinite(segments[s].hold_duration)) {
            throw ConfigError(fmt::format("faprbs segment {}: hold duration must be positive", s));
        }
        if (segments[s].n_holds == 0) {
            throw ConfigError(fmt::format("faprbs segment {}: n_holds must be at least 1", s));
        }
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ConfigError("dt must be positive");
    }
    if (horizon < 0.0 || !std::isfinite(horizon)) {
        throw ConfigError("horizon must be nonnegative (0 selects the full signal duration)");
    }
    const double h = effective_horizon();
    if (h > signal::total_duration(segments) * (1.0 + 1e-12)) {
        throw ConfigError(fmt::format("horizon {} exceeds the faprbs duration {}", h,
                                      signal::total_duration(segments)));
    }
    if (!models::is_multiple_of(h, dt)) {
        throw ConfigError(fmt::format("dt {} does not divide horizon {}", dt, h));
    }
    for (std::size_t s = 0; s < segments.size(); ++s) {
        if (!models::is_multiple_of(segments[s].hold_duration, dt)) {
            throw ConfigError(fmt::format("faprbs segment {}: dt {} does not divide hold duration {}",
                                          s, dt, segments[s].hold_duration));
        }
    }
    const auto out = output_subset.empty() ? all_indices(model.n_outputs()) : output_subset;
    check_subset(out, model.n_outputs(), "output_subset");
    if (out.size() > geometry::kMaxDimension) {
        throw ConfigError("output_subset: at most 7 output variables are supported");
    }
    check_subset(state_subset, model.n_states(), "state_subset");
    if (max_sims_phase2 < 1 || max_sims_phase3 < 1 || max_epochs < 1) {
        throw ConfigError("max_sims_phase2, max_sims_phase3 and max_epochs must be at least 1");
    }
    if (kappa < 1) {
        throw ConfigError("kappa must be at least 1");
    }
    if (radius_plateau_iters < 1) {
        throw ConfigError("radius_plateau_iters must be at least 1");
    }
    if (!(radius_plateau_tol >= 0.0) || !std::isfinite(radius_plateau_tol)) {
        throw ConfigError("radius_plateau_tol must be nonnegative");
    }
    if (!std::isfinite(score_threshold_phase2)) {
        throw ConfigError("score_threshold_phase2 must be finite");
    }
    if (ic_min_distance && !(*ic_min_distance >= 0.0)) {
        throw ConfigError("ic_min_distance must be nonnegative");
    }
    if (seed_weighting.kind == SeedWeighting::Kind::discount &&
        !(seed_weighting.gamma > 0.0 && seed_weighting.gamma < 1.0)) {
        throw ConfigError("seed weighting: discount gamma must lie in (0, 1)");
    }
    if (!(divergence_limit > 0.0)) {
        throw ConfigError("divergence_limit must be positive");
    }
    if (!(min_completed_fraction >= 0.0 && min_completed_fraction <= 1.0)) {
        throw ConfigError("min_completed_fraction must lie in [0, 1]");
    }
    if (model.default_x0().size() != model.n_states()) {
        throw ConfigError("model default x0 has the wrong size");
    }
}

nlohmann::json to_json(const CampaignConfig& c) {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : c.segments) {
        segs.push_back({{"hold_duration", s.hold_duration}, {"n_holds", s.n_holds}});
    }
    nlohmann::json j = {
        {"n_hss", c.n_hss},
        {"max_sims_phase2", c.max_sims_phase2},
        {"score_threshold_phase2", c.score_threshold_phase2},
        {"max_sims_phase3", c.max_sims_phase3},
        {"kappa", c.kappa},
        {"radius_plateau_tol", c.radius_plateau_tol},
        {"radius_plateau_iters", c.radius_plateau_iters},
        {"max_epochs", c.max_epochs},
        {"ic_min_distance", nullptr},
        {"output_subset", c.output_subset},
        {"state_subset", c.state_subset},
        {"seed_weighting",
         {{"kind", c.seed_weighting.kind == SeedWeighting::Kind::uniform ? "uniform" : "discount"},
          {"gamma", c.seed_weighting.gamma}}},
        {"rng_seed", c.rng_seed},
        {"dt", c.dt},
        {"horizon", c.horizon},
        {"segments", segs},
        {"bounds", nullptr},
        {"divergence_limit", c.divergence_limit},
        {"min_completed_fraction", c.min_completed_fraction}};
    if (c.ic_min_distance) {
        j["ic_min_distance"] = *c.ic_min_distance;
    }
    if (c.bounds) {
        j["bounds"] = {{"lower", c.bounds->lower},
                       {"upper", c.bounds->upper},
                       {"amplitude", c.bounds->faprbs_amplitude}};
    }
    return j;
}

CampaignConfig campaign_config_from_json(const nlohmann::json& j) {
    CampaignConfig c;
    c.n_hss = j.at("n_hss").get<std::size_t>();
    c.max_sims_phase2 = j.at("max_sims_phase2").get<std::size_t>();
    c.score_threshold_phase2 = j.at("score_threshold_phase2").get<double>();
    c.max_sims_phase3 = j.at("max_sims_phase3").get<std::size_t>();
    c.kappa = j.at("kappa").get<std::size_t>();
    c.radius_plateau_tol = j.at("radius_plateau_tol").get<double>();
    c.radius_plateau_iters = j.at("radius_plateau_iters").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    if (!j.at("ic_min_distance").is_null()) {
        c.ic_min_distance = j.at("ic_min_distance").get<double>();
    }
    c.output_subset = j.at("output_subset").get<std::vector<std::size_t>>();
    c.state_subset = j.at("state_subset").get<std::vector<std::size_t>>();
    const auto& w = j.at("seed_weighting");
    c.seed_weighting.kind = w.at("kind").get<std::string>() == "discount"
                                ? SeedWeighting::Kind::discount
                                : SeedWeighting::Kind::uniform;
    c.seed_weighting.gamma = w.at("gamma").get<double>();
    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    c.dt = j.at("dt").get<double>();
    c.horizon = j.at("horizon").get<double>();
    for (const auto& s : j.at("segments")) {
        c.segments.push_back({s.at("hold_duration").get<double>(), s.at("n_holds").get<std::size_t>()});
    }
    if (!j.at("bounds").is_null()) {
        const auto& b = j.at("bounds");
        c.bounds = signal::ControlBounds{b.at("lower").get<Vector>(), b.at("upper").get<Vector>(),
                                         b.at("amplitude").get<Vector>()};
    }
    c.divergence_limit = j.at("divergence_limit").get<double>();
    c.min_completed_fraction = j.at("min_completed_fraction").get<double>();
    return c;
}

std::uint64_t signal_seed(std::uint64_t campaign_seed, std::size_t run_id) {
    return splitmix64(campaign_seed ^ splitmix64(static_cast<std::uint64_t>(run_id) + 1));
}

// ---- seeds ------------------------------------------------------------------

Seed compute_seed(const models::Trajectory& traj, const SeedWeighting& weighting,
                  const Normalizer& normalizer, std::span<const std::size_t> output_subset) {
    if (traj.outputs.empty()) {
        throw std::invalid_argument("compute_seed: trajectory has no output samples");
    }
    Vector sum(output_subset.size(), 0.0);
    double weight_sum = 0.0;
    double gamma_power = weighting.gamma;
    for (const auto& y : traj.outputs) {
        double w = 1.0;
        if (weighting.kind == SeedWeighting::Kind::discount) {
            w = 1.0 - gamma_power;
            gamma_power *= weighting.gamma;
        }
        for (std::size_t j = 0; j < output_subset.size(); ++j) {
            sum[j] += w * y[output_subset[j]];
        }
        weight_sum += w;
    }
    for (double& s : sum) {
        s /= weight_sum;
    }
    Seed seed;
    seed.run_id = traj.run_id;
    seed.y_bar = normalizer.apply(sum);
    return seed;
}

bool seed_qualifies(const models::Trajectory& traj, double horizon, double min_fraction) {
    if (traj.outputs.empty()) {
        return false;
    }
    if (traj.completed()) {
        return true;
    }
    return traj.times.back() >= min_fraction * horizon;
}

// ---- phase 1 ----------------------------------------------------------------

Phase1Design phase1_design(std::size_t d_u, std::size_t n_hss) {
    Phase1Design design;
    PointSet all = geometry::corner_and_face_points(d_u);
    if (n_hss > 0) {
        const auto hss = geometry::hammersley(n_hss, d_u);
        all.insert(all.end(), hss.begin(), hss.end());
    }
    design.pre_dedup_count = all.size();
    design.points = geometry::dedup_exact(all);
    return design;
}

// ---- phase 2 ----------------------------------------------------------------

ExpansionMetrics expansion_metrics(const Point& t_star, const PointSet& seeds) {
    const Point center = geometry::centroid(seeds);
    return {geometry::distance(t_star, center), geometry::nearest_distance(t_star, seeds).distance};
}

double score_expansion(double l_star, double r_star) { return l_star * r_star; }

std::vector<Candidate> expansion_candidates(const std::vector<Seed>& seeds) {
    PointSet points;
    points.reserve(seeds.size());
    for (const auto& s : seeds) {
        points.push_back(s.y_bar);
    }
    std::vector<Candidate> out;
    if (seeds.size() < 2) {
        return out;
    }
    const Point center = geometry::centroid(points);
    out.reserve(seeds.size() * (seeds.size() - 1) / 2);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        for (std::size_t j = i + 1; j < seeds.size(); ++j) {
            Candidate c;
            c.u_star = midpoint(seeds[i].u_bar, seeds[j].u_bar);
            c.t_star = midpoint(seeds[i].y_bar, seeds[j].y_bar);
            c.l_star = geometry::distance(c.t_star, center);
            c.r_star = geometry::nearest_distance(c.t_star, points).distance;
            c.score = score_expansion(c.l_star, c.r_star);
            c.provenance = {std::min(seeds[i].run_id, seeds[j].run_id),
                            std::max(seeds[i].run_id, seeds[j].run_id)};
            out.push_back(std::move(c));
        }
    }
    return out;
}

bool is_valid_target(const Point& t_star, const std::vector<UsedTarget>& used) {
    return std::none_of(used.begin(), used.end(), [&](const UsedTarget& u) {
        return geometry::distance(t_star, u.t_star) < u.r_star_at_use;
    });
}

std::optional<std::size_t> select_best(const std::vector<Candidate>& candidates,
                                       const std::vector<UsedTarget>& used) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (!is_valid_target(c.t_star, used)) {
            continue;
        }
        if (!best || c.score > candidates[*best].score ||
            (c.score == candidates[*best].score &&
             provenance_less(c.provenance, candidates[*best].provenance))) {
            best = i;
        }
    }
    return best;
}

// ---- phase 3 ----------------------------------------------------------------

std::vector<Candidate> population_candidates(const std::vector<Seed>& seeds) {
    if (seeds.empty()) {
        throw geometry::GeometryError("population: no seeds");
    }
    const std::size_t d = seeds.front().y_bar.size();
    if (seeds.size() < d + 1) {
        throw geometry::DegenerateHullError(
            fmt::format("population: {} seeds are too few for {} output dimensions", seeds.size(), d));
    }
    PointSet points;
    points.reserve(seeds.size());
    for (const auto& s : seeds) {
        points.push_back(s.y_bar);
    }
    const auto vertices = geometry::voronoi_vertices(points);

    std::vector<Candidate> out;
    out.reserve(vertices.size());
    for (const auto& v : vertices) {
        Candidate c;
        const double inv = 1.0 / static_cast<double>(v.defining_indices.size());
        c.u_star.assign(seeds.front().u_bar.size(), 0.0);
        c.t_star.assign(d, 0.0);
        for (std::size_t idx : v.defining_indices) {
            for (std::size_t j = 0; j < c.u_star.size(); ++j) c.u_star[j] += inv * seeds[idx].u_bar[j];
            for (std::size_t j = 0; j < d; ++j) c.t_star[j] += inv * seeds[idx].y_bar[j];
            c.provenance.push_back(seeds[idx].run_id);
        }
        c.r_star = std::numeric_limits<double>::infinity();
        for (std::size_t idx : v.defining_indices) {
            c.r_star = std::min(c.r_star, geometry::distance(c.t_star, seeds[idx].y_bar));
        }
        std::sort(c.provenance.begin(), c.provenance.end());
        c.voronoi_vertex = v.vertex;
        out.push_back(std::move(c));
    }
    std::stable_sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
        return provenance_less(a.provenance, b.provenance);
    });
    return out;
}

std::vector<std::size_t> count_in_balls(const Point& t_star, double r_star, std::size_t kappa,
                                        const std::vector<Vector>& samples) {
    std::vector<std::size_t> counts(kappa, 0);
    if (kappa == 0) {
        return counts;
    }
    const double outer = static_cast<double>(kappa) * r_star;
    const double outer_sq = outer * outer;
    for (const auto& s : samples) {
        const double sq = geometry::squared_distance(t_star, s);
        if (sq > outer_sq) {
            continue;
        }
        const double dist = std::sqrt(sq);
        for (std::size_t j = 1; j <= kappa; ++j) {
            if (dist <= static_cast<double>(j) * r_star) {
                for (std::size_t k = j; k <= kappa; ++k) {
                    ++counts[k - 1];
                }
                break;
            }
        }
    }
    return counts;
}

double score_population(double r_star, std::span<const std::size_t> counts, std::size_t kappa) {
    double penalty = 0.0;
    for (std::size_t j = 1; j <= kappa && j <= counts.size(); ++j) {
        const double w = static_cast<double>(kappa - j + 1) / static_cast<double>(kappa);
        penalty += w * static_cast<double>(counts[j - 1]);
    }
    return r_star / (1.0 + penalty);
}

RadiusPlateau::RadiusPlateau(double tolerance, std::size_t iterations)
    : tolerance_(tolerance), iterations_(iterations) {}

bool RadiusPlateau::update(double mean_radius) {
    if (previous_) {
        const double base = std::abs(*previous_);
        const double change = base > 0.0 ? std::abs(mean_radius - *previous_) / base
                                         : std::abs(mean_radius - *previous_);
        streak_ = change < tolerance_ ? streak_ + 1 : 0;
    }
    previous_ = mean_radius;
    return streak_ >= iterations_;
}

// ---- phase 4 ----------------------------------------------------------------

double default_ic_min_distance(std::size_t d) {
    return geometry::mean_pairwise_distance_unit_cube(d, 1'000'000, 24);
}

std::optional<IcChoice> phase4_next_ic(const std::vector<const models::Trajectory*>& trajectories,
                                       const std::vector<Vector>& used_ics,
                                       std::span<const std::size_t> state_subset,
                                       double min_distance) {
    struct Sample {
        std::size_t traj = 0;
        std::size_t k = 0;
        Vector normalized;
        double dist = 0.0;
    };
    std::vector<Vector> raw;
    std::vector<Sample> samples;
    for (std::size_t t = 0; t < trajectories.size(); ++t) {
        const auto& states = trajectories[t]->states;
        for (std::size_t k = 0; k < states.size(); ++k) {
            raw.push_back(pick(states[k], state_subset));
            samples.push_back({t, k, {}, 0.0});
        }
    }
    if (samples.empty()) {
        return std::nullopt;
    }
    const Normalizer norm = Normalizer::fit(raw);
    PointSet normalized;
    normalized.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        samples[i].normalized = norm.apply(raw[i]);
        normalized.push_back(samples[i].normalized);
    }
    const Point center = geometry::centroid(normalized);
    for (auto& s : samples) {
        s.dist = geometry::distance(s.normalized, center);
    }
    std::vector<Vector> used;
    used.reserve(used_ics.size());
    for (const auto& ic : used_ics) {
        used.push_back(norm.apply(pick(ic, state_subset)));
    }
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return samples[a].dist > samples[b].dist;
    });
    for (std::size_t i : order) {
        const auto& s = samples[i];
        const bool far_enough = std::all_of(used.begin(), used.end(), [&](const Vector& u) {
            return geometry::distance(s.normalized, u) >= min_distance;
        });
        if (far_enough) {
            const auto* traj = trajectories[s.traj];
            return IcChoice{traj->states[s.k], traj->run_id, s.k, s.dist};
        }
    }
    return std::nullopt;
}

// ---- campaign ---------------------------------------------------------------

namespace {

double seed_hull_volume(const std::vector<Seed>& seeds) {
    if (seeds.empty()) {
        return 0.0;
    }
    PointSet points;
    for (const auto& s : seeds) {
        points.push_back(s.y_bar);
    }
    try {
        return geometry::convex_hull(points).volume;
    } catch (const geometry::GeometryError&) {
        return 0.0; // flat or too few seeds: zero d-volume
    }
}

class Campaign {
  public:
    Campaign(const CampaignConfig& config, const models::Model& model, const CampaignOptions& options)
        : cfg_(config), model_(model), opt_(options), bounds_(config.effective_bounds(model)),
          horizon_(config.effective_horizon()),
          output_subset_(config.output_subset.empty() ? all_indices(model.n_outputs())
                                                      : config.output_subset),
          state_subset_(config.state_subset.empty() ? all_indices(model.n_states())
                                                    : config.state_subset) {}

    CampaignResult run() {
        const auto start = Clock::now();
        auto& meta = ds_.meta;
        meta.model_name = model_.name();
        meta.rng_seed = cfg_.rng_seed;
        meta.n_states = model_.n_states();
        meta.n_controls = model_.n_controls();
        meta.n_outputs = model_.n_outputs();
        meta.output_subset = output_subset_;
        meta.state_subset = state_subset_;
        meta.config = to_json(cfg_);

        dataset::InitialCondition ic{model_.default_x0(), std::nullopt, std::nullopt};
        for (std::size_t epoch = 0;; ++epoch) {
            run_epoch(epoch, ic);
            if (epoch + 1 >= cfg_.max_epochs) {
                meta.campaign_stop = "max_epochs reached";
                break;
            }
            auto next = choose_next_ic();
            if (!next) {
                meta.campaign_stop = "no valid initial condition";
                break;
            }
            ic = {next->x0, next->run_id, next->sample};
        }
        timing_.total_seconds = seconds_since(start);
        return {std::move(ds_), timing_};
    }

  private:
    const CampaignConfig& cfg_;
    const models::Model& model_;
    const CampaignOptions& opt_;
    const signal::ControlBounds& bounds_;
    double horizon_;
    std::vector<std::size_t> output_subset_;
    std::vector<std::size_t> state_subset_;
    dataset::Dataset ds_;
    Timing timing_;

    // Current-epoch working set.
    std::vector<Seed> seeds_;
    std::vector<Vector> samples_; // normalized output-subset samples of seeded runs

    void log(const std::string& msg) const {
        if (opt_.log) {
            opt_.log(msg);
        }
    }

    dataset::EpochRecord& epoch_record() { return ds_.meta.epochs.back(); }

    struct SimOutput {
        signal::ControlSignal signal;
        models::Trajectory trajectory;
        double signal_seconds = 0.0;
        double sim_seconds = 0.0;
    };

    SimOutput simulate(std::size_t run_id, const Vector& u_eng, const Vector& x0) const {
        SimOutput out;
        auto t0 = Clock::now();
        out.signal = signal::generate_faprbs(u_eng, cfg_.segments, bounds_,
                                             signal_seed(cfg_.rng_seed, run_id));
        out.signal_seconds = seconds_since(t0);
        t0 = Clock::now();
        out.trajectory = models::simulate(model_, x0, out.signal, cfg_.dt, horizon_,
                                          {cfg_.divergence_limit});
        out.trajectory.run_id = run_id;
        out.sim_seconds = seconds_since(t0);
        return out;
    }

    std::size_t append_run(std::size_t epoch, int phase, const Vector& u_norm, SimOutput&& sim,
                           std::optional<dataset::Provenance> provenance) {
        dataset::RunRecord rec;
        rec.run_id = ds_.runs.size();
        rec.epoch = epoch;
        rec.phase = phase;
        rec.u_bar = bounds_.to_engineering(u_norm);
        rec.signal_seed = signal_seed(cfg_.rng_seed, rec.run_id);
        rec.signal = std::move(sim.signal);
        rec.trajectory = std::move(sim.trajectory);
        rec.provenance = std::move(provenance);
        timing_.signal_seconds += sim.signal_seconds;
        timing_.simulation_seconds += sim.sim_seconds;
        ds_.runs.push_back(std::move(rec));
        const auto& r = ds_.runs.back();
        if (opt_.progress) {
            opt_.progress({epoch, phase, r.run_id,
                           r.provenance ? std::optional<double>(r.provenance->score) : std::nullopt,
                           r.trajectory.status});
        }
        return r.run_id;
    }

    bool qualifies(const dataset::RunRecord& r) const {
        return seed_qualifies(r.trajectory, horizon_, cfg_.min_completed_fraction);
    }

    // Seeds the run under the frozen epoch normalization; false if it does not qualify.
    bool add_seed(std::size_t run_id) {
        auto& r = ds_.runs[run_id];
        if (!qualifies(r)) {
            return false;
        }
        const auto& norm = epoch_record().output_normalization;
        Seed s = compute_seed(r.trajectory, cfg_.seed_weighting, norm, output_subset_);
        s.u_bar = bounds_.to_normalized(r.u_bar);
        s.epoch = r.epoch;
        r.seed = s;
        seeds_.push_back(std::move(s));
        for (const auto& y : r.trajectory.outputs) {
            samples_.push_back(norm.apply(pick(y, output_subset_)));
        }
        return true;
    }

    // Used targets of this epoch plus earlier epochs' targets re-normalized
    // into this epoch's frame; exclusion radii are kept as recorded.
    std::vector<UsedTarget> active_used_targets() {
        const auto& current = epoch_record();
        std::vector<UsedTarget> used;
        for (const auto& e : ds_.meta.epochs) {
            if (e.epoch == current.epoch) {
                continue;
            }
            for (auto t : e.used_targets) {
                t.t_star = current.output_normalization.apply(t.t_star_raw);
                used.push_back(std::move(t));
            }
        }
        used.insert(used.end(), current.used_targets.begin(), current.used_targets.end());
        return used;
    }

    void run_epoch(std::size_t epoch, const dataset::InitialCondition& ic) {
        dataset::EpochRecord rec;
        rec.epoch = epoch;
        rec.initial_condition = ic;
        ds_.meta.epochs.push_back(std::move(rec));
        seeds_.clear();
        samples_.clear();

        run_phase1(epoch, ic.x0);
        if (opt_.phase2) {
            run_phase2(epoch, ic.x0);
        } else {
            epoch_record().phase2_stop = "disabled";
        }
        if (opt_.phase3) {
            run_phase3(epoch, ic.x0);
        } else {
            epoch_record().phase3_stop = "disabled";
        }
    }

    void run_phase1(std::size_t epoch, const Vector& x0) {
        const auto design = phase1_design(model_.n_controls(), cfg_.n_hss);
        auto& rec = epoch_record();
        rec.counts.phase1_pre_dedup = design.pre_dedup_count;
        const std::size_t first_id = ds_.runs.size();
        const std::size_t n = design.points.size();

        std::vector<SimOutput> results(n);
        const std::size_t workers = std::max<std::size_t>(1, std::min(opt_.jobs, n));
        if (workers == 1) {
            for (std::size_t i = 0; i < n; ++i) {
                results[i] = simulate(first_id + i, bounds_.to_engineering(design.points[i]), x0);
            }
        } else {
            std::atomic<std::size_t> next{0};
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < n; i = next++) {
                        results[i] = simulate(first_id + i, bounds_.to_engineering(design.points[i]), x0);
                    }
                });
            }
            for (auto& t : pool) {
                t.join();
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            append_run(epoch, 1, design.points[i], std::move(results[i]), std::nullopt);
        }
        rec.counts.phase1 = n;

        std::size_t completed = 0;
        for (std::size_t id = first_id; id < ds_.runs.size(); ++id) {
            completed += ds_.runs[id].trajectory.completed() ? 1 : 0;
        }
        if (completed == 0) {
            throw EpochFailure(fmt::format("epoch {}: every phase-1 simulation diverged", epoch));
        }

        // Normalization over every qualifying run so far, frozen for this epoch.
        std::vector<Vector> raw;
        for (const auto& r : ds_.runs) {
            if (qualifies(r)) {
                for (const auto& y : r.trajectory.outputs) {
                    raw.push_back(pick(y, output_subset_));
                }
            }
        }
        rec.output_normalization = Normalizer::fit(raw);
        for (std::size_t id = first_id; id < ds_.runs.size(); ++id) {
            add_seed(id);
        }
    }

    void run_candidate(std::size_t epoch, int phase, const Candidate& c, const Vector& x0) {
        dataset::Provenance prov{c.provenance, c.t_star, c.score, c.l_star, c.r_star, c.voronoi_vertex};
        const std::size_t id = ds_.runs.size();
        auto sim = simulate(id, bounds_.to_engineering(c.u_star), x0);
        append_run(epoch, phase, c.u_star, std::move(sim), std::move(prov));
        auto& rec = epoch_record();
        rec.used_targets.push_back(
            {id, c.t_star, rec.output_normalization.invert(c.t_star), c.r_star});
        if (!add_seed(id)) {
            log(fmt::format("epoch {} phase {}: run {} diverged and yields no seed", epoch, phase, id));
        }
    }

    void run_phase2(std::size_t epoch, const Vector& x0) {
        auto& rec = epoch_record();
        rec.phase2_hull_volumes.push_back(seed_hull_volume(seeds_));
        rec.phase2_stop = "max_sims_phase2 reached";
        while (rec.counts.phase2 < cfg_.max_sims_phase2) {
            if (seeds_.size() < 2) {
                rec.phase2_stop = "fewer than two seeds";
                break;
            }
            const auto t0 = Clock::now();
            const auto candidates = expansion_candidates(seeds_);
            rec.phase2_candidate_counts.push_back(candidates.size());
            const auto best = select_best(candidates, active_used_targets());
            timing_.target_seconds += seconds_since(t0);
            if (!best) {
                rec.phase2_stop = "no valid targets";
                break;
            }
            if (candidates[*best].score < cfg_.score_threshold_phase2) {
                rec.phase2_stop = "best score below threshold";
                break;
            }
            run_candidate(epoch, 2, candidates[*best], x0);
            ++rec.counts.phase2;
            rec.phase2_hull_volumes.push_back(seed_hull_volume(seeds_));
        }
        log(fmt::format("epoch {} phase 2 stopped: {}", epoch, rec.phase2_stop));
    }

    void run_phase3(std::size_t epoch, const Vector& x0) {
        auto& rec = epoch_record();
        RadiusPlateau plateau(cfg_.radius_plateau_tol, cfg_.radius_plateau_iters);
        rec.phase3_stop = "max_sims_phase3 reached";
        while (rec.counts.phase3 < cfg_.max_sims_phase3) {
            auto t0 = Clock::now();
            std::vector<Candidate> candidates;
            try {
                candidates = population_candidates(seeds_);
            } catch (const geometry::GeometryError& e) {
                rec.phase3_stop = std::string("skipped: ") + e.what();
                break;
            }
            const auto used = active_used_targets();
            std::vector<Candidate> valid;
            for (auto& c : candidates) {
                if (c.r_star > 0.0 && is_valid_target(c.t_star, used)) {
                    valid.push_back(std::move(c));
                }
            }
            rec.phase3_vertex_counts.push_back(candidates.size());
            rec.phase3_sample_counts.push_back(samples_.size());
            timing_.target_seconds += seconds_since(t0);
            if (valid.empty()) {
                rec.phase3_stop = "no valid candidates";
                break;
            }
            double mean_r = 0.0;
            for (const auto& c : valid) {
                mean_r += c.r_star / static_cast<double>(valid.size());
            }
            rec.phase3_mean_radius.push_back(mean_r);

            t0 = Clock::now();
            for (auto& c : valid) {
                const auto counts = count_in_balls(c.t_star, c.r_star, cfg_.kappa, samples_);
                c.score = score_population(c.r_star, counts, cfg_.kappa);
            }
            timing_.matrix_seconds += seconds_since(t0);
            const auto best = select_best(valid, {});
            run_candidate(epoch, 3, valid[*best], x0);
            ++rec.counts.phase3;
            if (plateau.update(mean_r)) {
                rec.phase3_stop = "mean radius plateau";
                break;
            }
        }
        log(fmt::format("epoch {} phase 3 stopped: {}", epoch, rec.phase3_stop));
    }

    std::optional<IcChoice> choose_next_ic() {
        std::vector<const models::Trajectory*> trajs;
        for (const auto& r : ds_.runs) {
            if (r.trajectory.completed()) {
                trajs.push_back(&r.trajectory);
            }
        }
        std::vector<Vector> used;
        for (const auto& e : ds_.meta.epochs) {
            used.push_back(e.initial_condition.x0);
        }
        const double min_d = cfg_.ic_min_distance ? *cfg_.ic_min_distance
                                                  : default_ic_min_distance(state_subset_.size());
        return phase4_next_ic(trajs, used, state_subset_, min_d);
    }
};

} // namespace

CampaignResult run_campaign_detailed(const CampaignConfig& config, const models::Model& model,
                                     const CampaignOptions& options) {
    config.validate(model);
    return Campaign(config, model, options).run();
}

dataset::Dataset run_campaign(const CampaignConfig& config, const models::Model& model,
                              const CampaignOptions& options) {
    return run_campaign_detailed(config, model, options).dataset;
}

} // namespace dynsample::sampler
