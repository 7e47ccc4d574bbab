// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "dynsample/config.hpp"
#include "dynsample/dataset.hpp"
#include "dynsample/geometry.hpp"
#include "dynsample/models.hpp"
#include "dynsample/sampler.hpp"
#include "dynsample/signal.hpp"
#include "dynsample/surrogate.hpp"

#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace dynsample;
using testsupport::Pt;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt_double(double v, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

// Fails the outcome and appends a reason; returns the condition.
bool expect(Outcome& o, bool cond, const std::string& what) {
    if (!cond) {
        o.pass = false;
        o.detail += (o.detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
    return cond;
}

void note(Outcome& o, const std::string& what) {
    o.detail += (o.detail.empty() ? "" : "; ") + what;
}

sampler::CampaignConfig load_campaign(const std::string& file) {
    return config::load_config(std::string(ACCEPT_CONFIGS_DIR) + "/" + file).campaign;
}

std::size_t choose2(std::size_t n) { return n * (n - 1) / 2; }

// ---- 1 ----------------------------------------------------------------------

Outcome eq7_counts() {
    Outcome o;
    std::size_t checked = 0;
    for (std::size_t d : {1, 2, 3}) {
        const auto model = testsupport::linear_toy(d);
        for (std::size_t n : {0, 5, 15}) {
            const std::size_t expected = (std::size_t{1} << d) + 2 * d + n;
            expect(o, sampler::phase1_design(d, n).pre_dedup_count == expected,
                   "design d=" + std::to_string(d) + " n=" + std::to_string(n));
            auto cfg = testsupport::toy_config();
            cfg.n_hss = n;
            cfg.segments = {{0.25, 4}};
            sampler::CampaignOptions opts;
            opts.phase2 = false;
            opts.phase3 = false;
            const auto ds = sampler::run_campaign(cfg, *model, opts);
            const auto& counts = ds.meta.epochs.at(0).counts;
            expect(o, counts.phase1_pre_dedup == expected,
                   "campaign d=" + std::to_string(d) + " n=" + std::to_string(n));
            expect(o, counts.phase1 == ds.runs.size(), "phase-1 runs recorded");
            ++checked;
        }
    }
    note(o, std::to_string(checked) + " (d_u, n_hss) combinations");
    return o;
}

// ---- 2 ----------------------------------------------------------------------

double boundary_distance(const std::vector<Pt>& poly, const Pt& q) {
    double best = 1e300;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Pt& a = poly[i];
        const Pt& b = poly[(i + 1) % poly.size()];
        const double ex = b[0] - a[0];
        const double ey = b[1] - a[1];
        const double t = std::clamp(((q[0] - a[0]) * ex + (q[1] - a[1]) * ey) / (ex * ex + ey * ey), 0.0, 1.0);
        best = std::min(best, std::hypot(a[0] + t * ex - q[0], a[1] + t * ey - q[1]));
    }
    return best;
}

Outcome geometry_battery() {
    Outcome o;
    std::mt19937 rng(2024);
    double worst_spread = 0.0;
    std::size_t simplices = 0;
    while (simplices < 1000) {
        const std::size_t d = 2 + simplices % 3;
        const auto pts = testsupport::random_points(d + 1, d, static_cast<std::uint32_t>(rng()));
        geometry::Ball ball;
        try {
            ball = geometry::circumcenter(pts);
        } catch (const geometry::SingularConfigurationError&) {
            continue;
        }
        double lo = 1e300;
        double hi = 0.0;
        for (const auto& p : pts) {
            const double r = testsupport::dist(p, ball.center);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        worst_spread = std::max(worst_spread, (hi - lo) / hi);
        ++simplices;
    }
    expect(o, worst_spread < 1e-9, "circumcenter spread " + fmt_double(worst_spread));
    note(o, "1000 simplices, max relative spread " + fmt_double(worst_spread, 2));

    std::size_t violations = 0;
    for (std::uint32_t s = 0; s < 50; ++s) {
        const std::size_t d = s < 25 ? 2 : 3;
        const std::size_t n = 10 + (s * 7) % 41;
        const auto pts = testsupport::random_points(n, d, 500 + s);
        for (const auto& simplex : geometry::delaunay(pts)) {
            for (std::size_t i = 0; i < n; ++i) {
                if (std::find(simplex.vertex_indices.begin(), simplex.vertex_indices.end(), i) !=
                    simplex.vertex_indices.end()) {
                    continue;
                }
                if (testsupport::dist(pts[i], simplex.circumcenter) <
                    simplex.circumradius * (1.0 - 1e-9)) {
                    ++violations;
                }
            }
        }
    }
    expect(o, violations == 0, std::to_string(violations) + " empty-circumsphere violations");
    note(o, "50 Delaunay sets, " + std::to_string(violations) + " violations");

    std::size_t matched = 0;
    std::size_t interior = 0;
    std::size_t interior_matched = 0;
    double worst_gap = 0.0;
    for (std::uint32_t s = 0; s < 10; ++s) {
        const std::size_t n = 6 + s % 7;
        const auto pts = testsupport::random_points(n, 2, 700 + s);
        const auto poly = testsupport::hull_2d(pts);
        double best = 0.0;
        for (const auto& v : geometry::voronoi_vertices(pts)) {
            if (testsupport::inside_ccw_polygon(poly, v.vertex)) {
                best = std::max(best, v.radius);
            }
        }
        const auto oracle = testsupport::grid_largest_empty_circle(pts, 500);
        const double gap = std::abs(best - oracle.radius);
        worst_gap = std::max(worst_gap, gap / oracle.cell);
        if (gap <= oracle.cell) {
            ++matched;
        }
        // A grid optimum on the hull boundary is not a Voronoi vertex.
        if (boundary_distance(poly, oracle.center) > oracle.cell) {
            ++interior;
            interior_matched += gap <= oracle.cell ? 1 : 0;
        }
    }
    expect(o, matched == 10, "largest empty circle matched " + std::to_string(matched) + "/10");
    note(o, "LEC " + std::to_string(matched) + "/10, worst gap " + fmt_double(worst_gap, 3) +
                " cells; grid optimum off the hull boundary in " + std::to_string(interior) +
                " sets, matched " + std::to_string(interior_matched));
    return o;
}

// ---- 3 ----------------------------------------------------------------------

// Max over anchored boxes [0, a) x [0, b), a, b in {1/16, ..., 1}.
double box_discrepancy(const std::vector<Pt>& pts) {
    double worst = 0.0;
    for (int i = 1; i <= 16; ++i) {
        for (int j = 1; j <= 16; ++j) {
            const double a = i / 16.0;
            const double b = j / 16.0;
            std::size_t in = 0;
            for (const auto& p : pts) {
                if (p[0] < a && p[1] < b) {
                    ++in;
                }
            }
            worst = std::max(worst, std::abs(static_cast<double>(in) / pts.size() - a * b));
        }
    }
    return worst;
}

Outcome hammersley_discrepancy() {
    Outcome o;
    const double ham = box_discrepancy(geometry::hammersley(64, 2));
    double sum = 0.0;
    std::size_t beaten = 0;
    for (std::uint32_t s = 0; s < 20; ++s) {
        const double r = box_discrepancy(testsupport::random_points(64, 2, 3000 + s));
        sum += r;
        if (ham < r) {
            ++beaten;
        }
    }
    const double mean = sum / 20.0;
    expect(o, ham < mean, "hammersley " + fmt_double(ham) + " vs random mean " + fmt_double(mean));
    note(o, "hammersley " + fmt_double(ham) + ", random mean " + fmt_double(mean) + ", below " +
                std::to_string(beaten) + "/20 baselines");
    return o;
}

// ---- 4 ----------------------------------------------------------------------

Outcome mean_distance() {
    Outcome o;
    const double d1 = geometry::mean_pairwise_distance_unit_cube(1, 1'000'000, 4);
    const double d2 = geometry::mean_pairwise_distance_unit_cube(2, 1'000'000, 4);
    const double oracle = testsupport::mc_mean_distance(2, 10'000'000, 99);
    expect(o, std::abs(d1 - 1.0 / 3.0) <= 0.01, "d=1 estimate " + fmt_double(d1));
    expect(o, std::abs(d2 - oracle) <= 0.01, "d=2 estimate " + fmt_double(d2));
    note(o, "d=1 " + fmt_double(d1, 6) + " vs 1/3, d=2 " + fmt_double(d2, 6) + " vs oracle " +
                fmt_double(oracle, 6));
    return o;
}

// ---- 5 ----------------------------------------------------------------------

std::vector<std::size_t> resolved_subset(const std::vector<std::size_t>& subset, std::size_t n) {
    if (!subset.empty()) {
        return subset;
    }
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    return all;
}

Pt pick(const Pt& v, const std::vector<std::size_t>& idx) {
    Pt out;
    for (std::size_t i : idx) {
        out.push_back(v[i]);
    }
    return out;
}

Outcome campaign_structure() {
    Outcome o;
    auto cfg = load_campaign("cstr3x2.toml");
    // Three inputs give at least 2^3 + 2*3 = 14 phase-1 runs.
    cfg.n_hss = 0;
    cfg.max_sims_phase2 = 8;
    cfg.max_sims_phase3 = 8;
    cfg.max_epochs = 2;
    cfg.rng_seed = 5;
    const auto model = models::builtin_model("cstr3x2");
    const auto ds = sampler::run_campaign(cfg, *model);
    const auto& meta = ds.meta;
    const auto& e0 = meta.epochs.at(0);
    note(o, "epoch 0 runs " + std::to_string(e0.counts.phase1) + "+" +
                std::to_string(e0.counts.phase2) + "+" + std::to_string(e0.counts.phase3));
    expect(o, e0.counts.phase2 <= 8 && e0.counts.phase3 <= 8, "phase 2/3 budget");

    // (a)
    bool monotone = true;
    for (const auto& e : meta.epochs) {
        for (std::size_t i = 1; i < e.phase2_hull_volumes.size(); ++i) {
            monotone &= e.phase2_hull_volumes[i] >= e.phase2_hull_volumes[i - 1] * (1.0 - 1e-12);
        }
    }
    expect(o, e0.phase2_hull_volumes.size() >= 2, "(a) phase 2 ran");
    expect(o, monotone, "(a) hull volume nondecreasing");

    // (b)
    bool shrinking = true;
    for (const auto& e : meta.epochs) {
        if (!e.phase3_mean_radius.empty()) {
            shrinking &= e.phase3_mean_radius.back() <= e.phase3_mean_radius.front();
        }
    }
    expect(o, !e0.phase3_mean_radius.empty(), "(b) phase 3 ran");
    expect(o, shrinking, "(b) final mean r* <= initial");

    // (c) every target, in its own epoch's frame, keeps clear of all earlier used targets.
    std::map<std::size_t, sampler::UsedTarget> used;
    for (const auto& e : meta.epochs) {
        for (const auto& u : e.used_targets) {
            used.emplace(u.run_id, u);
        }
    }
    std::size_t checked = 0;
    bool excluded = true;
    for (const auto& r : ds.runs) {
        if (!r.provenance) {
            continue;
        }
        const auto& norm = meta.epochs.at(r.epoch).output_normalization;
        for (const auto& [id, u] : used) {
            if (id >= r.run_id) {
                break;
            }
            excluded &= testsupport::dist(r.provenance->t_star, norm.apply(u.t_star_raw)) >=
                        u.r_star_at_use * (1.0 - 1e-12);
        }
        ++checked;
    }
    expect(o, checked > 0 && excluded, "(c) used-target exclusion");

    // (d)
    const auto subset = resolved_subset(meta.state_subset, meta.n_states);
    const double min_d = cfg.ic_min_distance ? *cfg.ic_min_distance
                                             : sampler::default_ic_min_distance(subset.size());
    expect(o, meta.epochs.size() == 2, "(d) second epoch started");
    for (std::size_t e = 1; e < meta.epochs.size(); ++e) {
        const auto& ic = meta.epochs[e].initial_condition;
        if (!expect(o, ic.source_run && ic.source_sample, "(d) IC provenance")) {
            break;
        }
        const auto& src = ds.runs.at(*ic.source_run);
        expect(o, src.epoch < e, "(d) IC from an earlier epoch");
        expect(o, src.trajectory.states.at(*ic.source_sample) == ic.x0, "(d) IC is a recorded state");
        std::vector<Pt> raw;
        for (const auto& r : ds.runs) {
            if (r.epoch < e && r.trajectory.completed()) {
                for (const auto& x : r.trajectory.states) {
                    raw.push_back(pick(x, subset));
                }
            }
        }
        const auto norm = dataset::Normalizer::fit(raw);
        for (std::size_t prev = 0; prev < e; ++prev) {
            const double gap = testsupport::dist(norm.apply(pick(ic.x0, subset)),
                                                 norm.apply(pick(meta.epochs[prev].initial_condition.x0, subset)));
            expect(o, gap >= min_d, "(d) ic_min_distance " + fmt_double(gap));
        }
    }

    // (e)
    const auto again = sampler::run_campaign(cfg, *model);
    expect(o, dataset::to_jsonl(ds) == dataset::to_jsonl(again), "(e) bit-identical JSONL");
    note(o, "(a)-(e) checked over " + std::to_string(ds.runs.size()) + " runs in " +
                std::to_string(meta.epochs.size()) + " epochs, phase-1 budget 14");
    return o;
}

// ---- 6 and 7 ---------------------------------------------------------------

// Phase-1-only campaign with as many runs as `runs`.
dataset::Dataset matched_one_shot(sampler::CampaignConfig cfg, const models::Model& model,
                                  std::size_t runs) {
    const std::size_t d = model.n_controls();
    std::size_t n = 0;
    while (sampler::phase1_design(d, n).points.size() < runs) {
        ++n;
    }
    cfg.n_hss = n;
    cfg.max_epochs = 1;
    sampler::CampaignOptions opts;
    opts.phase2 = false;
    opts.phase3 = false;
    return sampler::run_campaign(cfg, model, opts);
}

struct CoveragePair {
    double adaptive = 0.0;
    double one_shot = 0.0;
    std::size_t runs = 0;
    std::size_t one_shot_runs = 0;
};

CoveragePair coverage_pair(const std::string& file, std::uint64_t seed) {
    auto cfg = load_campaign(file);
    cfg.rng_seed = seed;
    cfg.max_epochs = 1;
    const auto model = config::validate({config::load_config(std::string(ACCEPT_CONFIGS_DIR) + "/" + file)});
    const auto adaptive = sampler::run_campaign(cfg, *model);
    const auto one_shot = matched_one_shot(cfg, *model, adaptive.runs.size());
    const auto subset = resolved_subset(cfg.output_subset, model->n_outputs());
    const auto a = dataset::output_samples(adaptive, subset);
    const auto b = dataset::output_samples(one_shot, subset);
    auto joint = a;
    joint.insert(joint.end(), b.begin(), b.end());
    const auto bounds = dataset::Normalizer::fit(joint);
    return {dataset::coverage(a, 20, bounds), dataset::coverage(b, 20, bounds), adaptive.runs.size(),
            one_shot.runs.size()};
}

Outcome coverage_ab() {
    Outcome o;
    for (const std::string file : {"cstr3x2.toml", "vanderpol.toml"}) {
        std::size_t wins = 0;
        std::string line = file.substr(0, file.find('.')) + ":";
        for (std::uint64_t seed : {1, 2, 3}) {
            const auto c = coverage_pair(file, seed);
            expect(o, c.runs == c.one_shot_runs, "equal budget for " + file);
            if (c.adaptive > c.one_shot) {
                ++wins;
            }
            line += " " + fmt_double(c.adaptive, 3) + ">" + fmt_double(c.one_shot, 3) + "?(" +
                    std::to_string(c.runs) + " runs)";
        }
        expect(o, wins == 3, file + " wins " + std::to_string(wins) + "/3");
        note(o, line);
    }
    return o;
}

// Withheld runs: FAPRBS around random mean inputs away from every training mean.
dataset::Dataset withheld_runs(const models::Model& model, const sampler::CampaignConfig& cfg,
                               const std::vector<const dataset::Dataset*>& training,
                               std::uint32_t seed, std::size_t count) {
    const auto& bounds = cfg.effective_bounds(model);
    std::vector<Pt> taken;
    for (const auto* ds : training) {
        for (const auto& r : ds->runs) {
            taken.push_back(bounds.to_normalized(r.u_bar));
        }
    }
    dataset::Dataset test;
    test.meta.model_name = model.name();
    test.meta.n_states = model.n_states();
    test.meta.n_controls = model.n_controls();
    test.meta.n_outputs = model.n_outputs();
    test.meta.epochs.emplace_back();
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (test.runs.size() < count) {
        Pt u(model.n_controls());
        for (auto& c : u) {
            c = unit(rng);
        }
        const bool fresh = std::all_of(taken.begin(), taken.end(),
                                       [&](const Pt& t) { return testsupport::dist(t, u) > 0.05; });
        if (!fresh) {
            continue;
        }
        taken.push_back(u);
        dataset::RunRecord r;
        r.run_id = test.runs.size();
        r.u_bar = bounds.to_engineering(u);
        r.signal_seed = rng();
        r.signal = signal::generate_faprbs(r.u_bar, cfg.segments, bounds, r.signal_seed);
        r.trajectory = models::simulate(model, model.default_x0(), r.signal, cfg.dt,
                                        cfg.effective_horizon());
        r.trajectory.run_id = r.run_id;
        test.runs.push_back(std::move(r));
    }
    return test;
}

Outcome surrogate_ab() {
    Outcome o;
    const auto model = models::builtin_model("cstr3x2");
    std::size_t wins = 0;
    std::string line;
    for (std::uint64_t seed : {1, 2, 3}) {
        auto cfg = load_campaign("cstr3x2.toml");
        cfg.rng_seed = seed;
        cfg.max_epochs = 1;
        const auto adaptive = sampler::run_campaign(cfg, *model);
        const auto one_shot = matched_one_shot(cfg, *model, adaptive.runs.size());
        expect(o, adaptive.runs.size() == one_shot.runs.size(), "equal-size training sets");
        const auto test = withheld_runs(*model, cfg, {&adaptive, &one_shot},
                                        static_cast<std::uint32_t>(100 + seed), 10);
        surrogate::LagSpec lags;
        lags.control_lags.assign(model->n_controls(), 2);
        const auto total = [](const surrogate::EvalReport& rep) {
            double s = 0.0;
            for (const auto& out : rep.outputs) {
                s += out.mse;
            }
            return s;
        };
        const double a = total(surrogate::evaluate(adaptive, test, lags, {0, 1}));
        const double b = total(surrogate::evaluate(one_shot, test, lags, {0, 1}));
        if (a < b) {
            ++wins;
        }
        line += (line.empty() ? "" : ", ") + fmt_double(a, 3) + "<" + fmt_double(b, 3) + "?";
    }
    expect(o, wins == 3, "adaptive lower MSE in " + std::to_string(wins) + "/3 seeds");
    note(o, "summed one-step MSE " + line);
    return o;
}

// ---- 8 ----------------------------------------------------------------------

Outcome faprbs_suite() {
    Outcome o;
    const auto model = models::builtin_model("cstr3x2");
    const auto& b = model->control_bounds();
    const std::vector<signal::FaprbsSegment> segs{{0.25, 30}, {1.0, 10}};
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t signals = 0;
    for (std::uint64_t s = 0; s < 200; ++s) {
        Pt u(b.channels());
        for (auto& c : u) {
            c = unit(rng);
        }
        if (s < 8) {
            for (std::size_t c = 0; c < u.size(); ++c) {
                u[c] = (s >> c) & 1U ? 1.0 : 0.0; // corners press against the bounds
            }
        }
        const auto mean = b.to_engineering(u);
        const auto sig = signal::generate_faprbs(mean, segs, b, s);
        bool bounded = true;
        bool amplitude = true;
        for (const auto& level : sig.levels) {
            for (std::size_t c = 0; c < level.size(); ++c) {
                bounded &= level[c] >= b.lower[c] && level[c] <= b.upper[c];
                amplitude &= std::abs(level[c] - mean[c]) <= b.faprbs_amplitude[c] * (1.0 + 1e-12);
            }
        }
        expect(o, bounded, "bound safety");
        expect(o, amplitude, "amplitude safety");
        expect(o, sig.total_duration == signal::total_duration(segs) && sig.total_duration == 17.5,
               "duration identity");
        expect(o, sig == signal::generate_faprbs(mean, segs, b, s), "determinism");
        const auto lengths = sig.plateau_lengths();
        bool structure = sig.plateaus() == 40 && lengths.size() == 40;
        for (std::size_t k = 0; structure && k < 40; ++k) {
            structure = lengths[k] == (k < 30 ? 0.25 : 1.0);
        }
        expect(o, structure, "30 holds of 0.25 then 10 holds of 1.0");
        ++signals;
    }
    note(o, std::to_string(signals) + " cstr3x2 signals");
    return o;
}

// ---- 9 ----------------------------------------------------------------------

Outcome complexity_shape() {
    Outcome o;
    for (std::size_t n = 2; n <= 40; ++n) {
        std::vector<dataset::Seed> seeds;
        const auto ys = testsupport::random_points(n, 3, static_cast<std::uint32_t>(n));
        const auto us = testsupport::random_points(n, 2, static_cast<std::uint32_t>(1000 + n));
        for (std::size_t i = 0; i < n; ++i) {
            seeds.push_back({i, ys[i], us[i], 0});
        }
        expect(o, sampler::expansion_candidates(seeds).size() == choose2(n),
               "C(n,2) for n=" + std::to_string(n));
    }

    // Candidate counts recorded by a campaign against its seed counts.
    auto cfg = testsupport::toy_config();
    cfg.max_sims_phase2 = 6;
    const auto model = testsupport::bent_toy();
    const auto ds = sampler::run_campaign(cfg, *model);
    const auto& e0 = ds.meta.epochs.at(0);
    std::size_t seeds = 0;
    for (const auto& r : ds.runs) {
        if (r.epoch == 0 && r.phase == 1 && r.seed) {
            ++seeds;
        }
    }
    std::vector<std::size_t> phase2_seeded;
    for (const auto& r : ds.runs) {
        if (r.epoch == 0 && r.phase == 2) {
            phase2_seeded.push_back(r.seed ? 1 : 0);
        }
    }
    for (std::size_t i = 0; i < e0.phase2_candidate_counts.size(); ++i) {
        expect(o, e0.phase2_candidate_counts[i] == choose2(seeds), "campaign C(n,2)");
        if (i < phase2_seeded.size()) {
            seeds += phase2_seeded[i];
        }
    }
    expect(o, !e0.phase2_candidate_counts.empty(), "campaign phase 2 ran");

    std::vector<double> lx;
    std::vector<double> ly;
    std::string counts;
    for (std::size_t n : {10, 20, 40, 80}) {
        double total = 0.0;
        for (std::uint32_t rep = 0; rep < 5; ++rep) {
            std::vector<dataset::Seed> s;
            const auto ys = testsupport::random_points(n, 2, 9000 + 10 * rep + static_cast<std::uint32_t>(n));
            const auto us = testsupport::random_points(n, 2, 9500 + 10 * rep + static_cast<std::uint32_t>(n));
            for (std::size_t i = 0; i < n; ++i) {
                s.push_back({i, ys[i], us[i], 0});
            }
            const auto vertices = sampler::population_candidates(s).size();
            expect(o, vertices <= 2 * n, "vertex count <= 2n");
            total += static_cast<double>(vertices);
        }
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(total / 5.0));
        counts += (counts.empty() ? "" : "/") + fmt_double(total / 5.0, 4);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    expect(o, slope < 1.3, "vertex growth exponent " + fmt_double(slope));
    note(o, "C(n,2) exact for n=2..40 and " + std::to_string(e0.phase2_candidate_counts.size()) +
                " campaign iterations; vertices " + counts + ", exponent " + fmt_double(slope, 3));
    return o;
}

// ---- 10 ---------------------------------------------------------------------

Outcome rk4_order() {
    Outcome o;
    models::FunctionModel decay(
        "decay", 1, 1, 1, {1.0}, {{-1.0}, {1.0}, {0.5}}, {0.0},
        [](std::span<const double> x, std::span<const double>, double, std::span<double> dx) { dx[0] = -x[0]; },
        [](std::span<const double> x, std::span<const double>, std::span<double> y) { y[0] = x[0]; });
    signal::ControlSignal hold;
    hold.breakpoints = {0.0};
    hold.levels = {{0.0}};
    hold.mean_u = {0.0};
    hold.total_duration = 1.0;
    const auto error = [&](double dt) {
        return std::abs(models::simulate(decay, {1.0}, hold, dt, 1.0).states.back()[0] - std::exp(-1.0));
    };
    std::string ratios;
    for (double dt : {0.2, 0.1, 0.05, 0.025}) {
        const double ratio = error(dt) / error(dt / 2.0);
        expect(o, ratio >= 12.0 && ratio <= 20.0, "ratio at dt=" + fmt_double(dt));
        ratios += (ratios.empty() ? "" : ", ") + fmt_double(ratio, 4);
    }
    note(o, "error ratios " + ratios);
    return o;
}

struct Criterion {
    int id;
    const char* title;
    double limit_seconds;
    std::function<Outcome()> body;
};

} // namespace

int main(int argc, char** argv) {
    // Optional arguments select criteria by number.
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) {
        only.push_back(std::atoi(argv[i]));
    }
    const std::vector<Criterion> criteria{
        {1, "phase-1 run count 2^d + 2d + n_hss", 1.0, eq7_counts},
        {2, "geometry oracle battery", 30.0, geometry_battery},
        {3, "hammersley vs random discrepancy", 5.0, hammersley_discrepancy},
        {4, "mean-distance constants", 10.0, mean_distance},
        {5, "cstr3x2 campaign structure", 120.0, campaign_structure},
        {6, "coverage adaptive vs one-shot", 600.0, coverage_ab},
        {7, "surrogate adaptive vs one-shot", 300.0, surrogate_ab},
        {8, "faprbs suite", 1.0, faprbs_suite},
        {9, "complexity shape", 60.0, complexity_shape},
        {10, "rk4 convergence order", 1.0, rk4_order},
    };
    int failures = 0;
    std::size_t ran = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
            continue;
        }
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.body();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.limit_seconds) {
            out.pass = false;
            out.detail += "; over time limit " + fmt_double(c.limit_seconds) + " s";
        }
        failures += out.pass ? 0 : 1;
        std::printf("%s [%2d] %s (%.2f s): %s\n", out.pass ? "PASS" : "FAIL", c.id, c.title, secs,
                    out.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(ran) - failures, ran);
    return failures == 0 ? 0 : 1;
}
