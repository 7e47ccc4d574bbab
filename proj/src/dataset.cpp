#include "dynsample/dataset.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dynsample::dataset {

using nlohmann::json;

Normalizer Normalizer::fit(const std::vector<Vector>& samples) {
    if (samples.empty()) {
        throw DatasetError("normalizer: no samples");
    }
    Normalizer n;
    n.lower = samples.front();
    n.upper = samples.front();
    for (const auto& s : samples) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            n.lower[j] = std::min(n.lower[j], s[j]);
            n.upper[j] = std::max(n.upper[j], s[j]);
        }
    }
    return n;
}

Vector Normalizer::apply(const Vector& raw) const {
    Vector out(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) {
        const double width = upper[j] > lower[j] ? upper[j] - lower[j] : 1.0;
        out[j] = (raw[j] - lower[j]) / width;
    }
    return out;
}

Vector Normalizer::invert(const Vector& normalized) const {
    Vector out(normalized.size());
    for (std::size_t j = 0; j < normalized.size(); ++j) {
        const double width = upper[j] > lower[j] ? upper[j] - lower[j] : 1.0;
        out[j] = lower[j] + normalized[j] * width;
    }
    return out;
}

void Dataset::check_invariants() const {
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& r = runs[i];
        if (r.run_id != i) {
            throw DatasetError(fmt::format("run ids not dense: position {} holds id {}", i, r.run_id));
        }
        if (r.epoch >= meta.epochs.size()) {
            throw DatasetError(fmt::format("run {} references unknown epoch {}", i, r.epoch));
        }
        if (r.phase < 1 || r.phase > 3) {
            throw DatasetError(fmt::format("run {} has phase {}", i, r.phase));
        }
    }
}

namespace {

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return j.at(key).get<T>();
}

json to_json(const Normalizer& n) { return {{"lower", n.lower}, {"upper", n.upper}}; }

Normalizer normalizer_from_json(const json& j) {
    return {j.at("lower").get<Vector>(), j.at("upper").get<Vector>()};
}

json to_json(const UsedTarget& u) {
    return {{"run_id", u.run_id},
            {"t_star", u.t_star},
            {"t_star_raw", u.t_star_raw},
            {"r_star_at_use", u.r_star_at_use}};
}

UsedTarget used_target_from_json(const json& j) {
    return {j.at("run_id").get<std::size_t>(), j.at("t_star").get<Vector>(),
            j.at("t_star_raw").get<Vector>(), j.at("r_star_at_use").get<double>()};
}

json to_json(const EpochRecord& e) {
    json used = json::array();
    for (const auto& u : e.used_targets) {
        used.push_back(to_json(u));
    }
    json ic = {{"x0", e.initial_condition.x0}, {"source_run", nullptr}, {"source_sample", nullptr}};
    if (e.initial_condition.source_run) {
        ic["source_run"] = *e.initial_condition.source_run;
    }
    if (e.initial_condition.source_sample) {
        ic["source_sample"] = *e.initial_condition.source_sample;
    }
    return {{"epoch", e.epoch},
            {"initial_condition", ic},
            {"output_normalization", to_json(e.output_normalization)},
            {"used_targets", used},
            {"counts",
             {{"phase1_pre_dedup", e.counts.phase1_pre_dedup},
              {"phase1", e.counts.phase1},
              {"phase2", e.counts.phase2},
              {"phase3", e.counts.phase3}}},
            {"phase2_candidate_counts", e.phase2_candidate_counts},
            {"phase2_hull_volumes", e.phase2_hull_volumes},
            {"phase3_vertex_counts", e.phase3_vertex_counts},
            {"phase3_sample_counts", e.phase3_sample_counts},
            {"phase3_mean_radius", e.phase3_mean_radius},
            {"phase2_stop", e.phase2_stop},
            {"phase3_stop", e.phase3_stop}};
}

EpochRecord epoch_from_json(const json& j) {
    EpochRecord e;
    e.epoch = j.at("epoch").get<std::size_t>();
    const auto& ic = j.at("initial_condition");
    e.initial_condition.x0 = ic.at("x0").get<Vector>();
    e.initial_condition.source_run = optional_field<std::size_t>(ic, "source_run");
    e.initial_condition.source_sample = optional_field<std::size_t>(ic, "source_sample");
    e.output_normalization = normalizer_from_json(j.at("output_normalization"));
    for (const auto& u : j.at("used_targets")) {
        e.used_targets.push_back(used_target_from_json(u));
    }
    const auto& c = j.at("counts");
    e.counts.phase1_pre_dedup = c.at("phase1_pre_dedup").get<std::size_t>();
    e.counts.phase1 = c.at("phase1").get<std::size_t>();
    e.counts.phase2 = c.at("phase2").get<std::size_t>();
    e.counts.phase3 = c.at("phase3").get<std::size_t>();
    e.phase2_candidate_counts = j.at("phase2_candidate_counts").get<std::vector<std::size_t>>();
    e.phase2_hull_volumes = j.at("phase2_hull_volumes").get<Vector>();
    e.phase3_vertex_counts = j.at("phase3_vertex_counts").get<std::vector<std::size_t>>();
    e.phase3_sample_counts = j.at("phase3_sample_counts").get<std::vector<std::size_t>>();
    e.phase3_mean_radius = j.at("phase3_mean_radius").get<Vector>();
    e.phase2_stop = j.at("phase2_stop").get<std::string>();
    e.phase3_stop = j.at("phase3_stop").get<std::string>();
    return e;
}

const char* status_name(models::RunStatus s) {
    return s == models::RunStatus::completed ? "completed" : "diverged";
}

models::RunStatus status_from_name(const std::string& s) {
    if (s == "completed") {
        return models::RunStatus::completed;
    }
    if (s == "diverged") {
        return models::RunStatus::diverged;
    }
    throw DatasetError("unknown run status '" + s + "'");
}

} // namespace

json to_json(const Meta& meta) {
    json epochs = json::array();
    for (const auto& e : meta.epochs) {
        epochs.push_back(to_json(e));
    }
    json j = {{"type", "meta"},
              {"schema_version", meta.schema_version},
              {"model", meta.model_name},
              {"rng_seed", meta.rng_seed},
              {"n_states", meta.n_states},
              {"n_controls", meta.n_controls},
              {"n_outputs", meta.n_outputs},
              {"output_subset", meta.output_subset},
              {"state_subset", meta.state_subset},
              {"config", meta.config},
              {"epochs", epochs},
              {"campaign_stop", meta.campaign_stop}};
    if (meta.created_utc) {
        j["created_utc"] = *meta.created_utc;
    }
    return j;
}

Meta meta_from_json(const json& j) {
    if (j.value("type", "") != "meta") {
        throw DatasetError("first line is not a meta record");
    }
    const int version = j.at("schema_version").get<int>();
    if (version != kSchemaVersion) {
        throw DatasetError(fmt::format("unsupported schema_version {} (expected {})", version,
                                       kSchemaVersion));
    }
    Meta m;
    m.schema_version = version;
    m.model_name = j.at("model").get<std::string>();
    m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    m.n_states = j.at("n_states").get<std::size_t>();
    m.n_controls = j.at("n_controls").get<std::size_t>();
    m.n_outputs = j.at("n_outputs").get<std::size_t>();
    m.output_subset = j.at("output_subset").get<std::vector<std::size_t>>();
    m.state_subset = j.at("state_subset").get<std::vector<std::size_t>>();
    m.config = j.at("config");
    for (const auto& e : j.at("epochs")) {
        m.epochs.push_back(epoch_from_json(e));
    }
    m.campaign_stop = j.at("campaign_stop").get<std::string>();
    m.created_utc = optional_field<std::string>(j, "created_utc");
    return m;
}

json to_json(const RunRecord& run) {
    const auto& tr = run.trajectory;
    json traj = {{"dt", tr.dt},
                 {"times", tr.times},
                 {"states", tr.states},
                 {"outputs", tr.outputs},
                 {"controls", tr.controls},
                 {"status", status_name(tr.status)},
                 {"diverged_at", nullptr}};
    if (tr.diverged_at) {
        traj["diverged_at"] = *tr.diverged_at;
    }
    json j = {{"type", "run"},
              {"run_id", run.run_id},
              {"epoch", run.epoch},
              {"phase", run.phase},
              {"u_bar", run.u_bar},
              {"signal_seed", run.signal_seed},
              {"signal",
               {{"breakpoints", run.signal.breakpoints},
                {"levels", run.signal.levels},
                {"mean_u", run.signal.mean_u},
                {"total_duration", run.signal.total_duration}}},
              {"trajectory", traj},
              {"seed", nullptr},
              {"provenance", nullptr}};
    if (run.seed) {
        j["seed"] = {{"run_id", run.seed->run_id},
                     {"y_bar", run.seed->y_bar},
                     {"u_bar", run.seed->u_bar},
                     {"epoch", run.seed->epoch}};
    }
    if (run.provenance) {
        const auto& p = *run.provenance;
        j["provenance"] = {{"parents", p.parents},   {"t_star", p.t_star}, {"score", p.score},
                           {"l_star", p.l_star},     {"r_star", p.r_star},
                           {"voronoi_vertex", nullptr}};
        if (p.voronoi_vertex) {
            j["provenance"]["voronoi_vertex"] = *p.voronoi_vertex;
        }
    }
    return j;
}

RunRecord run_from_json(const json& j) {
    if (j.value("type", "") != "run") {
        throw DatasetError("expected a run record");
    }
    RunRecord r;
    r.run_id = j.at("run_id").get<std::size_t>();
    r.epoch = j.at("epoch").get<std::size_t>();
    r.phase = j.at("phase").get<int>();
    r.u_bar = j.at("u_bar").get<Vector>();
    r.signal_seed = j.at("signal_seed").get<std::uint64_t>();
    const auto& s = j.at("signal");
    r.signal.breakpoints = s.at("breakpoints").get<Vector>();
    r.signal.levels = s.at("levels").get<std::vector<Vector>>();
    r.signal.mean_u = s.at("mean_u").get<Vector>();
    r.signal.total_duration = s.at("total_duration").get<double>();
    const auto& t = j.at("trajectory");
    r.trajectory.run_id = r.run_id;
    r.trajectory.dt = t.at("dt").get<double>();
    r.trajectory.times = t.at("times").get<Vector>();
    r.trajectory.states = t.at("states").get<std::vector<Vector>>();
    r.trajectory.outputs = t.at("outputs").get<std::vector<Vector>>();
    r.trajectory.controls = t.at("controls").get<std::vector<Vector>>();
    r.trajectory.status = status_from_name(t.at("status").get<std::string>());
    r.trajectory.diverged_at = optional_field<double>(t, "diverged_at");
    if (j.contains("seed") && !j.at("seed").is_null()) {
        const auto& sd = j.at("seed");
        r.seed = Seed{sd.at("run_id").get<std::size_t>(), sd.at("y_bar").get<Vector>(),
                      sd.at("u_bar").get<Vector>(), sd.at("epoch").get<std::size_t>()};
    }
    if (j.contains("provenance") && !j.at("provenance").is_null()) {
        const auto& p = j.at("provenance");
        Provenance prov;
        prov.parents = p.at("parents").get<std::vector<std::size_t>>();
        prov.t_star = p.at("t_star").get<Vector>();
        prov.score = p.at("score").get<double>();
        prov.l_star = p.at("l_star").get<double>();
        prov.r_star = p.at("r_star").get<double>();
        prov.voronoi_vertex = optional_field<Vector>(p, "voronoi_vertex");
        r.provenance = std::move(prov);
    }
    return r;
}

std::string to_jsonl(const Dataset& dataset) {
    std::string out = to_json(dataset.meta).dump();
    out += '\n';
    for (const auto& run : dataset.runs) {
        out += to_json(run).dump();
        out += '\n';
    }
    return out;
}

void export_jsonl(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw DatasetError("cannot open '" + path.string() + "' for writing");
    }
    os << to_jsonl(dataset);
    if (!os) {
        throw DatasetError("write to '" + path.string() + "' failed");
    }
}

Dataset load_jsonl(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw DatasetError("cannot open '" + path.string() + "'");
    }
    Dataset d;
    std::string line;
    std::size_t line_no = 0;
    bool have_meta = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
            if (!have_meta) {
                d.meta = meta_from_json(j);
                have_meta = true;
            } else {
                d.runs.push_back(run_from_json(j));
            }
        } catch (const json::exception& e) {
            throw DatasetError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
    if (!have_meta) {
        throw DatasetError("'" + path.string() + "' has no meta line");
    }
    return d;
}

void export_csv(const Dataset& dataset, const std::filesystem::path& path) {
    if (dataset.runs.empty()) {
        throw DatasetError("export_csv: empty dataset");
    }
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw DatasetError("cannot open '" + path.string() + "' for writing");
    }
    const auto& m = dataset.meta;
    std::string header = "run_id,epoch,phase,t";
    for (std::size_t i = 1; i <= m.n_controls; ++i) header += fmt::format(",u_{}", i);
    for (std::size_t i = 1; i <= m.n_states; ++i) header += fmt::format(",x_{}", i);
    for (std::size_t i = 1; i <= m.n_outputs; ++i) header += fmt::format(",y_{}", i);
    os << header << "\r\n";

    std::string row;
    for (const auto& run : dataset.runs) {
        const auto& tr = run.trajectory;
        for (std::size_t k = 0; k < tr.samples(); ++k) {
            row = fmt::format("{},{},{},{:.17g}", run.run_id, run.epoch, run.phase, tr.times[k]);
            for (double v : tr.controls[k]) row += fmt::format(",{:.17g}", v);
            for (double v : tr.states[k]) row += fmt::format(",{:.17g}", v);
            for (double v : tr.outputs[k]) row += fmt::format(",{:.17g}", v);
            os << row << "\r\n";
        }
    }
    if (!os) {
        throw DatasetError("write to '" + path.string() + "' failed");
    }
}

std::vector<Vector> output_samples(const Dataset& dataset, const std::vector<std::size_t>& subset) {
    std::vector<Vector> out;
    for (const auto& run : dataset.runs) {
        for (const auto& y : run.trajectory.outputs) {
            Vector s(subset.size());
            for (std::size_t j = 0; j < subset.size(); ++j) {
                s[j] = y.at(subset[j]);
            }
            out.push_back(std::move(s));
        }
    }
    return out;
}

double coverage(const std::vector<Vector>& samples, std::size_t bins, const Normalizer& bounds) {
    if (bins < 2) {
        throw DatasetError("coverage: bins must be at least 2");
    }
    if (samples.empty()) {
        throw DatasetError("coverage: no output samples");
    }
    const std::size_t d = bounds.dim();
    std::set<std::vector<std::size_t>> occupied;
    std::vector<std::size_t> cell(d);
    for (const auto& s : samples) {
        const Vector n = bounds.apply(s);
        for (std::size_t j = 0; j < d; ++j) {
            const double scaled = std::floor(n[j] * static_cast<double>(bins));
            cell[j] = static_cast<std::size_t>(std::clamp(scaled, 0.0, static_cast<double>(bins - 1)));
        }
        occupied.insert(cell);
    }
    return static_cast<double>(occupied.size()) / std::pow(static_cast<double>(bins), static_cast<double>(d));
}

double coverage(const Dataset& dataset, std::size_t bins, const std::optional<Normalizer>& bounds) {
    auto subset = dataset.meta.output_subset;
    if (subset.empty()) {
        for (std::size_t i = 0; i < dataset.meta.n_outputs; ++i) subset.push_back(i);
    }
    const auto samples = output_samples(dataset, subset);
    if (samples.empty()) {
        throw DatasetError("coverage: no output samples");
    }
    return coverage(samples, bins, bounds ? *bounds : Normalizer::fit(samples));
}

} // namespace dynsample::dataset
