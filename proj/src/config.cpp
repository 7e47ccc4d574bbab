#include "dynsample/config.hpp"

#include <fmt/format.h>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace dynsample::config {

using signal::ConfigError;

namespace {

void reject_unknown(const toml::table& tbl, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto&& [key, node] : tbl) {
        if (allowed.count(std::string(key.str())) == 0) {
            throw ConfigError(fmt::format("{}: unknown key '{}'", where, key.str()));
        }
    }
}

double get_double(const toml::node& node, const std::string& key) {
    if (auto v = node.value_exact<double>()) {
        return *v;
    }
    if (auto v = node.value_exact<std::int64_t>()) {
        return static_cast<double>(*v);
    }
    throw ConfigError(fmt::format("'{}' must be a number", key));
}

std::size_t get_count(const toml::node& node, const std::string& key) {
    auto v = node.value_exact<std::int64_t>();
    if (!v || *v < 0) {
        throw ConfigError(fmt::format("'{}' must be a nonnegative integer", key));
    }
    return static_cast<std::size_t>(*v);
}

std::vector<double> get_doubles(const toml::node& node, const std::string& key) {
    const auto* arr = node.as_array();
    if (arr == nullptr) {
        throw ConfigError(fmt::format("'{}' must be an array of numbers", key));
    }
    std::vector<double> out;
    for (const auto& el : *arr) {
        out.push_back(get_double(el, key));
    }
    return out;
}

std::vector<std::size_t> get_indices(const toml::node& node, const std::string& key) {
    const auto* arr = node.as_array();
    if (arr == nullptr) {
        throw ConfigError(fmt::format("'{}' must be an array of indices", key));
    }
    std::vector<std::size_t> out;
    for (const auto& el : *arr) {
        out.push_back(get_count(el, key));
    }
    return out;
}

std::string get_string(const toml::node& node, const std::string& key) {
    auto v = node.value_exact<std::string>();
    if (!v) {
        throw ConfigError(fmt::format("'{}' must be a string", key));
    }
    return *v;
}

const toml::table* get_table(const toml::table& root, const std::string& key) {
    const auto* node = root.get(key);
    if (node == nullptr) {
        return nullptr;
    }
    const auto* t = node->as_table();
    if (t == nullptr) {
        throw ConfigError(fmt::format("'{}' must be a table", key));
    }
    return t;
}

void read_faprbs(const toml::table& t, sampler::CampaignConfig& c) {
    reject_unknown(t, {"segments"}, "[faprbs]");
    const auto* segs = t.get("segments");
    if (segs == nullptr || segs->as_array() == nullptr) {
        throw ConfigError("[faprbs]: 'segments' must be an array of { hold, n } tables");
    }
    c.segments.clear();
    for (const auto& el : *segs->as_array()) {
        const auto* seg = el.as_table();
        if (seg == nullptr) {
            throw ConfigError("[faprbs]: each segment must be a { hold, n } table");
        }
        reject_unknown(*seg, {"hold", "n"}, "[faprbs] segment");
        const auto* hold = seg->get("hold");
        const auto* n = seg->get("n");
        if (hold == nullptr || n == nullptr) {
            throw ConfigError("[faprbs] segment: 'hold' and 'n' are required");
        }
        c.segments.push_back({get_double(*hold, "faprbs.segments.hold"), get_count(*n, "faprbs.segments.n")});
    }
}

void read_controls(const toml::table& t, sampler::CampaignConfig& c) {
    reject_unknown(t, {"lower", "upper", "amplitude"}, "[controls]");
    const auto* lo = t.get("lower");
    const auto* hi = t.get("upper");
    const auto* amp = t.get("amplitude");
    if (lo == nullptr || hi == nullptr || amp == nullptr) {
        throw ConfigError("[controls]: 'lower', 'upper' and 'amplitude' are all required");
    }
    c.bounds = signal::ControlBounds{get_doubles(*lo, "controls.lower"),
                                     get_doubles(*hi, "controls.upper"),
                                     get_doubles(*amp, "controls.amplitude")};
}

void read_sampling(const toml::table& t, sampler::CampaignConfig& c) {
    reject_unknown(t,
                   {"n_hss", "max_sims_phase2", "score_threshold_phase2", "max_sims_phase3", "kappa",
                    "radius_plateau_tol", "radius_plateau_iters", "max_epochs", "ic_min_distance",
                    "output_subset", "state_subset", "seed_weighting", "discount_gamma",
                    "divergence_limit", "min_completed_fraction"},
                   "[sampling]");
    for (auto&& [k, node] : t) {
        const std::string key(k.str());
        const std::string full = "sampling." + key;
        if (key == "n_hss") c.n_hss = get_count(node, full);
        else if (key == "max_sims_phase2") c.max_sims_phase2 = get_count(node, full);
        else if (key == "score_threshold_phase2") c.score_threshold_phase2 = get_double(node, full);
        else if (key == "max_sims_phase3") c.max_sims_phase3 = get_count(node, full);
        else if (key == "kappa") c.kappa = get_count(node, full);
        else if (key == "radius_plateau_tol") c.radius_plateau_tol = get_double(node, full);
        else if (key == "radius_plateau_iters") c.radius_plateau_iters = get_count(node, full);
        else if (key == "max_epochs") c.max_epochs = get_count(node, full);
        else if (key == "ic_min_distance") c.ic_min_distance = get_double(node, full);
        else if (key == "output_subset") c.output_subset = get_indices(node, full);
        else if (key == "state_subset") c.state_subset = get_indices(node, full);
        else if (key == "discount_gamma") c.seed_weighting.gamma = get_double(node, full);
        else if (key == "divergence_limit") c.divergence_limit = get_double(node, full);
        else if (key == "min_completed_fraction") c.min_completed_fraction = get_double(node, full);
        else if (key == "seed_weighting") {
            const auto kind = get_string(node, full);
            if (kind == "uniform") {
                c.seed_weighting.kind = sampler::SeedWeighting::Kind::uniform;
            } else if (kind == "discount") {
                c.seed_weighting.kind = sampler::SeedWeighting::Kind::discount;
            } else {
                throw ConfigError(fmt::format("'{}' must be \"uniform\" or \"discount\"", full));
            }
        }
    }
}

} // namespace

ConfigFile parse_config(std::string_view text, std::string_view source) {
    toml::table root;
    try {
        root = toml::parse(text, source);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e;
        throw ConfigError("config syntax error: " + msg.str());
    }
    reject_unknown(root,
                   {"model", "rng_seed", "dt", "horizon", "faprbs", "controls", "sampling", "output"},
                   "config");
    ConfigFile cfg;
    auto& c = cfg.campaign;
    if (const auto* n = root.get("model")) cfg.model = get_string(*n, "model");
    if (const auto* n = root.get("rng_seed")) c.rng_seed = get_count(*n, "rng_seed");
    if (const auto* n = root.get("dt")) c.dt = get_double(*n, "dt");
    if (const auto* n = root.get("horizon")) c.horizon = get_double(*n, "horizon");

    if (const auto* t = get_table(root, "faprbs")) {
        read_faprbs(*t, c);
    } else {
        throw ConfigError("config: missing [faprbs] table");
    }
    if (const auto* t = get_table(root, "controls")) {
        read_controls(*t, c);
    }
    if (const auto* t = get_table(root, "sampling")) {
        read_sampling(*t, c);
    }
    if (const auto* t = get_table(root, "output")) {
        reject_unknown(*t, {"dataset", "csv"}, "[output]");
        if (const auto* n = t->get("dataset")) cfg.dataset_path = get_string(*n, "output.dataset");
        if (const auto* n = t->get("csv")) cfg.csv_path = get_string(*n, "output.csv");
    }
    return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot read config '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str(), path.string());
}

std::shared_ptr<const models::Model> validate(const ConfigFile& config) {
    std::shared_ptr<const models::Model> model;
    try {
        model = models::builtin_model(config.model);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    config.campaign.validate(*model);
    return model;
}

} // namespace dynsample::config
