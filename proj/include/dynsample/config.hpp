#pragma once

// Campaign configuration files (TOML). Keys:
//
//   model = "cstr3x2"              rng_seed = 1      dt = 0.05     horizon = 0 (full signal)
//   [faprbs]    segments = [{ hold = 0.25, n = 30 }, { hold = 1.0, n = 10 }]
//   [controls]  lower = [...]  upper = [...]  amplitude = [...]          (optional override)
//   [sampling]  n_hss, max_sims_phase2, score_threshold_phase2, max_sims_phase3, kappa,
//               radius_plateau_tol, radius_plateau_iters, max_epochs, ic_min_distance,
//               output_subset, state_subset, seed_weighting = "uniform" | "discount",
//               discount_gamma, divergence_limit, min_completed_fraction
//   [output]    dataset = "campaign.jsonl"  csv = "campaign.csv"
//
// Unknown keys are rejected.

#include "dynsample/models.hpp"
#include "dynsample/sampler.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace dynsample::config {

struct ConfigFile {
    std::string model = "cstr3x2";
    sampler::CampaignConfig campaign;
    std::optional<std::filesystem::path> dataset_path;
    std::optional<std::filesystem::path> csv_path;
};

/// Throws signal::ConfigError with the offending key in the message.
ConfigFile parse_config(std::string_view text, std::string_view source = "<config>");
ConfigFile load_config(const std::filesystem::path& path);

/// Resolves the model and runs every precondition check of the campaign.
std::shared_ptr<const models::Model> validate(const ConfigFile& config);

} // namespace dynsample::config
