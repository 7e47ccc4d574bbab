// dynsample: run adaptive sampling campaigns, inspect and plot the resulting
// datasets, and compare them with a nearest-neighbor surrogate.
//
//   dynsample run --config campaign.toml [--out data.jsonl] [--rng-seed N] [--jobs N]
//   dynsample inspect data.jsonl
//   dynsample plot data.jsonl --x 0 --y 1 --out scatter.svg
//   dynsample eval train.jsonl --test test.jsonl [--lags-n 2] [--lags-o 2,2,2] [--k 1]
//
// Exit codes: 0 success, 1 internal error, 2 configuration or input error,
// 3 epoch failure. DYNSAMPLE_LOG={error,info,debug} sets the log level.

#include "dynsample/config.hpp"
#include "dynsample/dataset.hpp"
#include "dynsample/plot.hpp"
#include "dynsample/sampler.hpp"
#include "dynsample/surrogate.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <optional>
#include <string>

namespace {

using namespace dynsample;

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitEpochFailure = 3;

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("dynsample");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("DYNSAMPLE_LOG")) {
        const std::string level = env;
        if (level == "error") {
            spdlog::set_level(spdlog::level::err);
        } else if (level == "info") {
            spdlog::set_level(spdlog::level::info);
        } else if (level == "debug") {
            spdlog::set_level(spdlog::level::debug);
        } else {
            spdlog::warn("ignoring unknown DYNSAMPLE_LOG value '{}'", level);
        }
    }
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void print_epochs(const dataset::Dataset& ds) {
    fmt::print("{:>5} {:>10} {:>7} {:>7} {:>7} {:>7}  {}\n", "epoch", "p1(eq.7)", "p1", "p2", "p3",
               "total", "stops (phase 2 / phase 3)");
    std::size_t total = 0;
    for (const auto& e : ds.meta.epochs) {
        fmt::print("{:>5} {:>10} {:>7} {:>7} {:>7} {:>7}  {} / {}\n", e.epoch, e.counts.phase1_pre_dedup,
                   e.counts.phase1, e.counts.phase2, e.counts.phase3, e.counts.total(), e.phase2_stop,
                   e.phase3_stop);
        total += e.counts.total();
    }
    fmt::print("runs: {}  campaign stop: {}\n", total, ds.meta.campaign_stop);
}

struct RunArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> rng_seed;
    std::size_t jobs = 1;
    std::string csv;
    bool timestamp = false;
};

int cmd_run(const RunArgs& args) {
    config::ConfigFile cfg = config::load_config(args.config);
    if (args.rng_seed) {
        cfg.campaign.rng_seed = *args.rng_seed;
    }
    if (!args.out.empty()) {
        cfg.dataset_path = args.out;
    }
    if (!args.csv.empty()) {
        cfg.csv_path = args.csv;
    }
    if (!cfg.dataset_path) {
        throw signal::ConfigError("no output path: set [output] dataset or pass --out");
    }
    const auto model = config::validate(cfg);

    sampler::CampaignOptions opt;
    opt.jobs = args.jobs;
    opt.progress = [](const sampler::ProgressEvent& ev) {
        spdlog::info("epoch {} phase {} run {} score {} status {}", ev.epoch, ev.phase, ev.run_id,
                     ev.score ? fmt::format("{:.6g}", *ev.score) : std::string("-"),
                     ev.status == models::RunStatus::completed ? "completed" : "diverged");
    };
    opt.log = [](const std::string& msg) { spdlog::debug("{}", msg); };

    auto result = sampler::run_campaign_detailed(cfg.campaign, *model, opt);
    if (args.timestamp) {
        result.dataset.meta.created_utc = utc_now();
    }
    dataset::export_jsonl(result.dataset, *cfg.dataset_path);
    if (cfg.csv_path) {
        dataset::export_csv(result.dataset, *cfg.csv_path);
    }

    print_epochs(result.dataset);
    const auto& t = result.timing;
    auto share = [&](double s) { return t.total_seconds > 0.0 ? 100.0 * s / t.total_seconds : 0.0; };
    const double other = std::max(0.0, t.total_seconds - t.simulation_seconds - t.signal_seconds -
                                           t.target_seconds - t.matrix_seconds);
    fmt::print("time: total {:.3f} s\n", t.total_seconds);
    fmt::print("  simulation     {:9.3f} s {:5.1f}%\n", t.simulation_seconds, share(t.simulation_seconds));
    fmt::print("  signals        {:9.3f} s {:5.1f}%\n", t.signal_seconds, share(t.signal_seconds));
    fmt::print("  targets        {:9.3f} s {:5.1f}%\n", t.target_seconds, share(t.target_seconds));
    fmt::print("  ball counting  {:9.3f} s {:5.1f}%\n", t.matrix_seconds, share(t.matrix_seconds));
    fmt::print("  other          {:9.3f} s {:5.1f}%\n", other, share(other));
    fmt::print("dataset: {}\n", cfg.dataset_path->string());
    return 0;
}

int cmd_inspect(const std::string& path) {
    const auto ds = dataset::load_jsonl(path);
    const auto& m = ds.meta;
    fmt::print("schema_version: {}\nmodel: {}\nrng_seed: {}\n", m.schema_version, m.model_name, m.rng_seed);
    fmt::print("states: {}  controls: {}  outputs: {}\n", m.n_states, m.n_controls, m.n_outputs);
    fmt::print("output_subset: [{}]  state_subset: [{}]\n", fmt::join(m.output_subset, ", "),
               fmt::join(m.state_subset, ", "));
    if (m.created_utc) {
        fmt::print("created: {}\n", *m.created_utc);
    }
    std::size_t diverged = 0;
    for (const auto& r : ds.runs) {
        diverged += r.trajectory.completed() ? 0 : 1;
    }
    print_epochs(ds);
    fmt::print("diverged runs: {}\n", diverged);
    return 0;
}

int cmd_plot(const std::string& path, std::size_t x, std::size_t y, const std::string& out) {
    const auto ds = dataset::load_jsonl(path);
    plot::MarkerCounts counts;
    const std::string svg = plot::scatter_svg(ds, x, y, &counts);
    std::ofstream os(out, std::ios::binary | std::ios::trunc);
    if (!os || !(os << svg)) {
        throw dataset::DatasetError("cannot write '" + out + "'");
    }
    fmt::print("{}: {} samples, {} seeds, {} targets\n", out, counts.samples, counts.seeds, counts.targets);
    return 0;
}

struct EvalArgs {
    std::string train;
    std::string test;
    std::size_t n_lags = 2;
    std::vector<std::size_t> o_lags;
    std::size_t k = 1;
    std::vector<std::size_t> outputs;
    std::string report;
};

int cmd_eval(const EvalArgs& args) {
    const auto train = dataset::load_jsonl(args.train);
    const auto test = dataset::load_jsonl(args.test);
    surrogate::LagSpec lags;
    lags.output_lags = args.n_lags;
    lags.k_neighbors = args.k;
    lags.control_lags = args.o_lags;
    if (lags.control_lags.empty()) {
        lags.control_lags.assign(train.meta.n_controls, 2);
    } else if (lags.control_lags.size() == 1 && train.meta.n_controls > 1) {
        lags.control_lags.assign(train.meta.n_controls, lags.control_lags.front());
    }
    std::vector<std::size_t> outputs = args.outputs;
    if (outputs.empty()) {
        for (std::size_t i = 0; i < train.meta.n_outputs; ++i) outputs.push_back(i);
    }
    const auto report = surrogate::evaluate(train, test, lags, outputs);
    auto j = report.to_json();
    j["train"] = args.train;
    j["test"] = args.test;
    for (const auto& o : report.outputs) {
        fmt::print("output {}: mse {:.6e} ({} train / {} test examples)\n", o.output_index, o.mse,
                   o.train_examples, o.test_examples);
    }
    if (!args.report.empty()) {
        std::ofstream os(args.report, std::ios::trunc);
        if (!os || !(os << j.dump(2) << "\n")) {
            throw dataset::DatasetError("cannot write '" + args.report + "'");
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Adaptive sampling campaigns for dynamic surrogate-model datasets"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Run a campaign and write its JSONL dataset");
    run_cmd->add_option("--config", run.config, "Campaign TOML file")->required();
    run_cmd->add_option("--out", run.out, "Dataset path (overrides [output] dataset)");
    run_cmd->add_option("--csv", run.csv, "Also export a flat CSV table");
    run_cmd->add_option("--rng-seed", run.rng_seed, "Override rng_seed");
    run_cmd->add_option("--jobs", run.jobs, "Parallel phase-1 simulations")
        ->check(CLI::Range(std::size_t{1}, std::size_t{256}));
    run_cmd->add_flag("--timestamp", run.timestamp, "Record the creation time in the dataset");

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print dataset metadata and phase counts");
    inspect_cmd->add_option("dataset", inspect_path)->required();

    std::string plot_path;
    std::string plot_out = "scatter.svg";
    std::size_t plot_x = 0;
    std::size_t plot_y = 1;
    auto* plot_cmd = app.add_subcommand("plot", "Write an SVG scatter of the output space");
    plot_cmd->add_option("dataset", plot_path)->required();
    plot_cmd->add_option("--x", plot_x, "Output index on the horizontal axis");
    plot_cmd->add_option("--y", plot_y, "Output index on the vertical axis");
    plot_cmd->add_option("--out", plot_out, "SVG path");

    EvalArgs eval;
    auto* eval_cmd = app.add_subcommand("eval", "One-step surrogate error on withheld trajectories");
    eval_cmd->add_option("dataset", eval.train, "Training dataset")->required();
    eval_cmd->add_option("--test", eval.test, "Test dataset")->required();
    eval_cmd->add_option("--lags-n", eval.n_lags, "Output lag count N");
    eval_cmd->add_option("--lags-o", eval.o_lags, "Control lag count per channel (one value applies to all)")
        ->delimiter(',');
    eval_cmd->add_option("--k", eval.k, "Number of neighbors");
    eval_cmd->add_option("--outputs", eval.outputs, "Output indices to evaluate (default all)")->delimiter(',');
    eval_cmd->add_option("--out", eval.report, "Evaluation report JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*inspect_cmd) return cmd_inspect(inspect_path);
        if (*plot_cmd) return cmd_plot(plot_path, plot_x, plot_y, plot_out);
        if (*eval_cmd) return cmd_eval(eval);
    } catch (const sampler::EpochFailure& e) {
        spdlog::error("{}", e.what());
        return kExitEpochFailure;
    } catch (const signal::ConfigError& e) {
        spdlog::error("config error: {}", e.what());
        return kExitConfig;
    } catch (const dataset::DatasetError& e) {
        spdlog::error("{}", e.what());
        return kExitConfig;
    } catch (const surrogate::SurrogateError& e) {
        spdlog::error("{}", e.what());
        return kExitConfig;
    } catch (const std::out_of_range& e) {
        spdlog::error("{}", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return kExitInternal;
    }
    return kExitInternal;
}
