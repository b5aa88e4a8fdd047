#include "crosslinear/run.hpp"
#include "crosslinear/train.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

crosslinear::RunConfig load_run_config(const std::string& path, std::uint64_t* seed_override,
                                       bool raw_units, const std::string& out_dir) {
    auto config = crosslinear::run_config_from_file(path);
    if (seed_override != nullptr) {
        config.model.seed = *seed_override;
        config.train.seed = *seed_override;
        if (config.synthetic) config.synthetic->seed = *seed_override;
    }
    if (raw_units) config.raw_units = true;
    if (!out_dir.empty()) config.out_dir = out_dir;
    return config;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CrossLinear forecaster with exogenous variables"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint_path, csv_out;
    bool raw_units = false;
    std::uint64_t seed = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* cmd, bool needs_config = true) {
        if (needs_config) {
            cmd->add_option("--config", config_path, "Run config (JSON)")->required();
        }
        cmd->add_option("--out", out_dir, "Output directory");
        cmd->add_flag("--raw-units", raw_units, "Also report metrics in raw units");
        cmd->add_option("--seed", seed, "Override every seed in the config")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* cmd_train = app.add_subcommand("train", "Train and evaluate one model");
    add_common(cmd_train);
    auto* cmd_ablate = app.add_subcommand("ablate", "Train all four embedding variants");
    add_common(cmd_ablate);
    auto* cmd_mask = app.add_subcommand("mask-study", "Missing-value robustness grid");
    add_common(cmd_mask);
    auto* cmd_gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
    add_common(cmd_gradcheck);
    auto* cmd_export = app.add_subcommand("export-weights", "Variate-dependency matrix as CSV");
    cmd_export->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    cmd_export->add_option("--out", csv_out, "Output CSV path")->required();
    auto* cmd_synth = app.add_subcommand("synth", "Generate a synthetic exogenous-driven CSV");
    cmd_synth->add_option("--config", config_path, "Generator spec (JSON)")->required();
    cmd_synth->add_option("--out", csv_out, "Output CSV path")->required();
    cmd_synth->add_option("--seed", seed, "Override the generator seed")
        ->each([&](const std::string&) { seed_set = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        std::uint64_t* seed_ptr = seed_set ? &seed : nullptr;
        if (cmd_train->parsed()) {
            crosslinear::run_train(load_run_config(config_path, seed_ptr, raw_units, out_dir));
        } else if (cmd_ablate->parsed()) {
            crosslinear::run_ablate(load_run_config(config_path, seed_ptr, raw_units, out_dir));
        } else if (cmd_mask->parsed()) {
            crosslinear::run_mask_study(load_run_config(config_path, seed_ptr, raw_units, out_dir));
        } else if (cmd_gradcheck->parsed()) {
            // Accepts either a full run config or a bare model config.
            std::ifstream in(config_path);
            if (!in) throw crosslinear::ConfigError("cannot open config " + config_path);
            nlohmann::json j;
            in >> j;
            crosslinear::ModelConfig model =
                j.contains("model")
                    ? crosslinear::model_config_from_json(j["model"], "config.model")
                    : crosslinear::model_config_from_json(j, "config");
            std::vector<std::uint64_t> seeds = {0, 1, 2};
            if (seed_set) seeds = {seed};
            if (!crosslinear::run_gradcheck(model, std::cout, seeds)) {
                std::cerr << "gradcheck: at least one parameter group exceeded 1e-4\n";
                return 1;
            }
        } else if (cmd_export->parsed()) {
            crosslinear::export_weights(checkpoint_path, csv_out);
        } else if (cmd_synth->parsed()) {
            std::ifstream in(config_path);
            if (!in) throw crosslinear::ConfigError("cannot open config " + config_path);
            nlohmann::json j;
            in >> j;
            auto spec = crosslinear::synth_spec_from_json(j, "config");
            if (seed_set) spec.seed = seed;
            crosslinear::run_synth(spec, csv_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
