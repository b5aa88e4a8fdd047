#pragma once

#include "crosslinear/serde.hpp"

#include <iosfwd>
#include <optional>

namespace crosslinear {

/// One experiment: a dataset (CSV or synthetic), split, model and
/// training settings, optional mask grid, output location.
struct RunConfig {
    std::optional<std::string> csv_path;
    std::optional<SynthSpec> synthetic;
    std::optional<std::size_t> endo_index; // overrides the last-column default
    SplitSpec split;
    ModelConfig model;
    TrainConfig train;
    std::vector<MaskSpec> masks;
    std::string out_dir = ".";
    bool raw_units = false;
    bool dataset_zscore = true;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig run_config_from_file(const std::string& path);

/// Dataset after z-scoring plus the per-split window sets.
struct PreparedData {
    SeriesFrame frame; // z-scored (unless disabled)
    ZScoreStats stats;
    std::vector<std::string> var_names;
    std::vector<WindowSample> train_windows;
    std::vector<WindowSample> val_windows;
    std::vector<WindowSample> test_windows;
};

/// Loads/generates the series, resolves n_vars/endo_index into the
/// model config, z-scores on train statistics and cuts windows.
PreparedData prepare_data(const RunConfig& config, ModelConfig& model);

/// Full train pipeline; writes result.json and checkpoint.json under
/// out_dir when write_outputs is set. Returns the ResultDoc.
nlohmann::json run_train(const RunConfig& config, bool write_outputs = true);

/// Trains all four embedding variants on identical data and seeds.
nlohmann::json run_ablate(const RunConfig& config, bool write_outputs = true);

/// Trains once unmasked, then evaluates the 8-cell
/// {zero, gaussian} x {endo, exo} x {50%, 100%} grid plus the no-mask row.
nlohmann::json run_mask_study(const RunConfig& config, bool write_outputs = true);

/// Finite-difference check of every parameter group on a random window.
/// Prints one line per group; returns true when all groups pass the
/// 1e-4 relative-error bar.
bool run_gradcheck(const ModelConfig& model, std::ostream& out,
                   const std::vector<std::uint64_t>& seeds = {0, 1, 2});

/// Variate-dependency matrix of a checkpoint as CSV.
void export_weights(const std::string& checkpoint_path, const std::string& csv_path);

void run_synth(const SynthSpec& spec, const std::string& csv_path);

} // namespace crosslinear
