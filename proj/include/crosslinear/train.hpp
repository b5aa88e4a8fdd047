#pragma once

#include "crosslinear/data.hpp"
#include "crosslinear/model.hpp"

namespace crosslinear {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Standard Adam with bias correction.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    void init(std::span<const ParamView> params);
};

/// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), reading gradients
/// from the views' grad buffers.
void adam_step(std::span<const ParamView> params, AdamState& state);

enum class LrSchedule { Constant, HalveEachEpoch };

struct TrainConfig {
    double lr = 1e-3;
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    LrSchedule lr_schedule = LrSchedule::HalveEachEpoch;
    std::uint64_t seed = 0;
    bool shuffle_train = true;
};

struct TrainReport {
    std::vector<double> train_loss;
    std::vector<double> val_mse;
    std::vector<double> val_mae;
    std::vector<double> epoch_seconds;
    std::size_t best_epoch = 0;
    double test_mse = 0.0;
    double test_mae = 0.0;
    std::size_t param_count = 0;
};

/// Per-window prediction without gradient recording.
Tensor predict(const WindowSample& w, CrossLinearParams& params, const ModelConfig& config);

/// Metrics over a window set; an optional mask is applied to each
/// window's lookback before the forward pass.
std::pair<double, double> evaluate(CrossLinearParams& params, const ModelConfig& config,
                                   const std::vector<WindowSample>& windows,
                                   const MaskSpec* mask = nullptr);

/// Seeded shuffled mini-batches, L2 loss, val MSE
/// checkpointing each epoch, test metrics from the best snapshot.
std::pair<CrossLinearParams, TrainReport> train(const ModelConfig& model_config,
                                                const TrainConfig& train_config,
                                                const std::vector<WindowSample>& train_windows,
                                                const std::vector<WindowSample>& val_windows,
                                                const std::vector<WindowSample>& test_windows);

void save_checkpoint(CrossLinearParams& params, const ModelConfig& config,
                     const std::string& path,
                     const std::vector<std::string>* var_names = nullptr);
std::pair<CrossLinearParams, ModelConfig> load_checkpoint(const std::string& path);

/// Deep copy (snapshots for best-val selection).
CrossLinearParams clone_params(CrossLinearParams& params, const ModelConfig& config);

} // namespace crosslinear
