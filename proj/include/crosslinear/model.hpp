#pragma once

#include "crosslinear/layers.hpp"

#include <cstdint>

namespace crosslinear {

enum class ForecastMode { ManyToOne, ManyToMany };
enum class PosEmbMode { LearnableSinusoidalInit, FixedSinusoidal };

struct ModelConfig {
    std::size_t lookback = 96;   // T
    std::size_t horizon = 96;    // S
    std::size_t patch_len = 16;  // p
    std::size_t hidden_dim = 32; // d
    std::size_t n_vars = 1;      // N
    std::size_t endo_index = 0;
    EmbedVariant variant = EmbedVariant::Sum;
    ForecastMode mode = ForecastMode::ManyToOne;
    std::size_t kernel_size = 3;
    double alpha_init = 0.9;
    double beta_init = 0.9;
    PosEmbMode pe_mode = PosEmbMode::LearnableSinusoidalInit;
    double eps = 1e-5;
    std::uint64_t seed = 0;

    /// Embedded sequence length fed to patchify (2T for Concat).
    std::size_t embed_len() const {
        return variant == EmbedVariant::Concat ? 2 * lookback : lookback;
    }
    std::size_t n_patches() const { return (embed_len() + patch_len - 1) / patch_len; }
    /// Conv output channels: one per variable in many-to-many mode.
    std::size_t conv_out() const { return mode == ForecastMode::ManyToMany ? n_vars : 1; }

    void validate() const;
};

struct CrossLinearParams {
    CrossCorrParams cross;
    PatchHeadParams patch_head;

    std::vector<ParamView> views();
    std::size_t param_count();
};

struct ForecastOutput {
    Tensor pred; // 1 x S or N x S, de-normalized
    bool denormalized = true;
};

/// Seeded initialization: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for
/// weights, zero bias, sinusoidal positional embedding, alpha/beta from
/// the config.
CrossLinearParams init_params(const ModelConfig& config);

ForecastOutput forward_m2o(Graph& g, const Tensor& endo, const Tensor& exo,
                           CrossLinearParams& params, const ModelConfig& config);

ForecastOutput forward_m2m(Graph& g, const Tensor& x, CrossLinearParams& params,
                           const ModelConfig& config);

Scalar loss_m2o(Graph& g, const Tensor& pred, const Tensor& target);
Scalar loss_m2m(Graph& g, const Tensor& pred, const Tensor& target);

/// Dataset-level metrics over all windows and steps.
double metric_mse(const std::vector<Tensor>& preds, const std::vector<Tensor>& targets);
double metric_mae(const std::vector<Tensor>& preds, const std::vector<Tensor>& targets);

/// The embedding alone, for grafting onto a host model. Accepts the
/// host's normalized N x T input; returns 1 x T (many-to-one kernel) or
/// N x T (per-variable kernel).
Tensor plugin_embed(Graph& g, const Tensor& host_input, const CrossCorrParams& cross,
                    std::size_t endo_index);

/// Minimal channel-independent linear baseline: instance norm, one affine map
/// T -> S, de-norm.
struct LinearHostParams {
    Tensor weight; // T x S (or 2T x S when fed a concat embedding)
    Tensor bias;   // S

    std::vector<ParamView> views();
};

LinearHostParams init_linear_host(std::size_t t, std::size_t s, std::uint64_t seed);

Tensor linear_host_forward(Graph& g, const Tensor& endo, LinearHostParams& params,
                           double eps = 1e-5);

/// Same host with the cross-correlation embedding grafted between the norm
/// and the affine map.
Tensor linear_host_plugged(Graph& g, const Tensor& endo, const Tensor& exo,
                           LinearHostParams& params, CrossCorrParams& cross,
                           double eps = 1e-5);

/// Entry (i, j) = sum over kernel taps kernel[i][j][.].
Tensor correlation_matrix(const CrossCorrParams& cross);

} // namespace crosslinear
