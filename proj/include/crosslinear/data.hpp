#pragma once

#include "crosslinear/tensor.hpp"

#include <cstdint>
#include <optional>

namespace crosslinear {

struct IngestError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Multivariate series: values[i] is the full observation row for
/// variable names[i], all rows share length L.
struct SeriesFrame {
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;
    std::size_t endo_index = 0;
    std::string frequency;

    std::size_t n_vars() const { return values.size(); }
    std::size_t length() const { return values.empty() ? 0 : values.front().size(); }
};

/// Chronological split, either ratios summing to <= 1 or absolute counts.
struct SplitSpec {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
    bool absolute = false;

    /// Resolved (train_len, val_len, test_len) for a series of length l.
    std::array<std::size_t, 3> resolve(std::size_t l) const;
};

struct WindowSample {
    Tensor endo_look;   // 1 x T
    Tensor exo_look;    // (N-1) x T, empty when N == 1
    Tensor endo_target; // 1 x S
    Tensor exo_target;  // (N-1) x S
};

enum class MaskTarget { Endo, Exo };
enum class MaskFill { Zero, GaussianStdNormal };

struct MaskSpec {
    MaskTarget target = MaskTarget::Endo;
    double ratio = 0.0;
    MaskFill fill = MaskFill::Zero;
    std::uint64_t seed = 0;
    /// When set, exogenous cells are masked independently per row
    /// instead of jointly per position.
    bool per_cell = false;
};

struct ZScoreStats {
    std::vector<double> mean;
    std::vector<double> std; // floored at 1e-8
};

SeriesFrame load_csv(const std::string& path);
void save_csv(const SeriesFrame& frame, const std::string& path);

std::array<SeriesFrame, 3> chrono_split(const SeriesFrame& frame, const SplitSpec& spec);

ZScoreStats zscore_fit(const SeriesFrame& train);
SeriesFrame zscore_apply(const SeriesFrame& frame, const ZScoreStats& stats);
SeriesFrame zscore_invert(const SeriesFrame& frame, const ZScoreStats& stats);

/// All (lookback, horizon) windows of the frame whose target block lies
/// within [target_lo, target_hi) (the full frame when unset). Lookbacks
/// may start before target_lo, letting val/test windows borrow context
/// from the preceding split.
std::vector<WindowSample> window_iter(const SeriesFrame& frame, std::size_t lookback,
                                      std::size_t horizon, std::size_t stride = 1,
                                      std::optional<std::size_t> target_lo = std::nullopt,
                                      std::optional<std::size_t> target_hi = std::nullopt);

WindowSample apply_mask(const WindowSample& sample, const MaskSpec& spec);

struct SynthSpec {
    std::size_t n_vars = 5;
    std::size_t length = 5000;
    std::vector<double> weights; // one per exogenous variable; defaults filled in
    std::size_t lag = 3;
    double noise_std = 0.1;
    std::uint64_t seed = 0;
};

/// Exogenous rows are seeded AR(1)-plus-sine processes; the endogenous
/// row (last) is a lagged weighted sum of them plus Gaussian noise, so
/// its future is predictable from exogenous history but only weakly from
/// its own.
SeriesFrame synth_exo_driven(const SynthSpec& spec);

} // namespace crosslinear
