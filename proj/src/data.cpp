#include "crosslinear/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace crosslinear {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

} // namespace

std::array<std::size_t, 3> SplitSpec::resolve(std::size_t l) const {
    std::array<std::size_t, 3> out;
    if (absolute) {
        out = {static_cast<std::size_t>(train), static_cast<std::size_t>(val),
               static_cast<std::size_t>(test)};
    } else {
        out[0] = static_cast<std::size_t>(train * static_cast<double>(l));
        out[1] = static_cast<std::size_t>(val * static_cast<double>(l));
        out[2] = static_cast<std::size_t>(test * static_cast<double>(l));
    }
    if (out[0] + out[1] + out[2] > l) {
        throw ContractError("split: segment lengths " + std::to_string(out[0]) + "+" +
                            std::to_string(out[1]) + "+" + std::to_string(out[2]) +
                            " exceed series length " + std::to_string(l));
    }
    return out;
}

SeriesFrame load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IngestError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = split_line(line);
    std::size_t first_col = 0;
    if (!header.empty()) {
        const std::string h0 = lower(header[0]);
        if (h0 == "date" || h0 == "timestamp") first_col = 1;
    }
    if (header.size() <= first_col) throw IngestError(path + ": no value columns");

    SeriesFrame frame;
    frame.names.assign(header.begin() + static_cast<std::ptrdiff_t>(first_col), header.end());
    frame.values.resize(frame.names.size());

    std::size_t row = 1; // header is row 1
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw IngestError(path + ": row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(header.size()));
        }
        for (std::size_t c = first_col; c < cells.size(); ++c) {
            const std::string& cell = cells[c];
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0' || !std::isfinite(v)) {
                throw IngestError(path + ": non-numeric cell at row " + std::to_string(row) +
                                  ", column " + header[c]);
            }
            frame.values[c - first_col].push_back(v);
        }
    }
    if (frame.length() == 0) throw IngestError(path + ": no data rows");
    frame.endo_index = frame.n_vars() - 1;
    return frame;
}

void save_csv(const SeriesFrame& frame, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write " + path);
    for (std::size_t i = 0; i < frame.names.size(); ++i) {
        out << (i ? "," : "") << frame.names[i];
    }
    out << "\n";
    char buf[40];
    for (std::size_t t = 0; t < frame.length(); ++t) {
        for (std::size_t i = 0; i < frame.n_vars(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", frame.values[i][t]);
            out << (i ? "," : "") << buf;
        }
        out << "\n";
    }
}

std::array<SeriesFrame, 3> chrono_split(const SeriesFrame& frame, const SplitSpec& spec) {
    const auto lens = spec.resolve(frame.length());
    std::array<SeriesFrame, 3> out;
    std::size_t start = 0;
    for (int s = 0; s < 3; ++s) {
        out[s].names = frame.names;
        out[s].endo_index = frame.endo_index;
        out[s].frequency = frame.frequency;
        out[s].values.resize(frame.n_vars());
        for (std::size_t i = 0; i < frame.n_vars(); ++i) {
            out[s].values[i].assign(frame.values[i].begin() + static_cast<std::ptrdiff_t>(start),
                                    frame.values[i].begin() +
                                        static_cast<std::ptrdiff_t>(start + lens[s]));
        }
        start += lens[s];
    }
    return out;
}

ZScoreStats zscore_fit(const SeriesFrame& train) {
    if (train.length() == 0) throw ContractError("zscore_fit: empty train split");
    ZScoreStats stats;
    for (const auto& row : train.values) {
        const double n = static_cast<double>(row.size());
        const double mu = std::accumulate(row.begin(), row.end(), 0.0) / n;
        double var = 0.0;
        for (double v : row) var += (v - mu) * (v - mu);
        var /= n;
        stats.mean.push_back(mu);
        stats.std.push_back(std::max(std::sqrt(var), 1e-8));
    }
    return stats;
}

SeriesFrame zscore_apply(const SeriesFrame& frame, const ZScoreStats& stats) {
    SeriesFrame out = frame;
    for (std::size_t i = 0; i < out.n_vars(); ++i) {
        for (auto& v : out.values[i]) v = (v - stats.mean[i]) / stats.std[i];
    }
    return out;
}

SeriesFrame zscore_invert(const SeriesFrame& frame, const ZScoreStats& stats) {
    SeriesFrame out = frame;
    for (std::size_t i = 0; i < out.n_vars(); ++i) {
        for (auto& v : out.values[i]) v = v * stats.std[i] + stats.mean[i];
    }
    return out;
}

std::vector<WindowSample> window_iter(const SeriesFrame& frame, std::size_t lookback,
                                      std::size_t horizon, std::size_t stride,
                                      std::optional<std::size_t> target_lo,
                                      std::optional<std::size_t> target_hi) {
    const std::size_t l = frame.length();
    const std::size_t n = frame.n_vars();
    const std::size_t lo = std::max(target_lo.value_or(lookback), lookback);
    const std::size_t hi = target_hi.value_or(l);
    std::vector<WindowSample> out;
    if (stride == 0) throw ContractError("window_iter: stride must be >= 1");
    for (std::size_t t0 = lo; t0 + horizon <= hi; t0 += stride) {
        WindowSample w;
        w.endo_look = Tensor({1, lookback});
        w.endo_target = Tensor({1, horizon});
        w.exo_look = Tensor({n - 1, lookback});
        w.exo_target = Tensor({n - 1, horizon});
        const auto& endo = frame.values[frame.endo_index];
        for (std::size_t j = 0; j < lookback; ++j) w.endo_look(0, j) = endo[t0 - lookback + j];
        for (std::size_t j = 0; j < horizon; ++j) w.endo_target(0, j) = endo[t0 + j];
        std::size_t r = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == frame.endo_index) continue;
            for (std::size_t j = 0; j < lookback; ++j)
                w.exo_look(r, j) = frame.values[i][t0 - lookback + j];
            for (std::size_t j = 0; j < horizon; ++j)
                w.exo_target(r, j) = frame.values[i][t0 + j];
            ++r;
        }
        out.push_back(std::move(w));
    }
    return out;
}

namespace {

Tensor copy_tensor(const Tensor& t) {
    Tensor out(t.shape());
    auto src = t.data();
    auto dst = out.data();
    std::copy(src.begin(), src.end(), dst.begin());
    return out;
}

std::vector<std::size_t> pick_positions(std::size_t t, double ratio, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(t);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto count =
        static_cast<std::size_t>(std::llround(ratio * static_cast<double>(t)));
    idx.resize(std::min(count, t));
    return idx;
}

} // namespace

WindowSample apply_mask(const WindowSample& sample, const MaskSpec& spec) {
    WindowSample out;
    out.endo_look = copy_tensor(sample.endo_look);
    out.exo_look = copy_tensor(sample.exo_look);
    out.endo_target = copy_tensor(sample.endo_target);
    out.exo_target = copy_tensor(sample.exo_target);
    if (spec.ratio <= 0.0) return out;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto fill_value = [&]() {
        return spec.fill == MaskFill::Zero ? 0.0 : gauss(rng);
    };
    const std::size_t t = sample.endo_look.dim(1);
    if (spec.target == MaskTarget::Endo) {
        for (std::size_t pos : pick_positions(t, spec.ratio, rng)) {
            out.endo_look(0, pos) = fill_value();
        }
    } else {
        const std::size_t rows = out.exo_look.size() > 0 ? out.exo_look.dim(0) : 0;
        if (spec.per_cell) {
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t pos : pick_positions(t, spec.ratio, rng)) {
                    out.exo_look(r, pos) = fill_value();
                }
            }
        } else {
            // Sensor-outage semantics: one position wipes every exo row.
            for (std::size_t pos : pick_positions(t, spec.ratio, rng)) {
                for (std::size_t r = 0; r < rows; ++r) out.exo_look(r, pos) = fill_value();
            }
        }
    }
    return out;
}

SeriesFrame synth_exo_driven(const SynthSpec& spec) {
    if (spec.n_vars < 2) throw ContractError("synth_exo_driven: need at least 2 variables");
    if (spec.lag < 1) throw ContractError("synth_exo_driven: lag must be >= 1");
    const std::size_t n_exo = spec.n_vars - 1;
    std::vector<double> weights = spec.weights;
    if (weights.empty()) {
        static constexpr std::array<double, 4> base = {0.8, -0.6, 0.5, 0.4};
        for (std::size_t j = 0; j < n_exo; ++j) weights.push_back(base[j % base.size()]);
    }
    if (weights.size() != n_exo) {
        throw ContractError("synth_exo_driven: " + std::to_string(weights.size()) +
                            " weights for " + std::to_string(n_exo) + " exogenous variables");
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> innov(0.0, 0.1);
    std::normal_distribution<double> noise(0.0, spec.noise_std);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * M_PI);

    SeriesFrame frame;
    frame.frequency = "synthetic";
    frame.values.resize(spec.n_vars, std::vector<double>(spec.length, 0.0));
    for (std::size_t j = 0; j < n_exo; ++j) {
        frame.names.push_back("exo" + std::to_string(j + 1));
        const double period = 24.0 + 7.0 * static_cast<double>(j);
        const double phase = phase_dist(rng);
        // Dominant per-variable sine with a persistent AR(1) disturbance.
        // The endogenous row only ever observes the *sum* of the four
        // incommensurate tones, which a short window cannot cleanly
        // separate for extrapolation, while each exogenous channel
        // exposes its tone directly — so exogenous history carries far
        // more predictive value than endogenous history alone.
        double ar = 0.0;
        for (std::size_t t = 0; t < spec.length; ++t) {
            ar = 0.99 * ar + innov(rng);
            frame.values[j][t] =
                ar + 3.0 * std::sin(2.0 * M_PI * static_cast<double>(t) / period + phase);
        }
    }
    frame.names.push_back("endo");
    auto& endo = frame.values[n_exo];
    for (std::size_t t = 0; t < spec.length; ++t) {
        double acc = 0.0;
        if (t >= spec.lag) {
            for (std::size_t j = 0; j < n_exo; ++j) {
                acc += weights[j] * frame.values[j][t - spec.lag];
            }
        }
        endo[t] = acc + (spec.noise_std > 0.0 ? noise(rng) : 0.0);
    }
    frame.endo_index = n_exo;
    return frame;
}

} // namespace crosslinear
