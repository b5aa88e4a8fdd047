#include "crosslinear/train.hpp"
#include "crosslinear/serde.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace crosslinear {

void AdamState::init(std::span<const ParamView> params) {
    step = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
        m.emplace_back(p.count, 0.0);
        v.emplace_back(p.count, 0.0);
    }
}

void adam_step(std::span<const ParamView> params, AdamState& state) {
    if (state.m.size() != params.size()) {
        throw ContractError("adam_step: state initialized for a different parameter set");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (state.m[p].size() != params[p].count) {
            throw ContractError("adam_step: moment shape mismatch at " + params[p].name);
        }
        for (std::size_t i = 0; i < params[p].count; ++i) {
            const double g = params[p].grad[i];
            state.m[p][i] = state.beta1 * state.m[p][i] + (1.0 - state.beta1) * g;
            state.v[p][i] = state.beta2 * state.v[p][i] + (1.0 - state.beta2) * g * g;
            const double m_hat = state.m[p][i] / bc1;
            const double v_hat = state.v[p][i] / bc2;
            params[p].value[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
}

namespace {

Tensor copy_tensor(const Tensor& t) {
    Tensor out(t.shape());
    auto src = t.data();
    auto dst = out.data();
    std::copy(src.begin(), src.end(), dst.begin());
    return out;
}

/// Reassemble the full N x C matrix with the endogenous row at its
/// original index.
Tensor assemble_full(const Tensor& endo, const Tensor& exo, std::size_t endo_index) {
    const std::size_t n = (exo.size() > 0 ? exo.dim(0) : 0) + 1;
    const std::size_t c = endo.dim(1);
    Tensor out({n, c});
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == endo_index) {
            for (std::size_t j = 0; j < c; ++j) out(i, j) = endo(0, j);
        } else {
            for (std::size_t j = 0; j < c; ++j) out(i, j) = exo(r, j);
            ++r;
        }
    }
    return out;
}

Scalar window_loss(Graph& g, const WindowSample& w, CrossLinearParams& params,
                   const ModelConfig& config) {
    if (config.mode == ForecastMode::ManyToOne) {
        auto out = forward_m2o(g, w.endo_look, w.exo_look, params, config);
        return loss_m2o(g, out.pred, w.endo_target);
    }
    Tensor x = assemble_full(w.endo_look, w.exo_look, config.endo_index);
    Tensor target = assemble_full(w.endo_target, w.exo_target, config.endo_index);
    auto out = forward_m2m(g, x, params, config);
    return loss_m2m(g, out.pred, target);
}

} // namespace

Tensor predict(const WindowSample& w, CrossLinearParams& params, const ModelConfig& config) {
    Graph g; // discarded: no backward pass
    if (config.mode == ForecastMode::ManyToOne) {
        return forward_m2o(g, w.endo_look, w.exo_look, params, config).pred;
    }
    Tensor x = assemble_full(w.endo_look, w.exo_look, config.endo_index);
    return forward_m2m(g, x, params, config).pred;
}

std::pair<double, double> evaluate(CrossLinearParams& params, const ModelConfig& config,
                                   const std::vector<WindowSample>& windows,
                                   const MaskSpec* mask) {
    if (windows.empty()) throw ContractError("evaluate: empty window set");
    double sq = 0.0, ab = 0.0;
    std::size_t n = 0;
    for (const auto& w : windows) {
        const WindowSample* sample = &w;
        WindowSample masked;
        if (mask != nullptr) {
            masked = apply_mask(w, *mask);
            sample = &masked;
        }
        Tensor pred = predict(*sample, params, config);
        const Tensor& target = config.mode == ForecastMode::ManyToOne
                                   ? sample->endo_target
                                   : assemble_full(sample->endo_target, sample->exo_target,
                                                   config.endo_index);
        auto pd = pred.data();
        auto td = target.data();
        for (std::size_t i = 0; i < pd.size(); ++i) {
            const double d = pd[i] - td[i];
            sq += d * d;
            ab += std::abs(d);
        }
        n += pd.size();
    }
    return {sq / static_cast<double>(n), ab / static_cast<double>(n)};
}

CrossLinearParams clone_params(CrossLinearParams& params, const ModelConfig& /*config*/) {
    CrossLinearParams out;
    out.cross.kernel = copy_tensor(params.cross.kernel);
    out.cross.kernel.set_requires_grad(params.cross.kernel.requires_grad());
    out.cross.bias = copy_tensor(params.cross.bias);
    out.cross.bias.set_requires_grad(true);
    out.cross.alpha = Scalar(params.cross.alpha.value(), true);
    out.patch_head.proj1_w = copy_tensor(params.patch_head.proj1_w);
    out.patch_head.proj1_w.set_requires_grad(true);
    out.patch_head.proj1_b = copy_tensor(params.patch_head.proj1_b);
    out.patch_head.proj1_b.set_requires_grad(true);
    out.patch_head.pos_emb = copy_tensor(params.patch_head.pos_emb);
    out.patch_head.pos_emb.set_requires_grad(params.patch_head.pos_emb.requires_grad());
    out.patch_head.beta = Scalar(params.patch_head.beta.value(), true);
    out.patch_head.proj2_w = copy_tensor(params.patch_head.proj2_w);
    out.patch_head.proj2_w.set_requires_grad(true);
    out.patch_head.proj2_b = copy_tensor(params.patch_head.proj2_b);
    out.patch_head.proj2_b.set_requires_grad(true);
    return out;
}

std::pair<CrossLinearParams, TrainReport> train(const ModelConfig& model_config,
                                                const TrainConfig& train_config,
                                                const std::vector<WindowSample>& train_windows,
                                                const std::vector<WindowSample>& val_windows,
                                                const std::vector<WindowSample>& test_windows) {
    if (train_windows.empty()) throw ContractError("train: no training windows");
    if (val_windows.empty()) throw ContractError("train: no validation windows");

    CrossLinearParams params = init_params(model_config);
    auto views = params.views();
    AdamState adam;
    adam.lr = train_config.lr;
    adam.init(views);

    TrainReport report;
    report.param_count = params.param_count();

    std::mt19937_64 shuffle_rng(train_config.seed);
    std::vector<std::size_t> order(train_windows.size());
    std::iota(order.begin(), order.end(), 0);

    CrossLinearParams best = clone_params(params, model_config);
    double best_val = std::numeric_limits<double>::infinity();

    for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        if (train_config.lr_schedule == LrSchedule::HalveEachEpoch) {
            adam.lr = train_config.lr * std::pow(0.5, static_cast<double>(epoch));
        }
        if (train_config.shuffle_train) {
            std::shuffle(order.begin(), order.end(), shuffle_rng);
        }

        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
            const std::size_t end = std::min(start + train_config.batch_size, order.size());
            for (const auto& v : views) std::fill(v.grad, v.grad + v.count, 0.0);
            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                Graph g;
                Scalar loss = window_loss(g, train_windows[order[i]], params, model_config);
                if (!std::isfinite(loss.value())) {
                    throw NumericError("train: non-finite loss at epoch " +
                                       std::to_string(epoch) + ", batch " +
                                       std::to_string(n_batches));
                }
                batch_loss += loss.value();
                g.backward(loss);
            }
            const double inv = 1.0 / static_cast<double>(end - start);
            for (const auto& v : views) {
                for (std::size_t i = 0; i < v.count; ++i) v.grad[i] *= inv;
            }
            adam_step(views, adam);
            epoch_loss += batch_loss * inv;
            ++n_batches;
        }
        report.train_loss.push_back(epoch_loss / static_cast<double>(n_batches));

        auto [val_mse, val_mae] = evaluate(params, model_config, val_windows);
        report.val_mse.push_back(val_mse);
        report.val_mae.push_back(val_mae);
        if (val_mse < best_val) {
            best_val = val_mse;
            best = clone_params(params, model_config);
            report.best_epoch = epoch;
        }
        report.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }

    if (!test_windows.empty()) {
        auto [test_mse, test_mae] = evaluate(best, model_config, test_windows);
        report.test_mse = test_mse;
        report.test_mae = test_mae;
    }
    return {std::move(best), std::move(report)};
}

namespace {

constexpr int kCheckpointVersion = 1;

std::vector<ParamView> checkpoint_views(CrossLinearParams& p) {
    // Full list, independent of which groups are trainable.
    return {p.cross.kernel.param_view("cross.kernel"),
            p.cross.bias.param_view("cross.bias"),
            p.cross.alpha.param_view("cross.alpha"),
            p.patch_head.proj1_w.param_view("patch.proj1_w"),
            p.patch_head.proj1_b.param_view("patch.proj1_b"),
            p.patch_head.pos_emb.param_view("patch.pos_emb"),
            p.patch_head.beta.param_view("patch.beta"),
            p.patch_head.proj2_w.param_view("patch.proj2_w"),
            p.patch_head.proj2_b.param_view("patch.proj2_b")};
}

} // namespace

void save_checkpoint(CrossLinearParams& params, const ModelConfig& config,
                     const std::string& path, const std::vector<std::string>* var_names) {
    nlohmann::json doc;
    doc["format_version"] = kCheckpointVersion;
    doc["config"] = model_config_to_json(config);
    if (var_names != nullptr) doc["var_names"] = *var_names;
    nlohmann::json groups = nlohmann::json::object();
    for (auto& pv : checkpoint_views(params)) {
        groups[pv.name] = std::vector<double>(pv.value, pv.value + pv.count);
    }
    doc["params"] = groups;
    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot write checkpoint " + path);
    out << doc.dump(1) << "\n";
}

std::pair<CrossLinearParams, ModelConfig> load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot read checkpoint " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError("malformed checkpoint " + path + ": " + e.what());
    }
    if (!doc.contains("format_version") || doc["format_version"].get<int>() != kCheckpointVersion) {
        throw CheckpointError("checkpoint " + path + ": unsupported format version");
    }
    ModelConfig config = model_config_from_json(doc.at("config"), "config");
    CrossLinearParams params = init_params(config);
    for (auto& pv : checkpoint_views(params)) {
        if (!doc.at("params").contains(pv.name)) {
            throw CheckpointError("checkpoint " + path + ": missing group " + pv.name);
        }
        const auto values = doc["params"][pv.name].get<std::vector<double>>();
        if (values.size() != pv.count) {
            throw CheckpointError("checkpoint " + path + ": group " + pv.name + " has " +
                                  std::to_string(values.size()) + " values, expected " +
                                  std::to_string(pv.count));
        }
        std::copy(values.begin(), values.end(), pv.value);
    }
    return {std::move(params), config};
}

} // namespace crosslinear
