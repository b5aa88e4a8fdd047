#include "crosslinear/model.hpp"

#include <cmath>
#include <random>

namespace crosslinear {

void ModelConfig::validate() const {
    if (patch_len < 1 || lookback < patch_len) {
        throw ContractError("config: requires T >= p >= 1");
    }
    if (horizon < 1) throw ContractError("config: horizon must be >= 1");
    if (n_vars < 1) throw ContractError("config: n_vars must be >= 1");
    if (kernel_size % 2 == 0) throw ContractError("config: kernel_size must be odd");
    if (endo_index >= n_vars) throw ContractError("config: endo_index out of range");
}

std::vector<ParamView> CrossLinearParams::views() {
    std::vector<ParamView> v;
    v.push_back(cross.kernel.param_view("cross.kernel"));
    v.push_back(cross.bias.param_view("cross.bias"));
    v.push_back(cross.alpha.param_view("cross.alpha"));
    v.push_back(patch_head.proj1_w.param_view("patch.proj1_w"));
    v.push_back(patch_head.proj1_b.param_view("patch.proj1_b"));
    if (patch_head.pos_emb.requires_grad()) {
        v.push_back(patch_head.pos_emb.param_view("patch.pos_emb"));
    }
    v.push_back(patch_head.beta.param_view("patch.beta"));
    v.push_back(patch_head.proj2_w.param_view("patch.proj2_w"));
    v.push_back(patch_head.proj2_b.param_view("patch.proj2_b"));
    return v;
}

std::size_t CrossLinearParams::param_count() {
    std::size_t n = 0;
    for (const auto& v : views()) n += v.count;
    return n;
}

namespace {

Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(std::move(shape), true);
    for (auto& v : t.data()) v = dist(rng);
    return t;
}

Tensor sinusoidal_pe(std::size_t k, std::size_t d) {
    Tensor pe({k, d});
    for (std::size_t pos = 0; pos < k; ++pos) {
        for (std::size_t j = 0; j < d; ++j) {
            const double exponent = static_cast<double>(j - j % 2) / static_cast<double>(d);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
            pe(pos, j) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

} // namespace

CrossLinearParams init_params(const ModelConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    const std::size_t n = config.n_vars;
    const std::size_t kappa = config.kernel_size;
    const std::size_t c_out = config.conv_out();
    const std::size_t p = config.patch_len;
    const std::size_t d = config.hidden_dim;
    const std::size_t k = config.n_patches();
    const std::size_t s = config.horizon;

    CrossLinearParams params;
    params.cross.kernel = uniform_init({c_out, n, kappa}, n * kappa, rng);
    params.cross.bias = Tensor({c_out}, true);
    params.cross.alpha = Scalar(config.alpha_init, true);

    params.patch_head.proj1_w = uniform_init({p, d}, p, rng);
    params.patch_head.proj1_b = Tensor({d}, true);
    params.patch_head.pos_emb = sinusoidal_pe(k, d);
    params.patch_head.pos_emb.set_requires_grad(config.pe_mode ==
                                                PosEmbMode::LearnableSinusoidalInit);
    params.patch_head.beta = Scalar(config.beta_init, true);
    params.patch_head.proj2_w = uniform_init({k * d, s}, k * d, rng);
    params.patch_head.proj2_b = Tensor({s}, true);
    return params;
}

ForecastOutput forward_m2o(Graph& g, const Tensor& endo, const Tensor& exo,
                           CrossLinearParams& params, const ModelConfig& config) {
    if (endo.rank() != 2 || endo.dim(0) != 1 || endo.dim(1) != config.lookback) {
        throw ShapeError("forward_m2o: endo must be 1 x T");
    }
    auto [endo_n, endo_stats] = instance_norm(endo, config.eps);
    Tensor exo_n = exo;
    if (exo.size() > 0) exo_n = instance_norm(exo, config.eps).first;

    Tensor emb = embed_variant(g, config.variant, endo_n, exo_n, params.cross);
    Tensor patches = patchify(g, emb, config.patch_len);
    Tensor projected = patch_project(g, patches, params.patch_head);
    Tensor normed_pred = head(g, projected, params.patch_head);
    return ForecastOutput{de_norm(g, normed_pred, endo_stats), true};
}

ForecastOutput forward_m2m(Graph& g, const Tensor& x, CrossLinearParams& params,
                           const ModelConfig& config) {
    if (config.mode != ForecastMode::ManyToMany) {
        throw ContractError("forward_m2m: config mode is not ManyToMany");
    }
    if (x.rank() != 2 || x.dim(0) != config.n_vars || x.dim(1) != config.lookback) {
        throw ShapeError("forward_m2m: input must be N x T");
    }
    auto [x_n, stats] = instance_norm(x, config.eps);

    Tensor emb;
    switch (config.variant) {
    case EmbedVariant::EndoOnly:
        emb = x_n;
        break;
    case EmbedVariant::Sum:
        emb = cross_corr_embed_m2m(g, x_n, params.cross);
        break;
    case EmbedVariant::CrossOnly:
        emb = conv1d(g, x_n, params.cross.kernel, params.cross.bias,
                     (config.kernel_size - 1) / 2);
        break;
    case EmbedVariant::Concat:
        emb = concat_cols(g, x_n,
                          conv1d(g, x_n, params.cross.kernel, params.cross.bias,
                                 (config.kernel_size - 1) / 2));
        break;
    }

    // Shared patch embedding, positional embedding and head per channel.
    std::vector<Tensor> rows;
    rows.reserve(config.n_vars);
    for (std::size_t i = 0; i < config.n_vars; ++i) {
        Tensor channel = take_row(g, emb, i);
        Tensor patches = patchify(g, channel, config.patch_len);
        Tensor projected = patch_project(g, patches, params.patch_head);
        rows.push_back(head(g, projected, params.patch_head));
    }
    Tensor normed_pred = stack_rows(g, rows);
    return ForecastOutput{de_norm(g, normed_pred, stats), true};
}

Scalar loss_m2o(Graph& g, const Tensor& pred, const Tensor& target) {
    return mse(g, pred, target);
}

Scalar loss_m2m(Graph& g, const Tensor& pred, const Tensor& target) {
    return mse(g, pred, target);
}

namespace {

void check_metric_args(const std::vector<Tensor>& preds, const std::vector<Tensor>& targets) {
    if (preds.empty() || preds.size() != targets.size()) {
        throw ContractError("metrics: need equal-length non-empty prediction/target lists");
    }
}

} // namespace

double metric_mse(const std::vector<Tensor>& preds, const std::vector<Tensor>& targets) {
    check_metric_args(preds, targets);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t w = 0; w < preds.size(); ++w) {
        auto pd = preds[w].data();
        auto td = targets[w].data();
        for (std::size_t i = 0; i < pd.size(); ++i) {
            const double d = pd[i] - td[i];
            acc += d * d;
        }
        n += pd.size();
    }
    return acc / static_cast<double>(n);
}

double metric_mae(const std::vector<Tensor>& preds, const std::vector<Tensor>& targets) {
    check_metric_args(preds, targets);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t w = 0; w < preds.size(); ++w) {
        auto pd = preds[w].data();
        auto td = targets[w].data();
        for (std::size_t i = 0; i < pd.size(); ++i) acc += std::abs(pd[i] - td[i]);
        n += pd.size();
    }
    return acc / static_cast<double>(n);
}

Tensor plugin_embed(Graph& g, const Tensor& host_input, const CrossCorrParams& cross,
                    std::size_t endo_index) {
    if (host_input.rank() != 2) throw ShapeError("plugin_embed: input must be N x T");
    const std::size_t n = host_input.dim(0), t = host_input.dim(1);
    if (endo_index >= n) throw ContractError("plugin_embed: endo_index out of range");
    if (cross.kernel.dim(0) != 1) {
        return cross_corr_embed_m2m(g, host_input, cross);
    }
    Tensor endo({1, t});
    Tensor exo({n - 1, t});
    auto hd = host_input.data();
    auto ed = endo.data();
    auto xd = exo.data();
    std::size_t r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i == endo_index) {
            for (std::size_t j = 0; j < t; ++j) ed[j] = hd[i * t + j];
        } else {
            for (std::size_t j = 0; j < t; ++j) xd[r * t + j] = hd[i * t + j];
            ++r;
        }
    }
    return cross_corr_embed(g, endo, exo, cross);
}

std::vector<ParamView> LinearHostParams::views() {
    return {weight.param_view("host.weight"), bias.param_view("host.bias")};
}

LinearHostParams init_linear_host(std::size_t t, std::size_t s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    LinearHostParams params;
    params.weight = uniform_init({t, s}, t, rng);
    params.bias = Tensor({s}, true);
    return params;
}

Tensor linear_host_forward(Graph& g, const Tensor& endo, LinearHostParams& params,
                           double eps) {
    auto [endo_n, stats] = instance_norm(endo, eps);
    Tensor pred = add_bias_rows(g, matmul(g, endo_n, params.weight), params.bias);
    return de_norm(g, pred, stats);
}

Tensor linear_host_plugged(Graph& g, const Tensor& endo, const Tensor& exo,
                           LinearHostParams& params, CrossCorrParams& cross, double eps) {
    auto [endo_n, stats] = instance_norm(endo, eps);
    Tensor exo_n = exo;
    if (exo.size() > 0) exo_n = instance_norm(exo, eps).first;
    Tensor emb = cross_corr_embed(g, endo_n, exo_n, cross);
    Tensor pred = add_bias_rows(g, matmul(g, emb, params.weight), params.bias);
    return de_norm(g, pred, stats);
}

Tensor correlation_matrix(const CrossCorrParams& cross) {
    const std::size_t c_out = cross.kernel.dim(0);
    const std::size_t n = cross.kernel.dim(1);
    const std::size_t kappa = cross.kernel.dim(2);
    Tensor m({c_out, n});
    for (std::size_t i = 0; i < c_out; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t q = 0; q < kappa; ++q) acc += cross.kernel(i, j, q);
            m(i, j) = acc;
        }
    return m;
}

} // namespace crosslinear
