#include "crosslinear/layers.hpp"

#include <cmath>

namespace crosslinear {

namespace {

Tensor stack_exo_endo(const Tensor& endo, const Tensor& exo) {
    const std::size_t t = endo.dim(1);
    if (exo.size() > 0 && exo.dim(1) != t) {
        throw ShapeError("cross_corr_embed: endo length " + std::to_string(t) +
                         " vs exo length " + std::to_string(exo.dim(1)));
    }
    const std::size_t n_exo = exo.size() > 0 ? exo.dim(0) : 0;
    Tensor stacked({n_exo + 1, t});
    auto sd = stacked.data();
    if (n_exo > 0) {
        auto ed = exo.data();
        for (std::size_t i = 0; i < n_exo * t; ++i) sd[i] = ed[i];
    }
    auto nd = endo.data();
    for (std::size_t j = 0; j < t; ++j) sd[n_exo * t + j] = nd[j];
    return stacked;
}

Tensor conv_same_length(Graph& g, const Tensor& stacked, const CrossCorrParams& params) {
    const std::size_t kappa = params.kernel.dim(2);
    if (kappa % 2 == 0) throw ContractError("cross_corr_embed: kernel size must be odd");
    return conv1d(g, stacked, params.kernel, params.bias, (kappa - 1) / 2);
}

} // namespace

std::pair<Tensor, InstanceStats> instance_norm(const Tensor& window, double eps) {
    if (window.rank() != 2 || window.dim(1) < 2) {
        throw ShapeError("instance_norm: window must be C x T with T >= 2");
    }
    const std::size_t c = window.dim(0), t = window.dim(1);
    InstanceStats stats;
    stats.eps = eps;
    stats.mean.resize(c);
    stats.std.resize(c);
    Tensor normed({c, t});
    auto wd = window.data();
    auto nd = normed.data();
    for (std::size_t i = 0; i < c; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < t; ++j) mu += wd[i * t + j];
        mu /= static_cast<double>(t);
        double var = 0.0;
        for (std::size_t j = 0; j < t; ++j) {
            const double d = wd[i * t + j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(t);
        const double sigma = std::sqrt(var + eps);
        stats.mean[i] = mu;
        stats.std[i] = sigma;
        for (std::size_t j = 0; j < t; ++j) nd[i * t + j] = (wd[i * t + j] - mu) / sigma;
    }
    return {normed, stats};
}

Tensor de_norm(Graph& g, const Tensor& pred, const InstanceStats& stats) {
    if (pred.rank() != 2 || pred.dim(0) != stats.mean.size()) {
        throw ShapeError("de_norm: " + std::to_string(pred.rank() == 2 ? pred.dim(0) : 0) +
                         " rows vs " + std::to_string(stats.mean.size()) + " stats entries");
    }
    const std::size_t r = pred.dim(0), c = pred.dim(1);
    Tensor out({r, c});
    auto pd = pred.data();
    auto od = out.data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            od[i * c + j] = pd[i * c + j] * stats.std[i] + stats.mean[i];
    g.record([pred = pred, out = out, sigma = stats.std, r, c]() mutable {
        auto go = out.grad();
        auto gp = pred.grad();
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gp[i * c + j] += go[i * c + j] * sigma[i];
    });
    return out;
}

Tensor cross_corr_embed(Graph& g, const Tensor& endo, const Tensor& exo,
                        const CrossCorrParams& params) {
    Tensor stacked = stack_exo_endo(endo, exo);
    Tensor cross = conv_same_length(g, stacked, params);
    if (cross.dim(0) != 1) {
        throw ShapeError("cross_corr_embed: many-to-one expects a single output channel, got " +
                         std::to_string(cross.dim(0)));
    }
    return blend(g, params.alpha, endo, cross);
}

Tensor cross_corr_embed_m2m(Graph& g, const Tensor& x, const CrossCorrParams& params) {
    if (params.kernel.dim(0) != x.dim(0)) {
        throw ShapeError("cross_corr_embed_m2m: kernel has " +
                         std::to_string(params.kernel.dim(0)) + " output channels for " +
                         std::to_string(x.dim(0)) + " variables");
    }
    Tensor cross = conv_same_length(g, x, params);
    return blend(g, params.alpha, x, cross);
}

Tensor embed_variant(Graph& g, EmbedVariant variant, const Tensor& endo, const Tensor& exo,
                     const CrossCorrParams& params) {
    switch (variant) {
    case EmbedVariant::EndoOnly:
        return endo;
    case EmbedVariant::Sum:
        return cross_corr_embed(g, endo, exo, params);
    case EmbedVariant::CrossOnly:
        return conv_same_length(g, stack_exo_endo(endo, exo), params);
    case EmbedVariant::Concat: {
        Tensor cross = conv_same_length(g, stack_exo_endo(endo, exo), params);
        return concat_cols(g, endo, cross);
    }
    }
    throw ContractError("embed_variant: unknown variant");
}

Tensor patchify(Graph& g, const Tensor& emb, std::size_t p) {
    if (emb.rank() != 2 || emb.dim(0) != 1 || p == 0 || emb.dim(1) == 0) {
        throw ShapeError("patchify: input must be 1 x L with p >= 1");
    }
    const std::size_t len = emb.dim(1);
    const std::size_t k = (len + p - 1) / p;
    Tensor out({k, p});
    auto ed = emb.data();
    auto od = out.data();
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < p; ++j)
            od[i * p + j] = ed[std::min(i * p + j, len - 1)];
    g.record([emb = emb, out = out, p, k, len]() mutable {
        auto go = out.grad();
        auto ge = emb.grad();
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < p; ++j)
                ge[std::min(i * p + j, len - 1)] += go[i * p + j];
    });
    return out;
}

Tensor patch_project(Graph& g, const Tensor& patches, const PatchHeadParams& params) {
    if (patches.dim(1) != params.proj1_w.dim(0)) {
        throw ShapeError("patch_project: patch width " + std::to_string(patches.dim(1)) +
                         " vs projection input " + std::to_string(params.proj1_w.dim(0)));
    }
    if (patches.dim(0) != params.pos_emb.dim(0)) {
        throw ShapeError("patch_project: " + std::to_string(patches.dim(0)) +
                         " patches vs positional embedding of " +
                         std::to_string(params.pos_emb.dim(0)) + " rows");
    }
    Tensor proj = add_bias_rows(g, matmul(g, patches, params.proj1_w), params.proj1_b);
    return blend(g, params.beta, proj, params.pos_emb);
}

Tensor head(Graph& g, const Tensor& projected, const PatchHeadParams& params) {
    const std::size_t flat = projected.dim(0) * projected.dim(1);
    if (flat != params.proj2_w.dim(0)) {
        throw ShapeError("head: flattened size " + std::to_string(flat) + " vs projection rows " +
                         std::to_string(params.proj2_w.dim(0)));
    }
    Tensor flattened = projected.reshape({1, flat});
    return add_bias_rows(g, matmul(g, flattened, params.proj2_w), params.proj2_b);
}

Tensor equivalent_kernel(const Tensor& kernel, double alpha, std::size_t endo_index) {
    if (kernel.rank() != 3 || kernel.dim(0) != 1) {
        throw ShapeError("equivalent_kernel: kernel must be 1 x N x kappa");
    }
    const std::size_t n = kernel.dim(1), kappa = kernel.dim(2);
    if (kappa % 2 == 0) throw ContractError("equivalent_kernel: even kernel has no center tap");
    if (endo_index >= n) throw ContractError("equivalent_kernel: endo_index out of range");
    Tensor out({1, n, kappa});
    auto kd = kernel.data();
    auto od = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) od[i] = (1.0 - alpha) * kd[i];
    out(0, endo_index, kappa / 2) += alpha;
    return out;
}

} // namespace crosslinear
