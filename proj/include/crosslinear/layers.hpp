#pragma once

#include "crosslinear/tensor.hpp"

namespace crosslinear {

/// Per-row mean and standard deviation captured by instance
/// normalization, needed to invert the model output.
struct InstanceStats {
    std::vector<double> mean;
    std::vector<double> std; // sqrt(population variance + eps)
    double eps = 1e-5;
};

/// Single-layer 1D convolution over the stacked variables plus the
/// learnable residual weight.
struct CrossCorrParams {
    Tensor kernel; // C_out x N x kappa
    Tensor bias;   // C_out
    Scalar alpha;
};

/// Patch projection, positional embedding and the direct multi-horizon head.
struct PatchHeadParams {
    Tensor proj1_w; // p x d
    Tensor proj1_b; // d
    Tensor pos_emb; // k x d
    Scalar beta;
    Tensor proj2_w; // (k*d) x S
    Tensor proj2_b; // S
};

enum class EmbedVariant { Sum, EndoOnly, CrossOnly, Concat };

/// Row-wise standardization to zero mean / unit variance with the
/// captured statistics. Variance is population (divide by T); sigma is
/// floored at sqrt(eps) so constant rows stay finite. This runs outside
/// the autodiff graph: the raw window carries no gradient.
std::pair<Tensor, InstanceStats> instance_norm(const Tensor& window, double eps = 1e-5);

/// Inverse transform pred * sigma + mu, row i using stats entry i.
/// Recorded on the graph so parameter gradients scale correctly.
Tensor de_norm(Graph& g, const Tensor& pred, const InstanceStats& stats);

/// Stacks exogenous rows first and the endogenous row last, convolves
/// with symmetric zero padding (kappa-1)/2 so length is preserved, then
/// residually blends with alpha. Many-to-one when kernel C_out == 1.
Tensor cross_corr_embed(Graph& g, const Tensor& endo, const Tensor& exo,
                        const CrossCorrParams& params);

/// Many-to-many form: x is the full N x T normalized input, the conv
/// produces N channels and channel i blends against input variable i.
Tensor cross_corr_embed_m2m(Graph& g, const Tensor& x, const CrossCorrParams& params);

Tensor embed_variant(Graph& g, EmbedVariant variant, const Tensor& endo, const Tensor& exo,
                     const CrossCorrParams& params);

/// Split a 1 x L sequence into k = ceil(L/p) non-overlapping length-p
/// patches, replicating the final value to fill the remainder.
Tensor patchify(Graph& g, const Tensor& emb, std::size_t p);

/// P = beta * (patches * proj1_w + proj1_b) + (1 - beta) * PE
Tensor patch_project(Graph& g, const Tensor& patches, const PatchHeadParams& params);

/// Flattens k x d row-major and applies the affine map to 1 x S.
Tensor head(Graph& g, const Tensor& projected, const PatchHeadParams& params);

/// K' = (1-alpha) * K + alpha * S where S is the selection kernel with a
/// single center tap of 1 on the endogenous input channel. Convolving
/// with K' reproduces the alpha-blend of the endogenous series and the
/// K-convolution output.
Tensor equivalent_kernel(const Tensor& kernel, double alpha, std::size_t endo_index);

} // namespace crosslinear
