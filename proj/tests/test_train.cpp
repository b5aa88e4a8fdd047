#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "crosslinear/data.hpp"
#include "crosslinear/model.hpp"
#include "crosslinear/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace crosslinear;

namespace {

ModelConfig tiny_config() {
    ModelConfig m;
    m.lookback = 12;
    m.horizon = 4;
    m.patch_len = 4;
    m.hidden_dim = 8;
    m.n_vars = 3;
    m.endo_index = 2;
    m.seed = 0;
    return m;
}

std::vector<WindowSample> tiny_windows(std::uint64_t seed, std::size_t length = 120) {
    SeriesFrame frame = synth_exo_driven({.n_vars = 3, .length = length, .lag = 1,
                                          .noise_std = 0.05, .seed = seed});
    ZScoreStats stats = zscore_fit(frame);
    SeriesFrame z = zscore_apply(frame, stats);
    return window_iter(z, 12, 4);
}

} // namespace

TEST_CASE("adam first step with unit gradient") {
    // theta=0, g=1: m_hat = 1, v_hat = 1, step = -lr / (1 + eps) ~ -lr.
    double theta = 0.0, grad = 1.0;
    std::vector<ParamView> views{{"theta", &theta, &grad, 1}};
    AdamState state;
    state.lr = 0.1;
    state.init(views);
    adam_step(views, state);
    CHECK(theta == doctest::Approx(-0.1 / (1.0 + 1e-8)).epsilon(1e-12));

    // Second identical step: m_hat = v_hat = 1 again, so theta moves by ~-lr again.
    grad = 1.0;
    adam_step(views, state);
    CHECK(theta == doctest::Approx(-0.2 / (1.0 + 1e-8)).epsilon(1e-6));
}

TEST_CASE("adam leaves parameters alone on zero gradient") {
    double theta = 1.5, grad = 0.0;
    std::vector<ParamView> views{{"theta", &theta, &grad, 1}};
    AdamState state;
    state.init(views);
    adam_step(views, state);
    CHECK(theta == 1.5);
}

TEST_CASE("zero learning rate freezes the model") {
    ModelConfig m = tiny_config();
    CrossLinearParams before = init_params(m);
    auto windows = tiny_windows(1);
    TrainConfig t;
    t.lr = 0.0;
    t.epochs = 2;
    t.batch_size = 4;
    auto [params, report] = train(m, t, windows, windows, windows);
    auto pa = params.views();
    auto pb = before.views();
    for (std::size_t g = 0; g < pa.size(); ++g)
        for (std::size_t i = 0; i < pa[g].count; ++i)
            CHECK(pa[g].value[i] == pb[g].value[i]);
}

TEST_CASE("training is seed deterministic") {
    ModelConfig m = tiny_config();
    auto windows = tiny_windows(2);
    TrainConfig t;
    t.epochs = 2;
    t.batch_size = 8;
    t.seed = 7;

    auto [p1, r1] = train(m, t, windows, windows, windows);
    auto [p2, r2] = train(m, t, windows, windows, windows);

    CHECK(r1.train_loss == r2.train_loss);
    CHECK(r1.val_mse == r2.val_mse);
    CHECK(r1.test_mse == r2.test_mse);
    auto v1 = p1.views(), v2 = p2.views();
    for (std::size_t g = 0; g < v1.size(); ++g)
        for (std::size_t i = 0; i < v1[g].count; ++i)
            CHECK(v1[g].value[i] == v2[g].value[i]);
}

TEST_CASE("training drives loss down on a learnable problem") {
    ModelConfig m = tiny_config();
    auto windows = tiny_windows(3, 400);
    TrainConfig t;
    t.lr = 5e-3;
    t.epochs = 8;
    t.batch_size = 8;
    CrossLinearParams untrained = init_params(m);
    auto [initial_mse, initial_mae] = evaluate(untrained, m, windows);
    auto [params, report] = train(m, t, windows, windows, windows);
    CHECK(report.train_loss.back() < report.train_loss.front());
    CHECK(report.test_mse < initial_mse);
    // Far from the AR(1) innovation floor but well under the unit
    // variance of the z-scored target.
    CHECK(report.test_mse < 0.75);
}

TEST_CASE("best-epoch selection reports an epoch with minimal val mse") {
    ModelConfig m = tiny_config();
    auto windows = tiny_windows(4, 200);
    TrainConfig t;
    t.epochs = 5;
    t.batch_size = 8;
    auto [params, report] = train(m, t, windows, windows, windows);
    double best = report.val_mse[report.best_epoch];
    for (double v : report.val_mse) CHECK(best <= v + 1e-15);
}

TEST_CASE("checkpoint round trip reproduces evaluation bit for bit") {
    const std::string path = "/tmp/crosslinear_test_ckpt.json";
    ModelConfig m = tiny_config();
    auto windows = tiny_windows(5);
    TrainConfig t;
    t.epochs = 1;
    t.batch_size = 8;
    auto [params, report] = train(m, t, windows, windows, windows);
    auto [mse_before, mae_before] = evaluate(params, m, windows);

    save_checkpoint(params, m, path);
    auto [loaded, loaded_cfg] = load_checkpoint(path);
    CHECK(loaded_cfg.lookback == m.lookback);
    auto [mse_after, mae_after] = evaluate(loaded, loaded_cfg, windows);
    CHECK(mse_before == mse_after);
    CHECK(mae_before == mae_after);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects wrong versions and missing files") {
    const std::string path = "/tmp/crosslinear_test_ckpt_bad.json";
    ModelConfig m = tiny_config();
    CrossLinearParams params = init_params(m);
    save_checkpoint(params, m, path);

    // Tamper: bump version.
    {
        std::ifstream in(path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        auto pos = text.find("\"format_version\": 1");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 19, "\"format_version\": 2");
        std::ofstream out(path);
        out << text;
    }
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
}

TEST_CASE("evaluate metrics match the per-window oracle") {
    ModelConfig m = tiny_config();
    CrossLinearParams params = init_params(m);
    auto windows = tiny_windows(6);
    auto [mse_v, mae_v] = evaluate(params, m, windows);

    double se = 0.0, ae = 0.0;
    std::size_t n = 0;
    for (const auto& w : windows) {
        Tensor pred = predict(w, params, m);
        for (std::size_t j = 0; j < m.horizon; ++j) {
            double d = pred(0, j) - w.endo_target(0, j);
            se += d * d;
            ae += std::abs(d);
            ++n;
        }
    }
    CHECK(mse_v == doctest::Approx(se / static_cast<double>(n)).epsilon(1e-12));
    CHECK(mae_v == doctest::Approx(ae / static_cast<double>(n)).epsilon(1e-12));
}

TEST_CASE("evaluate with a full endo mask degrades accuracy on endo-dependent data") {
    ModelConfig m = tiny_config();
    auto windows = tiny_windows(8, 400);
    TrainConfig t;
    t.lr = 5e-3;
    t.epochs = 6;
    t.batch_size = 8;
    auto [params, report] = train(m, t, windows, windows, windows);
    auto [clean_mse, clean_mae] = evaluate(params, m, windows);
    MaskSpec mask{.target = MaskTarget::Endo, .ratio = 1.0, .fill = MaskFill::Zero, .seed = 1};
    auto [masked_mse, masked_mae] = evaluate(params, m, windows, &mask);
    CHECK(masked_mse >= clean_mse);
}
