// Acceptance suite: one line per criterion, [PASS]/[FAIL]/[SKIP].
// Exit status is the number of failed criteria.

#include "crosslinear/run.hpp"
#include "crosslinear/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

using namespace crosslinear;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << index << ". " << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << std::endl;
    if (!pass) ++g_failures;
}

void report_skip(int index, const std::string& name, const std::string& why) {
    std::cout << "[SKIP] " << index << ". " << name << "  (" << why << ")" << std::endl;
}

std::string etth1_path() {
    if (const char* env = std::getenv("CROSSLINEAR_ETTH1")) return env;
    return "data/ETTh1.csv";
}

ModelConfig default_model(std::size_t n_vars) {
    ModelConfig m;
    m.lookback = 96;
    m.horizon = 96;
    m.patch_len = 16;
    m.hidden_dim = 32;
    m.n_vars = n_vars;
    m.endo_index = n_vars - 1;
    return m;
}

Tensor random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Tensor t({rows, cols});
    for (double& v : t.data()) v = u(rng);
    return t;
}

// ---- 1. gradient correctness ------------------------------------------------

void criterion_1() {
    ModelConfig m = default_model(8);
    std::ostringstream log;
    const auto start = std::chrono::steady_clock::now();
    bool ok = run_gradcheck(m, log, {0, 1, 2});
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream detail;
    detail << "3 seeds, " << secs << " s";
    report(1, "gradient correctness < 1e-4 on every parameter group", ok && secs < 120.0,
           detail.str());
    if (!ok) std::cout << log.str();
}

// ---- 2. equivalent-kernel identity ------------------------------------------

void criterion_2() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double max_err = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const std::size_t n = 2 + rng() % 7;  // [2, 8]
        const std::size_t t = 8 + rng() % 25; // [8, 32]
        const double alpha = unit(rng);

        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Tensor kernel({1, n, 3});
        for (double& v : kernel.data()) v = u(rng);
        Tensor x = random_matrix(rng, n, t); // exo rows first, endo last

        Tensor endo({1, t});
        for (std::size_t j = 0; j < t; ++j) endo(0, j) = x(n - 1, j);
        Tensor exo({n - 1, t});
        for (std::size_t i = 0; i + 1 < n; ++i)
            for (std::size_t j = 0; j < t; ++j) exo(i, j) = x(i, j);

        Graph g;
        CrossCorrParams params{kernel, Tensor::zeros({1}), Scalar(alpha)};
        Tensor blended = cross_corr_embed(g, endo, exo, params);

        Tensor folded = equivalent_kernel(kernel, alpha, n - 1);
        Tensor direct = conv1d(g, x, folded, Tensor::zeros({1}), 1);

        for (std::size_t j = 0; j < t; ++j)
            max_err = std::max(max_err, std::abs(blended(0, j) - direct(0, j)));
    }
    std::ostringstream detail;
    detail << "max abs err " << max_err;
    report(2, "folded-kernel convolution equals the residual blend", max_err < 1e-10,
           detail.str());
}

// ---- 3. normalization round trip --------------------------------------------

void criterion_3() {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    double max_err = 0.0;
    for (int w = 0; w < 1000; ++w) {
        const std::size_t n = 1 + rng() % 4;
        const std::size_t t = 8 + rng() % 120;
        Tensor window({n, t});
        if (w % 10 == 0) {
            const double c = u(rng);
            for (double& v : window.data()) v = c; // constant rows
        } else {
            for (double& v : window.data()) v = u(rng);
        }
        auto [normed, stats] = instance_norm(window);
        Graph g;
        Tensor back = de_norm(g, normed, stats);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < t; ++j)
                max_err = std::max(max_err, std::abs(back(i, j) - window(i, j)));
    }
    std::ostringstream detail;
    detail << "1000 windows, max abs err " << max_err;
    report(3, "normalize/de-normalize round trip is identity", max_err < 1e-9, detail.str());
}

// ---- 4. endo-only invariance ------------------------------------------------

void criterion_4() {
    ModelConfig m = default_model(8);
    m.variant = EmbedVariant::EndoOnly;
    CrossLinearParams params = init_params(m);

    std::mt19937_64 rng(4);
    Tensor endo = random_matrix(rng, 1, m.lookback);
    Tensor exo_a = random_matrix(rng, m.n_vars - 1, m.lookback);
    Tensor exo_b = random_matrix(rng, m.n_vars - 1, m.lookback);

    Graph ga, gb;
    Tensor pa = forward_m2o(ga, endo, exo_a, params, m).pred;
    Tensor pb = forward_m2o(gb, endo, exo_b, params, m).pred;
    bool identical = true;
    for (std::size_t j = 0; j < m.horizon; ++j)
        if (pa(0, j) != pb(0, j)) identical = false;
    report(4, "endo-only forecasts are bit-identical under exogenous replacement", identical,
           "");
}

// ---- 5. synthetic exogenous benefit -----------------------------------------

struct SynthStudy {
    std::vector<WindowSample> train_w, val_w, test_w;
    ModelConfig model;
    TrainConfig tc;
};

SynthStudy make_synth_study() {
    SynthStudy s;
    RunConfig cfg;
    cfg.synthetic = SynthSpec{.n_vars = 5, .length = 5000, .lag = 3, .noise_std = 0.1,
                              .seed = 0};
    cfg.split = SplitSpec{0.7, 0.1, 0.2, false};
    s.model = ModelConfig{};
    s.model.lookback = 48;
    s.model.horizon = 12;
    s.model.patch_len = 12;
    s.model.hidden_dim = 32;
    s.model.seed = 0;
    cfg.model = s.model;
    ModelConfig resolved = cfg.model;
    PreparedData data = prepare_data(cfg, resolved);
    s.model = resolved;
    s.train_w = std::move(data.train_windows);
    s.val_w = std::move(data.val_windows);
    s.test_w = std::move(data.test_windows);
    s.tc.epochs = 10;
    s.tc.batch_size = 32;
    s.tc.lr = 5e-3;
    s.tc.lr_schedule = LrSchedule::Constant;
    return s;
}

// Minimal Adam loop for the linear baseline, with and without the
// grafted embedding.
double train_host(const SynthStudy& s, bool plugged) {
    const std::size_t t = s.model.lookback, horizon = s.model.horizon;
    LinearHostParams host = init_linear_host(t, horizon, 0);
    ModelConfig embed_cfg = s.model;
    CrossCorrParams cross = init_params(embed_cfg).cross;

    std::vector<ParamView> views = host.views();
    if (plugged) {
        views.push_back(cross.kernel.param_view("plug_kernel"));
        views.push_back(cross.bias.param_view("plug_bias"));
        views.push_back(cross.alpha.param_view("plug_alpha"));
    }
    AdamState adam;
    adam.lr = 3e-3;
    adam.init(views);

    std::vector<std::size_t> order(s.train_w.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(0);
    const std::size_t batch = 32;
    for (std::size_t epoch = 0; epoch < 15; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t lo = 0; lo < order.size(); lo += batch) {
            const std::size_t hi = std::min(lo + batch, order.size());
            for (const auto& v : views)
                std::fill(v.grad, v.grad + v.count, 0.0);
            for (std::size_t i = lo; i < hi; ++i) {
                const WindowSample& w = s.train_w[order[i]];
                Graph g;
                Tensor pred = plugged
                                  ? linear_host_plugged(g, w.endo_look, w.exo_look, host, cross)
                                  : linear_host_forward(g, w.endo_look, host);
                Scalar loss = mse(g, pred, w.endo_target);
                g.backward(loss);
            }
            const double inv = 1.0 / static_cast<double>(hi - lo);
            for (const auto& v : views)
                for (std::size_t k = 0; k < v.count; ++k) v.grad[k] *= inv;
            adam_step(views, adam);
        }
    }

    double se = 0.0;
    std::size_t n = 0;
    for (const WindowSample& w : s.test_w) {
        Graph g;
        Tensor pred = plugged ? linear_host_plugged(g, w.endo_look, w.exo_look, host, cross)
                              : linear_host_forward(g, w.endo_look, host);
        for (std::size_t j = 0; j < horizon; ++j) {
            const double d = pred(0, j) - w.endo_target(0, j);
            se += d * d;
            ++n;
        }
    }
    return se / static_cast<double>(n);
}

void criterion_5() {
    const auto start = std::chrono::steady_clock::now();
    SynthStudy s = make_synth_study();

    ModelConfig sum_cfg = s.model;
    sum_cfg.variant = EmbedVariant::Sum;
    auto [sum_params, sum_report] = train(sum_cfg, s.tc, s.train_w, s.val_w, s.test_w);

    ModelConfig endo_cfg = s.model;
    endo_cfg.variant = EmbedVariant::EndoOnly;
    auto [endo_params, endo_report] = train(endo_cfg, s.tc, s.train_w, s.val_w, s.test_w);

    const double host_plain = train_host(s, false);
    const double host_plugged = train_host(s, true);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ostringstream detail;
    detail << "sum " << sum_report.test_mse << " vs endo-only " << endo_report.test_mse
           << "; host " << host_plain << " vs plugged " << host_plugged << "; " << secs
           << " s";
    const bool ok = sum_report.test_mse <= 0.6 * endo_report.test_mse &&
                    host_plugged < host_plain && secs < 300.0;
    report(5, "exogenous embedding beats endo-only and lifts the linear baseline", ok,
           detail.str());
}

// ---- 6 & 7. ETTh1 reproduction and mask ordering ----------------------------

RunConfig etth1_config() {
    RunConfig cfg;
    cfg.csv_path = etth1_path();
    cfg.split = SplitSpec{8545, 2881, 2881, true};
    cfg.model = default_model(7); // resolved from data; endo = last column
    cfg.train.epochs = 10;
    cfg.train.batch_size = 32;
    cfg.train.lr = 5e-4;
    return cfg;
}

void criterion_6(bool etth1_present) {
    const std::string name = "ETTh1 96->96 lands near the published accuracy";
    if (!etth1_present) {
        report_skip(6, name, "dataset file not provided: " + etth1_path());
        return;
    }
    const auto start = std::chrono::steady_clock::now();
    nlohmann::json doc = run_train(etth1_config(), false);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const double mse_v = doc["metrics"]["test_mse"].get<double>();
    const double mae_v = doc["metrics"]["test_mae"].get<double>();
    std::ostringstream detail;
    detail << "MSE " << mse_v << ", MAE " << mae_v << ", " << secs << " s";
    const bool ok = mse_v >= 0.050 && mse_v <= 0.070 && mae_v >= 0.165 && mae_v <= 0.200 &&
                    secs < 600.0;
    report(6, name, ok, detail.str());
}

void criterion_7(bool etth1_present) {
    RunConfig cfg;
    cfg.synthetic = SynthSpec{.n_vars = 5, .length = 2000, .lag = 3, .noise_std = 0.1,
                              .seed = 0};
    cfg.split = SplitSpec{0.7, 0.1, 0.2, false};
    cfg.model.lookback = 48;
    cfg.model.horizon = 12;
    cfg.model.patch_len = 12;
    cfg.model.hidden_dim = 32;
    cfg.train.epochs = 5;
    cfg.train.batch_size = 32;
    nlohmann::json doc = run_mask_study(cfg, false);

    bool grid_ok = doc["grid"].size() == 9;
    double none_mse = doc["grid"][0]["test_mse"].get<double>();
    double full_endo_zero = -1.0;
    for (const auto& row : doc["grid"]) {
        if (row["mask"] == "zero/endo" && row.contains("ratio") &&
            row["ratio"].get<double>() == 1.0) {
            full_endo_zero = row["test_mse"].get<double>();
        }
    }
    bool ordering = full_endo_zero > none_mse;

    std::ostringstream detail;
    detail << "no-mask " << none_mse << " vs full-endo-zero " << full_endo_zero;

    if (etth1_present) {
        RunConfig ecfg = etth1_config();
        ecfg.train.epochs = 5;
        nlohmann::json edoc = run_mask_study(ecfg, false);
        double enone = edoc["grid"][0]["test_mse"].get<double>();
        double efull = -1.0;
        for (const auto& row : edoc["grid"]) {
            if (row["mask"] == "zero/endo" && row.contains("ratio") &&
                row["ratio"].get<double>() == 1.0) {
                efull = row["test_mse"].get<double>();
            }
        }
        ordering = ordering && efull > enone;
        detail << "; ETTh1 " << enone << " vs " << efull;
    } else {
        detail << "; ETTh1 leg skipped (no dataset)";
    }
    report(7, "masking the endogenous history strictly hurts accuracy", grid_ok && ordering,
           detail.str());
}

// ---- 8. linear-time scaling -------------------------------------------------

double mean_forward_seconds(std::size_t lookback, int calls) {
    ModelConfig m = default_model(8);
    m.lookback = lookback;
    CrossLinearParams params = init_params(m);
    std::mt19937_64 rng(8);
    Tensor endo = random_matrix(rng, 1, lookback);
    Tensor exo = random_matrix(rng, m.n_vars - 1, lookback);
    volatile double sink = 0.0;
    // Warmup.
    for (int i = 0; i < 10; ++i) {
        Graph g;
        sink = sink + forward_m2o(g, endo, exo, params, m).pred(0, 0);
    }
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < calls; ++i) {
        Graph g;
        sink = sink + forward_m2o(g, endo, exo, params, m).pred(0, 0);
    }
    (void)sink;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() /
           calls;
}

void criterion_8() {
    bool ok = true;
    std::ostringstream detail;
    for (std::size_t t : {96u, 192u, 384u}) {
        // Best of three repetitions per size: a one-off scheduler stall
        // should not fail a complexity claim.
        double ratio = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < 3; ++rep) {
            const double base = mean_forward_seconds(t, 100);
            const double doubled = mean_forward_seconds(2 * t, 100);
            ratio = std::min(ratio, doubled / base);
        }
        if (!(ratio < 2.5)) ok = false;
        detail << "T=" << t << " ratio " << ratio << "  ";
    }
    report(8, "doubling the lookback less than 2.5x-es the forward time", ok, detail.str());
}

// ---- 9. determinism and persistence -----------------------------------------

void criterion_9() {
    RunConfig cfg;
    cfg.synthetic = SynthSpec{.n_vars = 3, .length = 400, .lag = 1, .noise_std = 0.1,
                              .seed = 0};
    cfg.split = SplitSpec{0.7, 0.15, 0.15, false};
    cfg.model.lookback = 24;
    cfg.model.horizon = 8;
    cfg.model.patch_len = 8;
    cfg.model.hidden_dim = 8;
    cfg.train.epochs = 3;
    cfg.train.batch_size = 8;

    nlohmann::json a = run_train(cfg, false);
    nlohmann::json b = run_train(cfg, false);
    // epoch_seconds is wall time and legitimately varies; everything
    // numeric must be byte-identical.
    nlohmann::json ra = a["report"], rb = b["report"];
    ra.erase("epoch_seconds");
    rb.erase("epoch_seconds");
    const bool metrics_identical = a["metrics"].dump() == b["metrics"].dump() &&
                                   ra.dump() == rb.dump();

    // Checkpoint round trip on the same problem.
    ModelConfig m = cfg.model;
    PreparedData data = prepare_data(cfg, m);
    auto [params, train_report] =
        train(m, cfg.train, data.train_windows, data.val_windows, data.test_windows);
    auto [mse_before, mae_before] = evaluate(params, m, data.test_windows);
    const std::string path = "/tmp/crosslinear_acceptance_ckpt.json";
    save_checkpoint(params, m, path);
    auto [loaded, loaded_cfg] = load_checkpoint(path);
    auto [mse_after, mae_after] = evaluate(loaded, loaded_cfg, data.test_windows);
    std::remove(path.c_str());
    const bool roundtrip_identical = mse_before == mse_after && mae_before == mae_after;

    std::ostringstream detail;
    detail << (metrics_identical ? "metrics byte-identical" : "metrics differ") << "; "
           << (roundtrip_identical ? "round trip bit-exact" : "round trip differs");
    report(9, "seeded runs and checkpoint round trips reproduce exactly",
           metrics_identical && roundtrip_identical, detail.str());
}

} // namespace

int main() {
    const bool etth1_present = fs::exists(etth1_path());
    try {
        criterion_1();
        criterion_2();
        criterion_3();
        criterion_4();
        criterion_5();
        criterion_6(etth1_present);
        criterion_7(etth1_present);
        criterion_8();
        criterion_9();
    } catch (const std::exception& e) {
        std::cout << "[FAIL] unhandled error: " << e.what() << std::endl;
        ++g_failures;
    }
    std::cout << (g_failures == 0 ? "acceptance: all criteria satisfied"
                                  : "acceptance: FAILURES above")
              << std::endl;
    return g_failures;
}
