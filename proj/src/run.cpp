#include "crosslinear/run.hpp"
#include "crosslinear/train.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace crosslinear {

using nlohmann::json;

namespace {

constexpr const char* kArtifactVersion = "0.1.0";

std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

json config_echo(const RunConfig& c) {
    json dataset = json::object();
    if (c.csv_path) dataset["csv"] = *c.csv_path;
    if (c.synthetic) dataset["synthetic"] = synth_spec_to_json(*c.synthetic);
    if (c.endo_index) dataset["endo_index"] = *c.endo_index;
    json masks = json::array();
    for (const auto& m : c.masks) masks.push_back(mask_spec_to_json(m));
    return json{{"dataset", dataset},
                {"split", split_spec_to_json(c.split)},
                {"model", model_config_to_json(c.model)},
                {"train", train_config_to_json(c.train)},
                {"masks", masks},
                {"out_dir", c.out_dir},
                {"raw_units", c.raw_units},
                {"dataset_zscore", c.dataset_zscore}};
}

json provenance(const RunConfig& c) {
    return json{{"seed", c.model.seed},
                {"artifact_version", kArtifactVersion},
                {"timestamp", timestamp_now()}};
}

json report_to_json(const TrainReport& r) {
    return json{{"train_loss", r.train_loss}, {"val_mse", r.val_mse},
                {"val_mae", r.val_mae},       {"epoch_seconds", r.epoch_seconds},
                {"best_epoch", r.best_epoch}, {"test_mse", r.test_mse},
                {"test_mae", r.test_mae},     {"param_count", r.param_count}};
}

/// MSE/MAE with each prediction/target element scaled back to raw units
/// by the variable's train-split standard deviation.
std::pair<double, double> evaluate_raw(CrossLinearParams& params, const ModelConfig& config,
                                       const std::vector<WindowSample>& windows,
                                       const PreparedData& data) {
    if (windows.empty()) throw ContractError("evaluate: empty window set");
    std::vector<double> sigma;
    if (config.mode == ForecastMode::ManyToOne) {
        sigma.push_back(data.stats.std[config.endo_index]);
    } else {
        sigma = data.stats.std;
    }
    double sq = 0.0, ab = 0.0;
    std::size_t n = 0;
    for (const auto& w : windows) {
        Tensor pred = predict(w, params, config);
        const std::size_t rows = pred.dim(0), cols = pred.dim(1);
        for (std::size_t i = 0; i < rows; ++i) {
            // m2m rows follow original variable order
            const double s = sigma[config.mode == ForecastMode::ManyToOne ? 0 : i];
            for (std::size_t j = 0; j < cols; ++j) {
                const double target = config.mode == ForecastMode::ManyToOne
                                          ? w.endo_target(0, j)
                                          : (i == config.endo_index
                                                 ? w.endo_target(0, j)
                                                 : w.exo_target(i < config.endo_index ? i : i - 1, j));
                const double d = (pred(i, j) - target) * s;
                sq += d * d;
                ab += std::abs(d);
            }
        }
        n += rows * cols;
    }
    return {sq / static_cast<double>(n), ab / static_cast<double>(n)};
}

void write_doc(const json& doc, const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream out(std::filesystem::path(dir) / name);
    if (!out) throw ConfigError("cannot write " + dir + "/" + name);
    out << doc.dump(1) << "\n";
}

} // namespace

RunConfig run_config_from_json(const json& j) {
    require_known_keys(j,
                       {"dataset", "split", "model", "train", "masks", "out_dir", "raw_units",
                        "dataset_zscore"},
                       "config");
    RunConfig c;
    if (j.contains("dataset")) {
        const auto& d = j["dataset"];
        require_known_keys(d, {"csv", "synthetic", "endo_index"}, "config.dataset");
        if (d.contains("csv")) c.csv_path = d["csv"].get<std::string>();
        if (d.contains("synthetic")) {
            c.synthetic = synth_spec_from_json(d["synthetic"], "config.dataset.synthetic");
        }
        if (d.contains("endo_index")) c.endo_index = d["endo_index"].get<std::size_t>();
        if (c.csv_path.has_value() == c.synthetic.has_value()) {
            throw ConfigError("config.dataset: exactly one of csv / synthetic required");
        }
    } else {
        throw ConfigError("config: missing dataset section");
    }
    if (j.contains("split")) c.split = split_spec_from_json(j["split"], "config.split");
    if (j.contains("model")) c.model = model_config_from_json(j["model"], "config.model");
    if (j.contains("train")) c.train = train_config_from_json(j["train"], "config.train");
    if (j.contains("masks")) {
        for (std::size_t i = 0; i < j["masks"].size(); ++i) {
            c.masks.push_back(
                mask_spec_from_json(j["masks"][i], "config.masks[" + std::to_string(i) + "]"));
        }
    }
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("raw_units")) c.raw_units = j["raw_units"].get<bool>();
    if (j.contains("dataset_zscore")) c.dataset_zscore = j["dataset_zscore"].get<bool>();
    return c;
}

RunConfig run_config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return run_config_from_json(j);
}

PreparedData prepare_data(const RunConfig& config, ModelConfig& model) {
    PreparedData data;
    SeriesFrame frame =
        config.csv_path ? load_csv(*config.csv_path) : synth_exo_driven(*config.synthetic);
    if (config.endo_index) {
        if (*config.endo_index >= frame.n_vars()) {
            throw ConfigError("config.dataset.endo_index out of range");
        }
        frame.endo_index = *config.endo_index;
    }
    model.n_vars = frame.n_vars();
    model.endo_index = frame.endo_index;
    model.validate();

    const auto lens = config.split.resolve(frame.length());
    if (config.dataset_zscore) {
        SplitSpec abs_spec{static_cast<double>(lens[0]), static_cast<double>(lens[1]),
                           static_cast<double>(lens[2]), true};
        data.stats = zscore_fit(chrono_split(frame, abs_spec)[0]);
        frame = zscore_apply(frame, data.stats);
    } else {
        data.stats.mean.assign(frame.n_vars(), 0.0);
        data.stats.std.assign(frame.n_vars(), 1.0);
    }
    data.var_names = frame.names;

    const std::size_t t = model.lookback, s = model.horizon;
    data.train_windows = window_iter(frame, t, s, 1, t, lens[0]);
    data.val_windows = window_iter(frame, t, s, 1, lens[0], lens[0] + lens[1]);
    data.test_windows = window_iter(frame, t, s, 1, lens[0] + lens[1], lens[0] + lens[1] + lens[2]);
    data.frame = std::move(frame);
    return data;
}

json run_train(const RunConfig& config, bool write_outputs) {
    RunConfig c = config;
    PreparedData data = prepare_data(c, c.model);
    auto [params, report] = train(c.model, c.train, data.train_windows, data.val_windows,
                                  data.test_windows);

    json doc;
    doc["format_version"] = 1;
    doc["command"] = "train";
    doc["config"] = config_echo(c);
    doc["report"] = report_to_json(report);
    doc["metrics"] = json{{"test_mse", report.test_mse},
                          {"test_mae", report.test_mae},
                          {"n_patches", c.model.n_patches()},
                          {"param_count", report.param_count}};
    if (c.raw_units && !data.test_windows.empty()) {
        auto [raw_mse, raw_mae] = evaluate_raw(params, c.model, data.test_windows, data);
        doc["metrics"]["test_mse_raw"] = raw_mse;
        doc["metrics"]["test_mae_raw"] = raw_mae;
    }
    doc["provenance"] = provenance(c);
    if (write_outputs) {
        write_doc(doc, c.out_dir, "result.json");
        std::filesystem::create_directories(c.out_dir);
        save_checkpoint(params, c.model,
                        (std::filesystem::path(c.out_dir) / "checkpoint.json").string(),
                        &data.var_names);
    }
    std::cout << "test MSE " << report.test_mse << "  MAE " << report.test_mae << "\n";
    return doc;
}

json run_ablate(const RunConfig& config, bool write_outputs) {
    static constexpr EmbedVariant kVariants[] = {EmbedVariant::Sum, EmbedVariant::EndoOnly,
                                                 EmbedVariant::CrossOnly, EmbedVariant::Concat};
    RunConfig c = config;
    json rows = json::array();
    for (EmbedVariant v : kVariants) {
        RunConfig vc = c;
        vc.model.variant = v;
        PreparedData data = prepare_data(vc, vc.model);
        auto [params, report] = train(vc.model, vc.train, data.train_windows, data.val_windows,
                                      data.test_windows);
        rows.push_back(json{{"variant", to_string(v)},
                            {"test_mse", report.test_mse},
                            {"test_mae", report.test_mae},
                            {"best_epoch", report.best_epoch}});
        std::cout << to_string(v) << ": test MSE " << report.test_mse << "  MAE "
                  << report.test_mae << "\n";
    }
    json doc;
    doc["format_version"] = 1;
    doc["command"] = "ablate";
    doc["config"] = config_echo(c);
    doc["variants"] = rows;
    doc["provenance"] = provenance(c);
    if (write_outputs) write_doc(doc, c.out_dir, "ablation.json");
    return doc;
}

json run_mask_study(const RunConfig& config, bool write_outputs) {
    RunConfig c = config;
    PreparedData data = prepare_data(c, c.model);
    auto [params, report] = train(c.model, c.train, data.train_windows, data.val_windows,
                                  data.test_windows);

    json rows = json::array();
    rows.push_back(json{{"mask", "none"},
                        {"test_mse", report.test_mse},
                        {"test_mae", report.test_mae}});
    for (MaskFill fill : {MaskFill::Zero, MaskFill::GaussianStdNormal}) {
        for (MaskTarget target : {MaskTarget::Endo, MaskTarget::Exo}) {
            for (double ratio : {0.5, 1.0}) {
                MaskSpec spec;
                spec.fill = fill;
                spec.target = target;
                spec.ratio = ratio;
                spec.seed = c.train.seed;
                auto [mse_v, mae_v] = evaluate(params, c.model, data.test_windows, &spec);
                rows.push_back(json{{"mask", to_string(fill) + "/" + to_string(target)},
                                    {"ratio", ratio},
                                    {"test_mse", mse_v},
                                    {"test_mae", mae_v}});
            }
        }
    }
    json doc;
    doc["format_version"] = 1;
    doc["command"] = "mask-study";
    doc["config"] = config_echo(c);
    doc["grid"] = rows;
    doc["provenance"] = provenance(c);
    if (write_outputs) write_doc(doc, c.out_dir, "mask_study.json");
    for (const auto& row : rows) {
        std::cout << row["mask"].get<std::string>()
                  << (row.contains("ratio") ? "@" + std::to_string(row["ratio"].get<double>()) : "")
                  << ": MSE " << row["test_mse"].get<double>() << "\n";
    }
    return doc;
}

bool run_gradcheck(const ModelConfig& model, std::ostream& out,
                   const std::vector<std::uint64_t>& seeds) {
    bool all_ok = true;
    for (std::uint64_t seed : seeds) {
        ModelConfig cfg = model;
        cfg.seed = seed;
        CrossLinearParams params = init_params(cfg);

        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        auto random_tensor = [&](std::vector<std::size_t> shape) {
            Tensor t(std::move(shape));
            for (auto& v : t.data()) v = dist(rng);
            return t;
        };
        const std::size_t n_exo = cfg.n_vars - 1;
        Tensor endo = random_tensor({1, cfg.lookback});
        Tensor exo = random_tensor({n_exo, cfg.lookback});
        Tensor full = random_tensor({cfg.n_vars, cfg.lookback});
        Tensor target_m2o = random_tensor({1, cfg.horizon});
        Tensor target_m2m = random_tensor({cfg.n_vars, cfg.horizon});

        auto objective = [&]() {
            Graph g;
            Scalar loss = cfg.mode == ForecastMode::ManyToOne
                              ? loss_m2o(g, forward_m2o(g, endo, exo, params, cfg).pred,
                                         target_m2o)
                              : loss_m2m(g, forward_m2m(g, full, params, cfg).pred, target_m2m);
            return loss.value();
        };

        auto views = params.views();
        for (const auto& v : views) std::fill(v.grad, v.grad + v.count, 0.0);
        {
            Graph g;
            Scalar loss = cfg.mode == ForecastMode::ManyToOne
                              ? loss_m2o(g, forward_m2o(g, endo, exo, params, cfg).pred,
                                         target_m2o)
                              : loss_m2m(g, forward_m2m(g, full, params, cfg).pred, target_m2m);
            g.backward(loss);
        }
        for (const auto& v : views) {
            // The objective is quadratic in every individual parameter, so
            // central differences carry no truncation error and a larger
            // step only suppresses floating-point cancellation.
            const double err = finite_diff_check(objective, std::span(&v, 1), 1e-5);
            const bool ok = err < 1e-4;
            all_ok = all_ok && ok;
            out << "seed " << seed << "  " << v.name << "  max_rel_err " << err << "  "
                << (ok ? "ok" : "FAIL") << "\n";
        }
    }
    return all_ok;
}

void export_weights(const std::string& checkpoint_path, const std::string& csv_path) {
    std::ifstream in(checkpoint_path);
    if (!in) throw CheckpointError("cannot read checkpoint " + checkpoint_path);
    json doc;
    in >> doc;
    auto [params, config] = load_checkpoint(checkpoint_path);
    Tensor matrix = correlation_matrix(params.cross);

    std::vector<std::string> names;
    if (doc.contains("var_names")) names = doc["var_names"].get<std::vector<std::string>>();
    while (names.size() < config.n_vars) names.push_back("var" + std::to_string(names.size()));

    std::ofstream out(csv_path);
    if (!out) throw CheckpointError("cannot write " + csv_path);
    for (std::size_t j = 0; j < config.n_vars; ++j) out << "," << names[j];
    out << "\n";
    const std::size_t c_out = matrix.dim(0);
    char buf[40];
    for (std::size_t i = 0; i < c_out; ++i) {
        out << (c_out == config.n_vars ? names[i] : "endo");
        for (std::size_t j = 0; j < config.n_vars; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", matrix(i, j));
            out << "," << buf;
        }
        out << "\n";
    }
}

void run_synth(const SynthSpec& spec, const std::string& csv_path) {
    save_csv(synth_exo_driven(spec), csv_path);
}

} // namespace crosslinear
