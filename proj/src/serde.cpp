#include "crosslinear/serde.hpp"

namespace crosslinear {

using nlohmann::json;

void require_known_keys(const json& obj, const std::vector<std::string>& allowed,
                        const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
            throw ConfigError("unknown key \"" + path + "." + it.key() + "\"");
        }
    }
}

std::string to_string(EmbedVariant v) {
    switch (v) {
    case EmbedVariant::Sum: return "sum";
    case EmbedVariant::EndoOnly: return "endo_only";
    case EmbedVariant::CrossOnly: return "cross_only";
    case EmbedVariant::Concat: return "concat";
    }
    return "?";
}

EmbedVariant variant_from_string(const std::string& s) {
    if (s == "sum") return EmbedVariant::Sum;
    if (s == "endo_only") return EmbedVariant::EndoOnly;
    if (s == "cross_only") return EmbedVariant::CrossOnly;
    if (s == "concat") return EmbedVariant::Concat;
    throw ConfigError("unknown embedding variant \"" + s + "\"");
}

std::string to_string(ForecastMode m) {
    return m == ForecastMode::ManyToOne ? "many_to_one" : "many_to_many";
}

std::string to_string(PosEmbMode m) {
    return m == PosEmbMode::LearnableSinusoidalInit ? "learnable" : "fixed";
}

std::string to_string(LrSchedule s) {
    return s == LrSchedule::Constant ? "constant" : "halve_each_epoch";
}

std::string to_string(MaskTarget t) { return t == MaskTarget::Endo ? "endo" : "exo"; }
std::string to_string(MaskFill f) { return f == MaskFill::Zero ? "zero" : "gaussian"; }

json model_config_to_json(const ModelConfig& c) {
    return json{{"lookback", c.lookback},
                {"horizon", c.horizon},
                {"patch_len", c.patch_len},
                {"hidden_dim", c.hidden_dim},
                {"n_vars", c.n_vars},
                {"endo_index", c.endo_index},
                {"variant", to_string(c.variant)},
                {"mode", to_string(c.mode)},
                {"kernel_size", c.kernel_size},
                {"alpha_init", c.alpha_init},
                {"beta_init", c.beta_init},
                {"pe_mode", to_string(c.pe_mode)},
                {"eps", c.eps},
                {"seed", c.seed}};
}

ModelConfig model_config_from_json(const json& j, const std::string& path) {
    require_known_keys(j,
                       {"lookback", "horizon", "patch_len", "hidden_dim", "n_vars",
                        "endo_index", "variant", "mode", "kernel_size", "alpha_init",
                        "beta_init", "pe_mode", "eps", "seed"},
                       path);
    ModelConfig c;
    if (j.contains("lookback")) c.lookback = j["lookback"].get<std::size_t>();
    if (j.contains("horizon")) c.horizon = j["horizon"].get<std::size_t>();
    if (j.contains("patch_len")) c.patch_len = j["patch_len"].get<std::size_t>();
    if (j.contains("hidden_dim")) c.hidden_dim = j["hidden_dim"].get<std::size_t>();
    if (j.contains("n_vars")) c.n_vars = j["n_vars"].get<std::size_t>();
    if (j.contains("endo_index")) c.endo_index = j["endo_index"].get<std::size_t>();
    if (j.contains("variant")) c.variant = variant_from_string(j["variant"].get<std::string>());
    if (j.contains("mode")) {
        const auto s = j["mode"].get<std::string>();
        if (s == "many_to_one") c.mode = ForecastMode::ManyToOne;
        else if (s == "many_to_many") c.mode = ForecastMode::ManyToMany;
        else throw ConfigError(path + ".mode: unknown value \"" + s + "\"");
    }
    if (j.contains("kernel_size")) c.kernel_size = j["kernel_size"].get<std::size_t>();
    if (j.contains("alpha_init")) c.alpha_init = j["alpha_init"].get<double>();
    if (j.contains("beta_init")) c.beta_init = j["beta_init"].get<double>();
    if (j.contains("pe_mode")) {
        const auto s = j["pe_mode"].get<std::string>();
        if (s == "learnable") c.pe_mode = PosEmbMode::LearnableSinusoidalInit;
        else if (s == "fixed") c.pe_mode = PosEmbMode::FixedSinusoidal;
        else throw ConfigError(path + ".pe_mode: unknown value \"" + s + "\"");
    }
    if (j.contains("eps")) c.eps = j["eps"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    c.validate();
    return c;
}

json train_config_to_json(const TrainConfig& c) {
    return json{{"lr", c.lr},
                {"batch_size", c.batch_size},
                {"epochs", c.epochs},
                {"lr_schedule", to_string(c.lr_schedule)},
                {"seed", c.seed},
                {"shuffle_train", c.shuffle_train}};
}

TrainConfig train_config_from_json(const json& j, const std::string& path) {
    require_known_keys(j, {"lr", "batch_size", "epochs", "lr_schedule", "seed", "shuffle_train"},
                       path);
    TrainConfig c;
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("lr_schedule")) {
        const auto s = j["lr_schedule"].get<std::string>();
        if (s == "constant") c.lr_schedule = LrSchedule::Constant;
        else if (s == "halve_each_epoch") c.lr_schedule = LrSchedule::HalveEachEpoch;
        else throw ConfigError(path + ".lr_schedule: unknown value \"" + s + "\"");
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("shuffle_train")) c.shuffle_train = j["shuffle_train"].get<bool>();
    if (c.lr < 1e-5 || c.lr > 1e-3) {
        std::fprintf(stderr, "warning: %s.lr = %g outside the usual [1e-5, 1e-3] range\n",
                     path.c_str(), c.lr);
    }
    if (c.batch_size < 8 || c.batch_size > 64) {
        std::fprintf(stderr, "warning: %s.batch_size = %zu outside the usual [8, 64] range\n",
                     path.c_str(), c.batch_size);
    }
    return c;
}

json split_spec_to_json(const SplitSpec& s) {
    return json{{"train", s.train}, {"val", s.val}, {"test", s.test}, {"absolute", s.absolute}};
}

SplitSpec split_spec_from_json(const json& j, const std::string& path) {
    require_known_keys(j, {"train", "val", "test", "absolute"}, path);
    SplitSpec s;
    if (j.contains("train")) s.train = j["train"].get<double>();
    if (j.contains("val")) s.val = j["val"].get<double>();
    if (j.contains("test")) s.test = j["test"].get<double>();
    if (j.contains("absolute")) s.absolute = j["absolute"].get<bool>();
    return s;
}

json mask_spec_to_json(const MaskSpec& m) {
    return json{{"target", to_string(m.target)},
                {"ratio", m.ratio},
                {"fill", to_string(m.fill)},
                {"seed", m.seed},
                {"per_cell", m.per_cell}};
}

MaskSpec mask_spec_from_json(const json& j, const std::string& path) {
    require_known_keys(j, {"target", "ratio", "fill", "seed", "per_cell"}, path);
    MaskSpec m;
    if (j.contains("target")) {
        const auto s = j["target"].get<std::string>();
        if (s == "endo") m.target = MaskTarget::Endo;
        else if (s == "exo") m.target = MaskTarget::Exo;
        else throw ConfigError(path + ".target: unknown value \"" + s + "\"");
    }
    if (j.contains("ratio")) m.ratio = j["ratio"].get<double>();
    if (m.ratio < 0.0 || m.ratio > 1.0) throw ConfigError(path + ".ratio: must be in [0, 1]");
    if (j.contains("fill")) {
        const auto s = j["fill"].get<std::string>();
        if (s == "zero") m.fill = MaskFill::Zero;
        else if (s == "gaussian") m.fill = MaskFill::GaussianStdNormal;
        else throw ConfigError(path + ".fill: unknown value \"" + s + "\"");
    }
    if (j.contains("seed")) m.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("per_cell")) m.per_cell = j["per_cell"].get<bool>();
    return m;
}

json synth_spec_to_json(const SynthSpec& s) {
    return json{{"n_vars", s.n_vars}, {"length", s.length},   {"weights", s.weights},
                {"lag", s.lag},       {"noise_std", s.noise_std}, {"seed", s.seed}};
}

SynthSpec synth_spec_from_json(const json& j, const std::string& path) {
    require_known_keys(j, {"n_vars", "length", "weights", "lag", "noise_std", "seed"}, path);
    SynthSpec s;
    if (j.contains("n_vars")) s.n_vars = j["n_vars"].get<std::size_t>();
    if (j.contains("length")) s.length = j["length"].get<std::size_t>();
    if (j.contains("weights")) s.weights = j["weights"].get<std::vector<double>>();
    if (j.contains("lag")) s.lag = j["lag"].get<std::size_t>();
    if (j.contains("noise_std")) s.noise_std = j["noise_std"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    return s;
}

} // namespace crosslinear
