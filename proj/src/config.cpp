#include "ipae/config.hpp"

#include <array>
#include <cmath>
#include <string_view>

#include "ipae/errors.hpp"

namespace ipae {

using nlohmann::json;

TrainConfig TrainConfig::toy() { return {}; }

TrainConfig TrainConfig::mnist() {
    TrainConfig c;
    c.codec = CodecSpec::mnist();
    c.distortion = DistortionKind::Bernoulli;
    c.holdout = 0.0;
    return c;
}

void TrainConfig::validate() const {
    if (codec.hidden_dim == 0) throw ValidationError("hidden_dim", "must be positive");
    if (codec.latent_dim == 0) throw ValidationError("latent_dim", "must be positive");
    if (!(reg.beta >= 0.0) || !std::isfinite(reg.beta)) throw ValidationError("beta", "must be a finite value >= 0");
    if (reg.samples < 1) throw ValidationError("K", "must be >= 1");
    if (reg.partners < 1) throw ValidationError("Nj", "must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size", "must be >= 1");
    if (reg.kind == RegularizerKind::InformationPotential && batch_size < 2) {
        throw ValidationError("batch_size", "must be >= 2 for the information_potential regularizer");
    }
    if (reg.partners > batch_size) throw ValidationError("Nj", "must not exceed batch_size");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("lr", "must be a finite value > 0");
    if (total_batches < 1) throw ValidationError("total_batches", "must be >= 1");
    if (log_every < 1) throw ValidationError("log_every", "must be >= 1");
    if (!(holdout >= 0.0 && holdout < 1.0)) throw ValidationError("holdout", "must lie in [0, 1)");
}

namespace {

constexpr std::array<std::string_view, 14> kKeys = {
    "preset", "hidden_dim", "latent_dim", "regularizer", "beta", "K", "Nj",
    "distortion", "lr", "batch_size", "total_batches", "seed", "log_every", "holdout"};

template <typename T>
T get_field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(key, "has the wrong type");
    }
}

std::size_t get_count(const json& j, const char* key) {
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ValidationError(key, "must be a non-negative integer");
    return v.get<std::size_t>();
}

}  // namespace

TrainConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("<root>", "config must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (std::string_view k : kKeys) known = known || k == key;
        if (!known) throw ValidationError(key, "unknown key");
    }

    const std::string preset = j.contains("preset") ? get_field<std::string>(j, "preset") : "toy";
    TrainConfig c;
    if (preset == "toy") {
        c = TrainConfig::toy();
    } else if (preset == "mnist") {
        c = TrainConfig::mnist();
    } else {
        throw ValidationError("preset", "must be 'toy' or 'mnist', got '" + preset + "'");
    }

    if (j.contains("hidden_dim")) c.codec.hidden_dim = get_count(j, "hidden_dim");
    if (j.contains("latent_dim")) c.codec.latent_dim = get_count(j, "latent_dim");
    if (j.contains("regularizer")) {
        const auto name = get_field<std::string>(j, "regularizer");
        try {
            c.reg.kind = regularizer_from_string(name);
        } catch (const ContractError&) {
            throw ValidationError("regularizer", "unknown kind '" + name +
                                                     "' (expected none, parametric or information_potential)");
        }
    }
    if (j.contains("beta")) c.reg.beta = get_field<double>(j, "beta");
    if (j.contains("K")) c.reg.samples = get_count(j, "K");
    if (j.contains("Nj")) c.reg.partners = get_count(j, "Nj");
    if (j.contains("distortion")) {
        const auto name = get_field<std::string>(j, "distortion");
        try {
            c.distortion = distortion_from_string(name);
        } catch (const ContractError&) {
            throw ValidationError("distortion", "unknown kind '" + name + "' (expected mse or bernoulli)");
        }
    }
    if (j.contains("lr")) c.lr = get_field<double>(j, "lr");
    if (j.contains("batch_size")) c.batch_size = get_count(j, "batch_size");
    if (j.contains("total_batches")) c.total_batches = get_count(j, "total_batches");
    if (j.contains("seed")) {
        const json& v = j.at("seed");
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw ValidationError("seed", "must be a non-negative integer");
        }
        c.seed = v.get<std::uint64_t>();
    }
    if (j.contains("log_every")) c.log_every = get_count(j, "log_every");
    if (j.contains("holdout")) c.holdout = get_field<double>(j, "holdout");
    c.validate();
    return c;
}

TrainConfig config_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("<root>", std::string("invalid JSON: ") + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const TrainConfig& c) {
    return json{{"preset", c.codec.preset},
                {"hidden_dim", c.codec.hidden_dim},
                {"latent_dim", c.codec.latent_dim},
                {"regularizer", std::string(to_string(c.reg.kind))},
                {"beta", c.reg.beta},
                {"K", c.reg.samples},
                {"Nj", c.reg.partners},
                {"distortion", std::string(to_string(c.distortion))},
                {"lr", c.lr},
                {"batch_size", c.batch_size},
                {"total_batches", c.total_batches},
                {"seed", c.seed},
                {"log_every", c.log_every},
                {"holdout", c.holdout}};
}

}  // namespace ipae
