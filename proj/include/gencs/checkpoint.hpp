#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "gencs/errors.hpp"
#include "gencs/models.hpp"

namespace gencs {

inline constexpr int kCheckpointVersion = 1;

/// Trained networks plus enough metadata to reproduce the run: the sensing
/// seed regenerates A, and the config/losses echo what produced the weights.
struct Checkpoint {
    int version = kCheckpointVersion;
    GeneratorNet generator;
    std::optional<DiscriminatorNet> discriminator;
    std::uint64_t sensing_seed = 0;
    nlohmann::json train_config = nlohmann::json::object();
    nlohmann::json final_losses = nlohmann::json::object();
};

namespace detail {

inline nlohmann::json spec_to_json(const MlpSpec& spec) {
    nlohmann::json j;
    j["layer_widths"] = spec.layer_widths;
    std::vector<std::string> acts;
    for (Activation a : spec.activations) acts.emplace_back(activation_name(a));
    j["activations"] = acts;
    return j;
}

inline MlpSpec spec_from_json(const nlohmann::json& j) {
    MlpSpec spec;
    spec.layer_widths = j.at("layer_widths").get<std::vector<int>>();
    for (const auto& a : j.at("activations")) {
        spec.activations.push_back(activation_from_name(a.get<std::string>()));
    }
    validate_spec(spec);
    return spec;
}

} // namespace detail

inline nlohmann::json checkpoint_to_json(const Checkpoint& ck) {
    nlohmann::json j;
    j["version"] = ck.version;
    j["sensing_seed"] = ck.sensing_seed;
    j["config"] = ck.train_config;
    j["final_losses"] = ck.final_losses;
    {
        nlohmann::json g = detail::spec_to_json(ck.generator.spec);
        g["latent_dim"] = ck.generator.latent_dim;
        g["cond_dim"] = ck.generator.cond_dim;
        g["params"] = ck.generator.params.values;
        j["generator"] = std::move(g);
    }
    if (ck.discriminator.has_value()) {
        nlohmann::json d = detail::spec_to_json(ck.discriminator->spec);
        d["shape"] = ck.discriminator->shape == DiscShape::scalar ? "scalar" : "autoencoder";
        d["signal_dim"] = ck.discriminator->signal_dim;
        d["cond_dim"] = ck.discriminator->cond_dim;
        d["params"] = ck.discriminator->params.values;
        j["discriminator"] = std::move(d);
    }
    return j;
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    Checkpoint ck;
    if (!j.is_object() || !j.contains("version")) {
        throw CheckpointError("checkpoint: missing version field");
    }
    ck.version = j.at("version").get<int>();
    if (ck.version != kCheckpointVersion) {
        throw CheckpointError("checkpoint: version " + std::to_string(ck.version) +
                              " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
    }
    try {
        ck.sensing_seed = j.at("sensing_seed").get<std::uint64_t>();
        ck.train_config = j.value("config", nlohmann::json::object());
        ck.final_losses = j.value("final_losses", nlohmann::json::object());
        const auto& g = j.at("generator");
        ck.generator.spec = detail::spec_from_json(g);
        ck.generator.latent_dim = g.at("latent_dim").get<int>();
        ck.generator.cond_dim = g.at("cond_dim").get<int>();
        ck.generator.params.values = g.at("params").get<std::vector<double>>();
        ck.generator.validate();
        if (j.contains("discriminator")) {
            DiscriminatorNet d;
            const auto& dj = j.at("discriminator");
            d.spec = detail::spec_from_json(dj);
            d.shape = dj.at("shape").get<std::string>() == "scalar" ? DiscShape::scalar
                                                                    : DiscShape::autoencoder;
            d.signal_dim = dj.at("signal_dim").get<int>();
            d.cond_dim = dj.at("cond_dim").get<int>();
            d.params.values = dj.at("params").get<std::vector<double>>();
            d.validate();
            ck.discriminator = std::move(d);
        }
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("checkpoint: malformed content: ") + e.what());
    }
    return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    std::ofstream out(path);
    if (!out) throw CheckpointError("checkpoint: cannot open " + path.string() + " for writing");
    out << checkpoint_to_json(ck).dump(2) << '\n';
    if (!out) throw CheckpointError("checkpoint: write to " + path.string() + " failed");
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("checkpoint: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw CheckpointError("checkpoint: corrupt file " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

} // namespace gencs
