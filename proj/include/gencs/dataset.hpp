#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include <json.hpp>

#include "gencs/errors.hpp"
#include "gencs/rng.hpp"
#include "gencs/tensor.hpp"
#include "gencs/transforms.hpp"

namespace gencs {

/// Synthetic signal family: a hidden linear generator maps k latent factors to
/// s transform coefficients on a fixed support, signals are synthesized with U
/// and rescaled into [-1, 1]. Every signal is exactly s-sparse in the U domain
/// by construction, so the sparse-recovery assumptions can be made true when
/// needed.
struct DatasetConfig {
    int d = 64;
    int true_latent = 6;              // k
    std::optional<int> sparsity;      // s; defaults to d/2
    TransformKind transform = TransformKind::haar;
    int n = 256;
    double margin = 1.05;             // amplitude headroom when rescaling
    std::uint64_t seed = 0;

    int effective_sparsity() const { return sparsity.value_or(d / 2); }

    void validate() const {
        if (d < 1) throw ParameterError("dataset: d must be positive");
        if (true_latent < 1) throw ParameterError("dataset: true_latent must be positive");
        const int s = effective_sparsity();
        if (s < 1 || s > d) throw ParameterError("dataset: sparsity must be in [1, d]");
        if (n < 1) throw ParameterError("dataset: n must be positive");
        if (!(margin >= 1.0)) throw ParameterError("dataset: margin must be >= 1");
    }
};

/// Deterministic sampler for one dataset configuration. The hidden factors
/// (support, mixing matrix, scale) depend only on cfg.seed, so independently
/// created samplers agree.
class SignalFamily {
public:
    explicit SignalFamily(const DatasetConfig& cfg) : cfg_(cfg) {
        cfg_.validate();
        u_ = make_transform(cfg_.transform, static_cast<std::size_t>(cfg_.d));
        const int s = cfg_.effective_sparsity();
        RngStream hidden(cfg_.seed, stream_label("signal-family"));
        support_.resize(cfg_.d);
        std::iota(support_.begin(), support_.end(), 0);
        for (int i = cfg_.d - 1; i > 0; --i) {
            std::swap(support_[i], support_[hidden.below(i + 1)]);
        }
        support_.resize(s);
        std::sort(support_.begin(), support_.end());
        mix_ = gaussian(hidden, {static_cast<std::size_t>(s),
                                 static_cast<std::size_t>(cfg_.true_latent)});
        for (int j = 0; j < cfg_.true_latent; ++j) {
            double nrm = 0.0;
            for (int i = 0; i < s; ++i) nrm += mix_(i, j) * mix_(i, j);
            nrm = std::sqrt(nrm);
            for (int i = 0; i < s; ++i) mix_(i, j) /= nrm;
        }
        // Probe draws fix the amplitude scale.
        RngStream probe(cfg_.seed, stream_label("signal-family-probe"));
        double peak = 0.0;
        for (int i = 0; i < 512; ++i) {
            const Tensor x = raw_sample(probe);
            for (double v : x.data()) peak = std::max(peak, std::abs(v));
        }
        scale_ = peak > 0.0 ? peak * cfg_.margin : 1.0;
    }

    const DatasetConfig& config() const { return cfg_; }
    const UnitaryTransform& transform() const { return u_; }

    Tensor sample(RngStream& rng) const {
        Tensor x = raw_sample(rng);
        for (std::size_t i = 0; i < x.numel(); ++i) x[i] /= scale_;
        return x;
    }

    std::vector<Tensor> sample_many(int n, RngStream& rng) const {
        std::vector<Tensor> out;
        out.reserve(n);
        for (int i = 0; i < n; ++i) out.push_back(sample(rng));
        return out;
    }

private:
    static UnitaryTransform make_transform(TransformKind kind, std::size_t d) {
        switch (kind) {
        case TransformKind::identity: return UnitaryTransform::identity(d);
        case TransformKind::haar: return UnitaryTransform::haar(d);
        case TransformKind::explicit_matrix:
            throw ParameterError("dataset: explicit transforms need a matrix; use identity/haar");
        }
        throw ParameterError("dataset: bad transform kind");
    }

    Tensor raw_sample(RngStream& rng) const {
        const Tensor c = gaussian(rng, {static_cast<std::size_t>(cfg_.true_latent)});
        Tensor coeff({static_cast<std::size_t>(cfg_.d)});
        for (std::size_t i = 0; i < support_.size(); ++i) {
            double acc = 0.0;
            for (int j = 0; j < cfg_.true_latent; ++j) acc += mix_(i, j) * c[j];
            coeff[support_[i]] = acc;
        }
        return u_.inverse(coeff);
    }

    DatasetConfig cfg_;
    UnitaryTransform u_ = UnitaryTransform::identity(1);
    std::vector<int> support_;
    Tensor mix_;
    double scale_ = 1.0;
};

struct Dataset {
    DatasetConfig config;
    std::vector<Tensor> signals;
};

inline Dataset make_synthetic_dataset(const DatasetConfig& cfg) {
    SignalFamily family(cfg);
    RngStream rng(cfg.seed, stream_label("dataset-train"));
    return {cfg, family.sample_many(cfg.n, rng)};
}

inline nlohmann::json dataset_to_json(const Dataset& ds) {
    nlohmann::json j;
    j["version"] = 1;
    j["d"] = ds.config.d;
    j["true_latent"] = ds.config.true_latent;
    j["sparsity"] = ds.config.effective_sparsity();
    j["transform"] = transform_kind_name(ds.config.transform);
    j["seed"] = ds.config.seed;
    nlohmann::json sigs = nlohmann::json::array();
    for (const Tensor& x : ds.signals) sigs.push_back(x.values());
    j["signals"] = std::move(sigs);
    return j;
}

inline Dataset dataset_from_json(const nlohmann::json& j) {
    Dataset ds;
    try {
        ds.config.d = j.at("d").get<int>();
        ds.config.true_latent = j.value("true_latent", 1);
        ds.config.sparsity = j.value("sparsity", ds.config.d / 2);
        const std::string tf = j.value("transform", "haar");
        ds.config.transform = tf == "identity" ? TransformKind::identity : TransformKind::haar;
        ds.config.seed = j.value("seed", std::uint64_t{0});
        for (const auto& row : j.at("signals")) {
            Tensor x = Tensor::vector(row.get<std::vector<double>>());
            if (static_cast<int>(x.numel()) != ds.config.d) {
                throw ParameterError("dataset: signal length != d");
            }
            ds.signals.push_back(std::move(x));
        }
        ds.config.n = static_cast<int>(ds.signals.size());
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw ParameterError(std::string("dataset: malformed json: ") + e.what());
    }
    return ds;
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw ParameterError("dataset: cannot open " + path.string() + " for writing");
    out << dataset_to_json(ds).dump() << '\n';
}

inline Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("dataset: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParameterError("dataset: corrupt file " + path.string() + ": " + e.what());
    }
    return dataset_from_json(j);
}

} // namespace gencs
