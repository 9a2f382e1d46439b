#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "gencs/autodiff.hpp"
#include "gencs/errors.hpp"
#include "gencs/models.hpp"
#include "gencs/rng.hpp"
#include "gencs/sensing.hpp"
#include "gencs/tensor.hpp"

namespace gencs {

enum class Objective { dcgan, began, dcs };

inline const char* objective_name(Objective o) {
    switch (o) {
    case Objective::dcgan: return "dcgan";
    case Objective::began: return "began";
    case Objective::dcs: return "dcs";
    }
    return "?";
}

inline Objective objective_from_name(const std::string& s) {
    if (s == "dcgan") return Objective::dcgan;
    if (s == "began") return Objective::began;
    if (s == "dcs") return Objective::dcs;
    throw ParameterError("unknown objective '" + s + "'");
}

struct TrainConfig {
    Objective objective = Objective::dcgan;
    bool conditional = false;
    int steps = 2000;          // K
    int batch = 16;
    double lr = 0.05;          // eta
    double began_lambda = 0.05;   // zeta controller rate
    double began_gamma = 0.5;     // diversity ratio, in [0, 1]
    int began_norm = 1;           // p in the reconstruction loss, 1 or 2
    double dcs_lambda = 1.0;
    int dcs_inner_steps = 3;      // T
    double dcs_inner_lr = 0.01;   // tau
    std::uint64_t seed = 0;
    double log_eps = 1e-12;

    void validate() const {
        if (steps < 0) throw ParameterError("train: steps must be >= 0");
        if (batch < 1) throw ParameterError("train: batch must be >= 1");
        if (!(lr > 0.0)) throw ParameterError("train: lr must be > 0");
        if (!(began_gamma >= 0.0 && began_gamma <= 1.0)) {
            throw ParameterError("train: began gamma must be in [0,1]");
        }
        if (began_norm != 1 && began_norm != 2) {
            throw ParameterError("train: began norm must be 1 or 2");
        }
        if (began_lambda < 0.0) throw ParameterError("train: began lambda must be >= 0");
        if (dcs_lambda < 0.0) throw ParameterError("train: dcs lambda must be >= 0");
        if (dcs_inner_steps < 0) throw ParameterError("train: dcs inner steps must be >= 0");
        if (dcs_inner_lr < 0.0) throw ParameterError("train: dcs inner lr must be >= 0");
    }
};

struct TrainResult {
    std::vector<double> gen_loss;
    std::vector<double> disc_loss;
    std::vector<double> zeta; // began control variable per step
    int steps_run = 0;
};

namespace detail {

inline void check_training_io(const std::vector<Tensor>& data, const SensingMatrix& S,
                              const GeneratorNet& G, const DiscriminatorNet* D,
                              const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw ParameterError("train: empty dataset");
    for (const Tensor& x : data) {
        if (x.numel() != S.d) {
            throw DimensionError("train: signal length " + std::to_string(x.numel()) +
                                 " != sensing d " + std::to_string(S.d));
        }
    }
    const int expect = cfg.conditional ? static_cast<int>(S.m) : 0;
    if (G.cond_dim != expect) {
        throw ContractError("train: generator cond_dim " + std::to_string(G.cond_dim) +
                            " inconsistent with conditional=" +
                            std::string(cfg.conditional ? "true" : "false"));
    }
    if (D != nullptr && D->cond_dim != expect) {
        throw ContractError("train: discriminator cond_dim " + std::to_string(D->cond_dim) +
                            " inconsistent with conditional flag");
    }
    if (G.output_dim() != static_cast<int>(S.d)) {
        throw ContractError("train: generator output dim != d");
    }
}

inline std::vector<std::size_t> draw_batch(RngStream& rng, std::size_t n, int batch) {
    std::vector<std::size_t> idx(batch);
    for (int i = 0; i < batch; ++i) idx[i] = static_cast<std::size_t>(rng.below(n));
    return idx;
}

} // namespace detail

/// Adversarial training of a scalar-head discriminator against the generator,
/// alternating one phi ascent step and one theta descent step per batch
/// (batch means; ln clamped at log_eps). Conditional mode measures
/// y_i = A x_i and feeds it to both networks.
inline TrainResult train_dcgan(const std::vector<Tensor>& data, const SensingMatrix& S,
                               GeneratorNet& G, DiscriminatorNet& D, const TrainConfig& cfg) {
    detail::check_training_io(data, S, G, &D, cfg);
    if (D.shape != DiscShape::scalar) {
        throw ContractError("train_dcgan: discriminator must have the scalar shape");
    }
    RngStream rng(cfg.seed, stream_label("train_dcgan"));
    TrainResult result;
    const int v = G.latent_dim;

    for (int step = 0; step < cfg.steps; ++step) {
        const auto idx = detail::draw_batch(rng, data.size(), cfg.batch);
        std::vector<Tensor> ys;
        if (cfg.conditional) {
            ys.reserve(idx.size());
            for (std::size_t i : idx) ys.push_back(matvec(S.A, data[i]));
        }
        std::vector<Tensor> zs;
        zs.reserve(idx.size());
        for (std::size_t b = 0; b < idx.size(); ++b) {
            zs.push_back(gaussian(rng, {static_cast<std::size_t>(v)}));
        }

        // Discriminator ascent on mean[ln D(x, y) + ln(1 - D(G(z, y), y))].
        double d_obj_value = 0.0;
        {
            Tape tape;
            const MlpTapeParams dp = tape_params(tape, D.spec, D.params, /*as_leaves=*/true);
            const MlpTapeParams gp = tape_params(tape, G.spec, G.params, /*as_leaves=*/false);
            Tape::NodeId obj = tape.constant(Tensor::scalar(0.0));
            for (std::size_t b = 0; b < idx.size(); ++b) {
                std::optional<Tape::NodeId> yid;
                if (cfg.conditional) yid = tape.constant(ys[b]);
                const Tape::NodeId real =
                    D.forward_tape(tape, dp, tape.constant(data[idx[b]]), yid);
                const Tape::NodeId zid = tape.constant(zs[b]);
                const Tape::NodeId fake_x = G.forward_tape(tape, gp, zid, yid);
                const Tape::NodeId fake = D.forward_tape(tape, dp, fake_x, yid);
                const Tape::NodeId one_minus =
                    tape.sub(tape.constant(Tensor::scalar(1.0)), fake);
                obj = tape.add(obj, tape.add(tape.log_clamped(real, cfg.log_eps),
                                             tape.log_clamped(one_minus, cfg.log_eps)));
            }
            obj = tape.scale(obj, 1.0 / cfg.batch);
            d_obj_value = tape.value(obj)[0];
            if (!std::isfinite(d_obj_value)) {
                throw TrainingDiverged("train_dcgan: non-finite discriminator objective", step);
            }
            std::vector<Tape::NodeId> leaves;
            leaves.insert(leaves.end(), dp.weights.begin(), dp.weights.end());
            leaves.insert(leaves.end(), dp.biases.begin(), dp.biases.end());
            const auto grads = tape.grad(obj, leaves);
            const ParamVec gd = collect_param_grads(tape, D.spec, dp, grads);
            axpy_params(D.params, gd, +cfg.lr);
        }

        // Generator descent on mean[ln(1 - D(G(z, y), y))] against the updated phi.
        double g_obj_value = 0.0;
        {
            Tape tape;
            const MlpTapeParams gp = tape_params(tape, G.spec, G.params, /*as_leaves=*/true);
            const MlpTapeParams dp = tape_params(tape, D.spec, D.params, /*as_leaves=*/false);
            Tape::NodeId obj = tape.constant(Tensor::scalar(0.0));
            for (std::size_t b = 0; b < idx.size(); ++b) {
                std::optional<Tape::NodeId> yid;
                if (cfg.conditional) yid = tape.constant(ys[b]);
                const Tape::NodeId zid = tape.constant(zs[b]);
                const Tape::NodeId fake_x = G.forward_tape(tape, gp, zid, yid);
                const Tape::NodeId fake = D.forward_tape(tape, dp, fake_x, yid);
                const Tape::NodeId one_minus =
                    tape.sub(tape.constant(Tensor::scalar(1.0)), fake);
                obj = tape.add(obj, tape.log_clamped(one_minus, cfg.log_eps));
            }
            obj = tape.scale(obj, 1.0 / cfg.batch);
            g_obj_value = tape.value(obj)[0];
            if (!std::isfinite(g_obj_value)) {
                throw TrainingDiverged("train_dcgan: non-finite generator objective", step);
            }
            std::vector<Tape::NodeId> leaves;
            leaves.insert(leaves.end(), gp.weights.begin(), gp.weights.end());
            leaves.insert(leaves.end(), gp.biases.begin(), gp.biases.end());
            const auto grads = tape.grad(obj, leaves);
            const ParamVec gg = collect_param_grads(tape, G.spec, gp, grads);
            axpy_params(G.params, gg, -cfg.lr);
        }

        result.disc_loss.push_back(d_obj_value);
        result.gen_loss.push_back(g_obj_value);
        ++result.steps_run;
    }
    return result;
}

/// Autoencoder-discriminator training balanced by the control variable zeta:
/// per step, phi descends mean[R(x) - zeta R(G(z_D))], theta descends
/// mean[R(G(z_G))] at the old phi, and zeta is clamped to [0, 1] after
/// zeta += lambda (gamma R(x) - R(G(z_G))). Updates are simultaneous (both
/// gradients taken at the pre-step parameters).
inline TrainResult train_began(const std::vector<Tensor>& data, const SensingMatrix& S,
                               GeneratorNet& G, DiscriminatorNet& D, const TrainConfig& cfg) {
    detail::check_training_io(data, S, G, &D, cfg);
    if (D.shape != DiscShape::autoencoder) {
        throw ContractError("train_began: discriminator must have the autoencoder shape");
    }
    RngStream rng(cfg.seed, stream_label("train_began"));
    TrainResult result;
    const int v = G.latent_dim;
    double zeta = 0.0;

    auto recon_loss = [&](Tape& tape, const DiscriminatorNet& d, const MlpTapeParams& dp,
                          Tape::NodeId x, std::optional<Tape::NodeId> y) {
        const Tape::NodeId rec = d.forward_tape(tape, dp, x, y);
        const Tape::NodeId diff = tape.sub(x, rec);
        return cfg.began_norm == 1 ? tape.l1_norm(diff) : tape.l2_norm(diff);
    };

    for (int step = 0; step < cfg.steps; ++step) {
        const auto idx = detail::draw_batch(rng, data.size(), cfg.batch);
        std::vector<Tensor> ys;
        if (cfg.conditional) {
            ys.reserve(idx.size());
            for (std::size_t i : idx) ys.push_back(matvec(S.A, data[i]));
        }
        std::vector<Tensor> zd, zg;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            zd.push_back(gaussian(rng, {static_cast<std::size_t>(v)}));
        }
        for (std::size_t b = 0; b < idx.size(); ++b) {
            zg.push_back(gaussian(rng, {static_cast<std::size_t>(v)}));
        }

        // phi gradient at (theta_k, phi_k).
        ParamVec d_grad;
        double phi_obj = 0.0, r_real_mean = 0.0;
        {
            Tape tape;
            const MlpTapeParams dp = tape_params(tape, D.spec, D.params, /*as_leaves=*/true);
            const MlpTapeParams gp = tape_params(tape, G.spec, G.params, /*as_leaves=*/false);
            Tape::NodeId obj = tape.constant(Tensor::scalar(0.0));
            Tape::NodeId r_real_sum = tape.constant(Tensor::scalar(0.0));
            for (std::size_t b = 0; b < idx.size(); ++b) {
                std::optional<Tape::NodeId> yid;
                if (cfg.conditional) yid = tape.constant(ys[b]);
                const Tape::NodeId r_real =
                    recon_loss(tape, D, dp, tape.constant(data[idx[b]]), yid);
                const Tape::NodeId fake_x =
                    G.forward_tape(tape, gp, tape.constant(zd[b]), yid);
                const Tape::NodeId r_fake = recon_loss(tape, D, dp, fake_x, yid);
                obj = tape.add(obj, tape.sub(r_real, tape.scale(r_fake, zeta)));
                r_real_sum = tape.add(r_real_sum, r_real);
            }
            obj = tape.scale(obj, 1.0 / cfg.batch);
            phi_obj = tape.value(obj)[0];
            r_real_mean = tape.value(r_real_sum)[0] / cfg.batch;
            if (!std::isfinite(phi_obj)) {
                throw TrainingDiverged("train_began: non-finite discriminator objective", step);
            }
            std::vector<Tape::NodeId> leaves;
            leaves.insert(leaves.end(), dp.weights.begin(), dp.weights.end());
            leaves.insert(leaves.end(), dp.biases.begin(), dp.biases.end());
            d_grad = collect_param_grads(tape, D.spec, dp, tape.grad(obj, leaves));
        }

        // theta gradient, also at (theta_k, phi_k).
        ParamVec g_grad;
        double theta_obj = 0.0;
        {
            Tape tape;
            const MlpTapeParams gp = tape_params(tape, G.spec, G.params, /*as_leaves=*/true);
            const MlpTapeParams dp = tape_params(tape, D.spec, D.params, /*as_leaves=*/false);
            Tape::NodeId obj = tape.constant(Tensor::scalar(0.0));
            for (std::size_t b = 0; b < idx.size(); ++b) {
                std::optional<Tape::NodeId> yid;
                if (cfg.conditional) yid = tape.constant(ys[b]);
                const Tape::NodeId fake_x =
                    G.forward_tape(tape, gp, tape.constant(zg[b]), yid);
                obj = tape.add(obj, recon_loss(tape, D, dp, fake_x, yid));
            }
            obj = tape.scale(obj, 1.0 / cfg.batch);
            theta_obj = tape.value(obj)[0];
            if (!std::isfinite(theta_obj)) {
                throw TrainingDiverged("train_began: non-finite generator objective", step);
            }
            std::vector<Tape::NodeId> leaves;
            leaves.insert(leaves.end(), gp.weights.begin(), gp.weights.end());
            leaves.insert(leaves.end(), gp.biases.begin(), gp.biases.end());
            g_grad = collect_param_grads(tape, G.spec, gp, tape.grad(obj, leaves));
        }

        axpy_params(D.params, d_grad, -cfg.lr);
        axpy_params(G.params, g_grad, -cfg.lr);
        zeta = std::clamp(zeta + cfg.began_lambda * (cfg.began_gamma * r_real_mean - theta_obj),
                          0.0, 1.0);

        result.disc_loss.push_back(phi_obj);
        result.gen_loss.push_back(theta_obj);
        result.zeta.push_back(zeta);
        ++result.steps_run;
    }
    return result;
}

/// Meta-learning without a discriminator: per sample, adapt the latent by
/// dcs_inner_steps gradient steps on |A G(z[, y]) - y|^2, then descend theta
/// on M + lambda R where M is the post-adaptation measurement loss and R
/// penalizes distortion of pairwise distances under A (averaged over the nine
/// ordered pairs of {x, G(z_0), G(z_T)}). Latents are treated as fixed inputs
/// in the theta step.
inline TrainResult train_dcs(const std::vector<Tensor>& data, const SensingMatrix& S,
                             GeneratorNet& G, const TrainConfig& cfg) {
    detail::check_training_io(data, S, G, nullptr, cfg);
    RngStream rng(cfg.seed, stream_label("train_dcs"));
    TrainResult result;
    const int v = G.latent_dim;

    for (int step = 0; step < cfg.steps; ++step) {
        const auto idx = detail::draw_batch(rng, data.size(), cfg.batch);
        std::vector<Tensor> ys;
        ys.reserve(idx.size());
        for (std::size_t i : idx) ys.push_back(matvec(S.A, data[i]));

        std::vector<Tensor> z0s, zTs;
        for (std::size_t b = 0; b < idx.size(); ++b) {
            Tensor z = gaussian(rng, {static_cast<std::size_t>(v)});
            z0s.push_back(z);
            const Tensor* y = cfg.conditional ? &ys[b] : nullptr;
            for (int t = 0; t < cfg.dcs_inner_steps; ++t) {
                Tape tape;
                const Tape::NodeId zid = tape.leaf(z);
                const MlpTapeParams gp = tape_params(tape, G.spec, G.params, /*as_leaves=*/false);
                std::optional<Tape::NodeId> yid;
                if (cfg.conditional) yid = tape.constant(*y);
                const Tape::NodeId out = G.forward_tape(tape, gp, zid, yid);
                const Tape::NodeId loss = tape.squared_l2(
                    tape.sub(tape.matvec(tape.constant(S.A), out), tape.constant(ys[b])));
                const Tensor gz = tape.grad_one(loss, zid);
                for (std::size_t i = 0; i < z.numel(); ++i) z[i] -= cfg.dcs_inner_lr * gz[i];
            }
            zTs.push_back(z);
        }

        Tape tape;
        const MlpTapeParams gp = tape_params(tape, G.spec, G.params, /*as_leaves=*/true);
        const Tape::NodeId A = tape.constant(S.A);
        Tape::NodeId m_term = tape.constant(Tensor::scalar(0.0));
        Tape::NodeId r_term = tape.constant(Tensor::scalar(0.0));
        for (std::size_t b = 0; b < idx.size(); ++b) {
            std::optional<Tape::NodeId> yid;
            if (cfg.conditional) yid = tape.constant(ys[b]);
            const Tape::NodeId gT = G.forward_tape(tape, gp, tape.constant(zTs[b]), yid);
            m_term = tape.add(
                m_term, tape.squared_l2(tape.sub(tape.matvec(A, gT), tape.constant(ys[b]))));
            if (cfg.dcs_lambda > 0.0) {
                const Tape::NodeId g0 = G.forward_tape(tape, gp, tape.constant(z0s[b]), yid);
                const Tape::NodeId xs[3] = {tape.constant(data[idx[b]]), g0, gT};
                Tape::NodeId pair_sum = tape.constant(Tensor::scalar(0.0));
                for (int a = 0; a < 3; ++a) {
                    for (int c = 0; c < 3; ++c) {
                        if (a == c) continue; // identical pair contributes exactly zero
                        const Tape::NodeId diff = tape.sub(xs[a], xs[c]);
                        const Tape::NodeId gap =
                            tape.sub(tape.l2_norm(tape.matvec(A, diff)), tape.l2_norm(diff));
                        pair_sum = tape.add(pair_sum, tape.mul(gap, gap));
                    }
                }
                r_term = tape.add(r_term, tape.scale(pair_sum, 1.0 / 9.0));
            }
        }
        const Tape::NodeId loss = tape.scale(
            tape.add(m_term, tape.scale(r_term, cfg.dcs_lambda)), 1.0 / cfg.batch);
        const double loss_value = tape.value(loss)[0];
        if (!std::isfinite(loss_value)) {
            throw TrainingDiverged("train_dcs: non-finite objective", step);
        }
        std::vector<Tape::NodeId> leaves;
        leaves.insert(leaves.end(), gp.weights.begin(), gp.weights.end());
        leaves.insert(leaves.end(), gp.biases.begin(), gp.biases.end());
        const ParamVec gg = collect_param_grads(tape, G.spec, gp, tape.grad(loss, leaves));
        axpy_params(G.params, gg, -cfg.lr);

        result.gen_loss.push_back(loss_value);
        ++result.steps_run;
    }
    return result;
}

} // namespace gencs
