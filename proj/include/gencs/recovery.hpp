#pragma once

#include <chrono>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "gencs/autodiff.hpp"
#include "gencs/errors.hpp"
#include "gencs/models.hpp"
#include "gencs/rng.hpp"
#include "gencs/sensing.hpp"
#include "gencs/tensor.hpp"
#include "gencs/trace.hpp"
#include "gencs/transforms.hpp"

namespace gencs {

struct LatentOptConfig {
    int steps = 100;
    double lr = 0.1;
};

struct Projection {
    Tensor x;
    Tensor z;
};

/// Anything recovery can drive: forward pass, tape-recorded forward pass, and
/// (approximate) projection onto the model's range.
template <class G>
concept GeneratorModel = requires(const G& g, Tape& tape, const Tensor& t, const Tensor* y,
                                  Tape::NodeId id, std::optional<Tape::NodeId> oy,
                                  const LatentOptConfig& opt, RngStream& rng) {
    { g.latent_dim() } -> std::convertible_to<int>;
    { g.cond_dim() } -> std::convertible_to<int>;
    { g.output_dim() } -> std::convertible_to<int>;
    { g.forward(t, y) } -> std::same_as<Tensor>;
    { g.forward_tape(tape, id, oy) } -> std::same_as<Tape::NodeId>;
    { g.project(t, y, opt, rng) } -> std::same_as<Projection>;
};

/// MLP-backed generator. Projection is the approximate argmin over z of
/// |target - G(z, y)| realized by latent gradient descent from z0 ~ N(0, I).
class MlpGenerator {
public:
    explicit MlpGenerator(GeneratorNet net) : net_(std::move(net)) { net_.validate(); }

    const GeneratorNet& net() const { return net_; }
    int latent_dim() const { return net_.latent_dim; }
    int cond_dim() const { return net_.cond_dim; }
    int output_dim() const { return net_.output_dim(); }

    Tensor forward(const Tensor& z, const Tensor* y) const { return net_.forward(z, y); }

    Tape::NodeId forward_tape(Tape& tape, Tape::NodeId z, std::optional<Tape::NodeId> y) const {
        const MlpTapeParams p = tape_params(tape, net_.spec, net_.params, /*as_leaves=*/false);
        return net_.forward_tape(tape, p, z, y);
    }

    Projection project(const Tensor& target, const Tensor* y, const LatentOptConfig& opt,
                       RngStream& rng) const {
        Tensor z = gaussian(rng, {static_cast<std::size_t>(latent_dim())});
        for (int k = 0; k < opt.steps; ++k) {
            Tape tape;
            const Tape::NodeId zid = tape.leaf(z);
            std::optional<Tape::NodeId> yid;
            if (y != nullptr) yid = tape.constant(*y);
            const Tape::NodeId out = forward_tape(tape, zid, yid);
            const Tape::NodeId loss = tape.squared_l2(tape.sub(out, tape.constant(target)));
            const Tensor g = tape.grad_one(loss, zid);
            for (std::size_t i = 0; i < z.numel(); ++i) z[i] -= opt.lr * g[i];
        }
        return {forward(z, y), z};
    }

private:
    GeneratorNet net_;
};

/// G(z) = z on R^d. Its range is everything, so projection is exact and
/// consumes no randomness; recovery through it reduces to classical gradient
/// descent / hard-thresholding iterations.
class IdentityGenerator {
public:
    explicit IdentityGenerator(int d) : d_(d) {
        if (d <= 0) throw ParameterError("identity generator: d must be positive");
    }

    int latent_dim() const { return d_; }
    int cond_dim() const { return 0; }
    int output_dim() const { return d_; }

    Tensor forward(const Tensor& z, const Tensor* y) const {
        if (y != nullptr) throw ContractError("identity generator is marginal");
        if (static_cast<int>(z.numel()) != d_) {
            throw DimensionError("identity generator: z has length " + std::to_string(z.numel()) +
                                 ", expected " + std::to_string(d_));
        }
        return z;
    }

    Tape::NodeId forward_tape(Tape&, Tape::NodeId z, std::optional<Tape::NodeId> y) const {
        if (y.has_value()) throw ContractError("identity generator is marginal");
        return z;
    }

    Projection project(const Tensor& target, const Tensor* y, const LatentOptConfig&,
                       RngStream&) const {
        if (y != nullptr) throw ContractError("identity generator is marginal");
        return {target, target};
    }

private:
    int d_;
};

/// Conditional generator with the measurement frozen, exposed as a marginal
/// model of the same latent dimension.
template <class G>
class FixedConditionView {
public:
    FixedConditionView(const G& inner, Tensor y) : inner_(&inner), y_(std::move(y)) {
        if (inner.cond_dim() != static_cast<int>(y_.numel())) {
            throw ContractError("fixed-condition view: measurement length mismatch");
        }
    }

    int latent_dim() const { return inner_->latent_dim(); }
    int cond_dim() const { return 0; }
    int output_dim() const { return inner_->output_dim(); }

    Tensor forward(const Tensor& z, const Tensor* y) const {
        if (y != nullptr) throw ContractError("fixed-condition view is marginal");
        return inner_->forward(z, &y_);
    }

    Tape::NodeId forward_tape(Tape& tape, Tape::NodeId z, std::optional<Tape::NodeId> y) const {
        if (y.has_value()) throw ContractError("fixed-condition view is marginal");
        return inner_->forward_tape(tape, z, tape.constant(y_));
    }

    Projection project(const Tensor& target, const Tensor* y, const LatentOptConfig& opt,
                       RngStream& rng) const {
        if (y != nullptr) throw ContractError("fixed-condition view is marginal");
        return inner_->project(target, &y_, opt, rng);
    }

private:
    const G* inner_;
    Tensor y_;
};

enum class Method { csgm, pgdgan, spgdgan, dcs, sparsegen };

inline const char* method_name(Method m) {
    switch (m) {
    case Method::csgm: return "csgm";
    case Method::pgdgan: return "pgdgan";
    case Method::spgdgan: return "spgdgan";
    case Method::dcs: return "dcs";
    case Method::sparsegen: return "sparsegen";
    }
    return "?";
}

inline Method method_from_name(const std::string& s) {
    if (s == "csgm") return Method::csgm;
    if (s == "pgdgan") return Method::pgdgan;
    if (s == "spgdgan") return Method::spgdgan;
    if (s == "dcs") return Method::dcs;
    if (s == "sparsegen") return Method::sparsegen;
    throw ParameterError("unknown method '" + s + "'");
}

struct RecoveryConfig {
    Method method = Method::csgm;
    bool im = false;
    int outer_steps = 10;                   // T
    int inner_steps = 100;                  // K
    double latent_lr = 0.1;                 // tau
    double pgd_step = 0.5;                  // alpha
    std::optional<std::size_t> sparsity;    // s; defaults to d/2
    double sparsegen_lambda = 0.1;          // lambda
    int sparsegen_phase1 = 250;             // L, z-only steps before the joint phase
    int restarts = 1;
    std::uint64_t seed = 0;
    bool retain_iterates = false;

    void validate() const {
        if (outer_steps < 0) throw ParameterError("recovery: T must be >= 0");
        if (inner_steps < 0) throw ParameterError("recovery: K must be >= 0");
        if (!(latent_lr > 0.0)) throw ParameterError("recovery: latent lr must be > 0");
        if (!(pgd_step >= 0.0)) throw ParameterError("recovery: alpha must be >= 0");
        if (restarts < 1) throw ParameterError("recovery: restarts must be >= 1");
        if (sparsegen_lambda < 0.0) throw ParameterError("recovery: lambda must be >= 0");
        if (method == Method::sparsegen && sparsegen_phase1 > outer_steps) {
            throw ParameterError("recovery: sparsegen needs L <= T");
        }
    }
};

/// Admissible PGD step sizes for a RIP constant gamma < 1/3:
/// (1/(2(1-gamma)), 1/(1+gamma)).
struct StepSizeWindow {
    double lo = 0.0;
    double hi = 0.0;
    double midpoint() const { return 0.5 * (lo + hi); }
};

class EmptyWindowError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

inline StepSizeWindow step_size_window(double gamma) {
    if (!(gamma >= 0.0)) throw ParameterError("step_size_window: gamma must be >= 0");
    if (gamma >= 1.0 / 3.0) {
        throw EmptyWindowError(
            "step_size_window: empty for gamma >= 1/3 (gamma = " + std::to_string(gamma) +
            "); pick alpha manually to run in unguaranteed mode");
    }
    return {1.0 / (2.0 * (1.0 - gamma)), 1.0 / (1.0 + gamma)};
}

namespace detail {

inline double fidelity(const SensingMatrix& S, const Tensor& x, const Measurement& y) {
    return sub(matvec(S.A, x), y).squared_norm();
}

inline void record(RecoveryTrace& tr, const RecoveryConfig& cfg, const SensingMatrix& S,
                   const Tensor& x, const Measurement& y, const Tensor* x_true) {
    tr.fidelity.push_back(fidelity(S, x, y));
    if (x_true != nullptr) {
        tr.per_pixel_error.push_back(sub(x, *x_true).squared_norm() /
                                     static_cast<double>(x.numel()));
    }
    if (cfg.retain_iterates) tr.iterates.push_back(x);
}

template <GeneratorModel G>
void check_conditioning(const G& g, const SensingMatrix& S, const RecoveryConfig& cfg) {
    const int expect = cfg.im ? static_cast<int>(S.m) : 0;
    if (g.cond_dim() != expect) {
        throw ContractError("recovery: generator cond_dim " + std::to_string(g.cond_dim()) +
                            " does not match " + (cfg.im ? "im" : "marginal") + " mode (expected " +
                            std::to_string(expect) + ")");
    }
    if (g.output_dim() != static_cast<int>(S.d)) {
        throw ContractError("recovery: generator output dim " + std::to_string(g.output_dim()) +
                            " != signal dim " + std::to_string(S.d));
    }
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

} // namespace detail

/// Latent gradient descent on |A G(z[, y]) - y|^2; x_hat = G(z_T[, y]).
/// Runs cfg.restarts independent restarts and keeps the lowest final fidelity.
template <GeneratorModel G>
RecoveryTrace csgm_recover(const G& g, const SensingMatrix& S, const Measurement& y,
                           const RecoveryConfig& cfg, RngStream& rng,
                           const Tensor* x_true = nullptr) {
    cfg.validate();
    detail::check_conditioning(g, S, cfg);
    detail::Timer timer;

    RecoveryTrace best;
    for (int r = 0; r < cfg.restarts; ++r) {
        RecoveryTrace tr;
        if (x_true != nullptr) tr.target = *x_true;
        Tensor z = gaussian(rng, {static_cast<std::size_t>(g.latent_dim())});
        Tensor x = g.forward(z, cfg.im ? &y : nullptr);
        detail::record(tr, cfg, S, x, y, x_true);
        for (int t = 0; t < cfg.outer_steps; ++t) {
            Tape tape;
            const Tape::NodeId zid = tape.leaf(z);
            std::optional<Tape::NodeId> yid;
            if (cfg.im) yid = tape.constant(y);
            const Tape::NodeId out = g.forward_tape(tape, zid, yid);
            const Tape::NodeId loss =
                tape.squared_l2(tape.sub(tape.matvec(tape.constant(S.A), out), tape.constant(y)));
            if (!tape.value(loss).all_finite()) {
                throw NumericError("csgm: non-finite objective at step " + std::to_string(t));
            }
            const Tensor grad = tape.grad_one(loss, zid);
            for (std::size_t i = 0; i < z.numel(); ++i) z[i] -= cfg.latent_lr * grad[i];
            x = g.forward(z, cfg.im ? &y : nullptr);
            detail::record(tr, cfg, S, x, y, x_true);
        }
        tr.x_hat = x;
        tr.iterations = cfg.outer_steps;
        if (best.fidelity.empty() || tr.fidelity.back() < best.fidelity.back()) best = std::move(tr);
    }
    best.wall_ms = timer.ms();
    return best;
}

/// Projected gradient descent from x_0 = 0: gradient step on the data term,
/// then projection onto the generator range via K latent steps.
template <GeneratorModel G>
RecoveryTrace pgdgan_recover(const G& g, const SensingMatrix& S, const Measurement& y,
                             const RecoveryConfig& cfg, RngStream& rng,
                             const Tensor* x_true = nullptr) {
    cfg.validate();
    detail::check_conditioning(g, S, cfg);
    detail::Timer timer;

    const LatentOptConfig inner{cfg.inner_steps, cfg.latent_lr};
    RecoveryTrace best;
    for (int r = 0; r < cfg.restarts; ++r) {
        RecoveryTrace tr;
        if (x_true != nullptr) tr.target = *x_true;
        Tensor x = Tensor::zeros(S.d);
        detail::record(tr, cfg, S, x, y, x_true);
        for (int t = 0; t < cfg.outer_steps; ++t) {
            const Tensor residual = sub(matvec(S.A, x), y);
            const Tensor grad = matvec_t(S.A, residual);
            Tensor w = x;
            for (std::size_t i = 0; i < w.numel(); ++i) w[i] -= cfg.pgd_step * grad[i];
            const Projection p = g.project(w, cfg.im ? &y : nullptr, inner, rng);
            x = p.x;
            require_finite(x, "pgdgan iterate");
            detail::record(tr, cfg, S, x, y, x_true);
        }
        tr.x_hat = x;
        tr.iterations = cfg.outer_steps;
        if (best.fidelity.empty() || tr.fidelity.back() < best.fidelity.back()) best = std::move(tr);
    }
    best.wall_ms = timer.ms();
    return best;
}

/// PGD plus the sparsity-promoting step x_{t+1} = U h_s(U^T G(z_K[, y])).
/// With the identity generator and U = I this is exactly iterative hard
/// thresholding.
template <GeneratorModel G>
RecoveryTrace spgdgan_recover(const G& g, const SensingMatrix& S, const Measurement& y,
                              const UnitaryTransform& U, const RecoveryConfig& cfg, RngStream& rng,
                              const Tensor* x_true = nullptr) {
    cfg.validate();
    detail::check_conditioning(g, S, cfg);
    const std::size_t s = cfg.sparsity.value_or(S.d / 2);
    if (s > S.d) throw ParameterError("spgdgan: sparsity exceeds d");
    if (U.dim() != S.d) throw DimensionError("spgdgan: transform dimension != d");
    detail::Timer timer;

    const LatentOptConfig inner{cfg.inner_steps, cfg.latent_lr};
    RecoveryTrace best;
    for (int r = 0; r < cfg.restarts; ++r) {
        RecoveryTrace tr;
        if (x_true != nullptr) tr.target = *x_true;
        Tensor x = Tensor::zeros(S.d);
        detail::record(tr, cfg, S, x, y, x_true);
        for (int t = 0; t < cfg.outer_steps; ++t) {
            const Tensor residual = sub(matvec(S.A, x), y);
            const Tensor grad = matvec_t(S.A, residual);
            Tensor w = x;
            for (std::size_t i = 0; i < w.numel(); ++i) w[i] -= cfg.pgd_step * grad[i];
            const Projection p = g.project(w, cfg.im ? &y : nullptr, inner, rng);
            x = sparsify(U, p.x, s);
            require_finite(x, "spgdgan iterate");
            detail::record(tr, cfg, S, x, y, x_true);
        }
        tr.x_hat = x;
        tr.iterations = cfg.outer_steps;
        if (best.fidelity.empty() || tr.fidelity.back() < best.fidelity.back()) best = std::move(tr);
    }
    best.wall_ms = timer.ms();
    return best;
}

/// Two-phase descent on |A(G(z[, y]) + nu) - y|^2 + lambda |B nu|_1.
/// Phase one (t < L) moves z only; afterwards z and nu move jointly, the l1
/// term via its sign subgradient (0 at 0). x_hat = G(z_T[, y]) + nu_T.
template <GeneratorModel G>
RecoveryTrace sparsegen_recover(const G& g, const SensingMatrix& S, const Measurement& y,
                                const UnitaryTransform& B, const RecoveryConfig& cfg,
                                RngStream& rng, const Tensor* x_true = nullptr) {
    cfg.validate();
    detail::check_conditioning(g, S, cfg);
    if (B.dim() != S.d) throw DimensionError("sparsegen: transform dimension != d");
    detail::Timer timer;
    const Tensor Bmat = B.matrix();

    RecoveryTrace best;
    for (int r = 0; r < cfg.restarts; ++r) {
        RecoveryTrace tr;
        if (x_true != nullptr) tr.target = *x_true;
        Tensor z = gaussian(rng, {static_cast<std::size_t>(g.latent_dim())});
        Tensor nu = Tensor::zeros(S.d);
        auto estimate = [&]() { return add(g.forward(z, cfg.im ? &y : nullptr), nu); };
        Tensor x = estimate();
        detail::record(tr, cfg, S, x, y, x_true);
        for (int t = 0; t < cfg.outer_steps; ++t) {
            const bool joint = t >= cfg.sparsegen_phase1;
            Tape tape;
            const Tape::NodeId zid = tape.leaf(z);
            const Tape::NodeId nuid = joint ? tape.leaf(nu) : tape.constant(nu);
            std::optional<Tape::NodeId> yid;
            if (cfg.im) yid = tape.constant(y);
            const Tape::NodeId out = g.forward_tape(tape, zid, yid);
            const Tape::NodeId full = tape.add(out, nuid);
            const Tape::NodeId fid = tape.squared_l2(
                tape.sub(tape.matvec(tape.constant(S.A), full), tape.constant(y)));
            const Tape::NodeId penalty =
                tape.scale(tape.l1_norm(tape.matvec(tape.constant(Bmat), nuid)),
                           cfg.sparsegen_lambda);
            const Tape::NodeId loss = tape.add(fid, penalty);
            if (!tape.value(loss).all_finite()) {
                throw NumericError("sparsegen: non-finite objective at step " + std::to_string(t));
            }
            if (joint) {
                const Tape::NodeId leaves[2] = {zid, nuid};
                auto grads = tape.grad(loss, leaves);
                const Tensor& gz = grads.at(zid);
                const Tensor& gn = grads.at(nuid);
                for (std::size_t i = 0; i < z.numel(); ++i) z[i] -= cfg.latent_lr * gz[i];
                for (std::size_t i = 0; i < nu.numel(); ++i) nu[i] -= cfg.latent_lr * gn[i];
            } else {
                const Tensor gz = tape.grad_one(loss, zid);
                for (std::size_t i = 0; i < z.numel(); ++i) z[i] -= cfg.latent_lr * gz[i];
            }
            x = estimate();
            detail::record(tr, cfg, S, x, y, x_true);
        }
        tr.x_hat = x;
        tr.iterations = cfg.outer_steps;
        if (best.fidelity.empty() || tr.fidelity.back() < best.fidelity.back()) best = std::move(tr);
    }
    best.wall_ms = timer.ms();
    return best;
}

} // namespace gencs
