#include <catch2/catch_amalgamated.hpp>

#include "gencs/autodiff.hpp"
#include "gencs/models.hpp"
#include "gencs/rng.hpp"
#include "support/oracles.hpp"

using namespace gencs;

TEST_CASE("gradient of squared norm") {
    Tape tape;
    const auto x = tape.leaf(Tensor::vector({1.0, -2.0}));
    const auto f = tape.squared_l2(x);
    const Tensor g = tape.grad_one(f, x);
    CHECK(g[0] == 2.0);
    CHECK(g[1] == -4.0);
}

TEST_CASE("gradient of linear form is the coefficient vector") {
    RngStream rng(11);
    const Tensor a = gaussian(rng, {5});
    const Tensor x0 = gaussian(rng, {5});
    Tape tape;
    const auto x = tape.leaf(x0);
    const auto f = tape.sum(tape.mul(tape.constant(a), x));
    const Tensor g = tape.grad_one(f, x);
    for (std::size_t i = 0; i < 5; ++i) CHECK(g[i] == a[i]);
}

TEST_CASE("non-scalar root and unknown leaves are contract errors") {
    Tape tape;
    const auto x = tape.leaf(Tensor::vector({1.0, 2.0}));
    CHECK_THROWS_AS(tape.grad_one(x, x), ContractError);
    const auto s = tape.squared_l2(x);
    CHECK_THROWS_AS(tape.grad_one(s, s), ContractError);   // not a leaf
    CHECK_THROWS_AS(tape.grad_one(s, 999), ContractError); // not on tape
}

TEST_CASE("unreachable leaf gets a zero gradient") {
    Tape tape;
    const auto x = tape.leaf(Tensor::vector({1.0}));
    const auto unused = tape.leaf(Tensor::vector({3.0, 4.0}));
    const auto f = tape.squared_l2(x);
    const Tensor g = tape.grad_one(f, unused);
    CHECK(g.numel() == 2);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
}

namespace {

// Scalar objective assembled from every primitive, evaluated either on the
// tape or through plain arithmetic for the finite-difference oracle.
double primitive_mix(const std::vector<double>& xv, Tape* tape, Tensor* grad_out) {
    const std::size_t n = xv.size();
    const Tensor x = Tensor::vector(std::vector<double>(xv));
    Tensor c({n});
    for (std::size_t i = 0; i < n; ++i) c[i] = 0.3 + 0.1 * static_cast<double>(i);
    Tensor A({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) A(i, j) = std::sin(0.5 * (i * n + j) + 1.0);

    if (tape != nullptr) {
        const auto xid = tape->leaf(x);
        const auto cid = tape->constant(c);
        const auto Aid = tape->constant(A);
        const auto mv = tape->matvec(Aid, xid);
        const auto mvt = tape->matvec_t(Aid, xid);
        const auto t1 = tape->relu(mv);
        const auto t2 = tape->tanh_fn(mvt);
        const auto t3 = tape->sigmoid(tape->mul(xid, cid));
        const auto cat = tape->concat(t1, tape->concat(t2, t3));
        const auto sl = tape->slice(cat, 1, 2 * n);
        const auto lg = tape->log_clamped(tape->sigmoid(sl));
        const auto s1 = tape->squared_l2(lg);
        const auto s2 = tape->l2_norm(tape->sub(t2, t3));
        const auto s3 = tape->l1_norm(tape->add(t1, t2));
        const auto s4 = tape->sum(tape->scale(sl, 0.25));
        const auto total = tape->add(tape->add(s1, s2), tape->add(s3, s4));
        *grad_out = tape->grad_one(total, xid);
        return tape->value(total)[0];
    }

    auto sigmoid = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    std::vector<double> mv(n, 0.0), mvt(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) mv[i] += A(i, j) * xv[j];
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) mvt[j] += A(i, j) * xv[i];
    std::vector<double> t1(n), t2(n), t3(n);
    for (std::size_t i = 0; i < n; ++i) {
        t1[i] = std::max(0.0, mv[i]);
        t2[i] = std::tanh(mvt[i]);
        t3[i] = sigmoid(xv[i] * c[i]);
    }
    std::vector<double> cat;
    cat.insert(cat.end(), t1.begin(), t1.end());
    cat.insert(cat.end(), t2.begin(), t2.end());
    cat.insert(cat.end(), t3.begin(), t3.end());
    std::vector<double> sl(cat.begin() + 1, cat.begin() + 1 + 2 * n);
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (double v : sl) {
        const double lg = std::log(std::max(1e-12, sigmoid(v)));
        s1 += lg * lg;
        s4 += 0.25 * v;
    }
    for (std::size_t i = 0; i < n; ++i) {
        s2 += (t2[i] - t3[i]) * (t2[i] - t3[i]);
        s3 += std::abs(t1[i] + t2[i]);
    }
    return s1 + std::sqrt(s2) + s3 + s4;
}

} // namespace

TEST_CASE("every primitive matches central finite differences") {
    RngStream rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n = 3 + trial % 4;
        std::vector<double> xv(n);
        for (auto& v : xv) v = rng.normal(0.0, 1.0) + 0.05; // keep away from relu kinks
        Tape tape;
        Tensor g;
        primitive_mix(xv, &tape, &g);
        const auto fd = oracle::finite_diff(
            [&](const std::vector<double>& p) { return primitive_mix(p, nullptr, nullptr); }, xv);
        std::vector<double> ga(g.data().begin(), g.data().end());
        CHECK(oracle::rel_error(ga, fd) < 1e-5);
    }
}

TEST_CASE("random composite MLPs match finite differences over 100 seeds") {
    for (int seed = 0; seed < 100; ++seed) {
        RngStream rng(1000 + seed);
        MlpSpec spec;
        const int in = 2 + seed % 3, hid = 3 + seed % 4, out = 2 + seed % 2;
        spec.layer_widths = {in, hid, out};
        const Activation acts[] = {Activation::tanh, Activation::sigmoid, Activation::relu};
        spec.activations = {acts[seed % 3], Activation::tanh};
        const ParamVec params = init_params(spec, rng);
        const Tensor input = gaussian(rng, {static_cast<std::size_t>(in)});

        auto loss_at = [&](const std::vector<double>& p) {
            ParamVec pv;
            pv.values = p;
            const Tensor out_t = mlp_forward(spec, pv, input);
            return out_t.squared_norm();
        };

        Tape tape;
        const MlpTapeParams tp = tape_params(tape, spec, params, true);
        const auto out_id = mlp_forward_tape(tape, spec, tp, tape.constant(input));
        const auto loss = tape.squared_l2(out_id);
        std::vector<Tape::NodeId> leaves;
        leaves.insert(leaves.end(), tp.weights.begin(), tp.weights.end());
        leaves.insert(leaves.end(), tp.biases.begin(), tp.biases.end());
        const ParamVec grad = collect_param_grads(tape, spec, tp, tape.grad(loss, leaves));

        const auto fd = oracle::finite_diff(loss_at, params.values);
        CHECK(oracle::rel_error(grad.values, fd) < 1e-5);
    }
}

TEST_CASE("subgradients at kinks are zero") {
    Tape tape;
    const auto x = tape.leaf(Tensor::vector({0.0, 0.0}));
    const Tensor g1 = tape.grad_one(tape.l1_norm(x), x);
    CHECK(g1[0] == 0.0);
    Tape tape2;
    const auto x2 = tape2.leaf(Tensor::vector({0.0, 0.0}));
    const Tensor g2 = tape2.grad_one(tape2.l2_norm(x2), x2);
    CHECK(g2[0] == 0.0);
}
