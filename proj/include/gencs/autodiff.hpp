#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "gencs/errors.hpp"
#include "gencs/tensor.hpp"

namespace gencs {

/// Reverse-mode autodiff over a linear tape of primitive operations.
///
/// Nodes are appended in evaluation order, so the tape is already a topological
/// order and the backward pass is a single reverse sweep that touches each node
/// once. Gradients are exact for the smooth primitives; relu/l1/l2 use the
/// subgradient 0 at their kinks and log_clamped has gradient 0 in the clamped
/// region.
class Tape {
public:
    using NodeId = int;

    enum class Op {
        leaf,
        constant,
        add,
        sub,
        mul,          // elementwise
        scale,        // by a fixed double
        matvec,       // (m x d) * (d) -> (m)
        matvec_t,     // (m x d)^T * (m) -> (d)
        relu,
        tanh_fn,
        sigmoid,
        concat,
        slice,
        sum,
        squared_l2,
        l2_norm,
        l1_norm,
        log_clamped,  // elementwise ln(max(eps, x))
    };

    NodeId leaf(Tensor v) {
        NodeId id = push(Op::leaf, std::move(v), {});
        nodes_[id].is_leaf = true;
        return id;
    }

    NodeId constant(Tensor v) { return push(Op::constant, std::move(v), {}); }

    NodeId add(NodeId a, NodeId b) {
        require_same_shape(value(a), value(b), "tape add");
        Tensor out = value(a);
        const Tensor& vb = value(b);
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] += vb[i];
        return push(Op::add, std::move(out), {a, b});
    }

    NodeId sub(NodeId a, NodeId b) {
        require_same_shape(value(a), value(b), "tape sub");
        Tensor out = value(a);
        const Tensor& vb = value(b);
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] -= vb[i];
        return push(Op::sub, std::move(out), {a, b});
    }

    NodeId mul(NodeId a, NodeId b) {
        require_same_shape(value(a), value(b), "tape mul");
        Tensor out = value(a);
        const Tensor& vb = value(b);
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= vb[i];
        return push(Op::mul, std::move(out), {a, b});
    }

    NodeId scale(NodeId a, double c) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= c;
        NodeId id = push(Op::scale, std::move(out), {a});
        nodes_[id].aux = c;
        return id;
    }

    NodeId matvec(NodeId A, NodeId x) {
        Tensor out = gencs::matvec(value(A), value(x));
        return push(Op::matvec, std::move(out), {A, x});
    }

    NodeId matvec_t(NodeId A, NodeId v) {
        Tensor out = gencs::matvec_t(value(A), value(v));
        return push(Op::matvec_t, std::move(out), {A, v});
    }

    NodeId relu(NodeId a) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
        return push(Op::relu, std::move(out), {a});
    }

    NodeId tanh_fn(NodeId a) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::tanh(out[i]);
        return push(Op::tanh_fn, std::move(out), {a});
    }

    NodeId sigmoid(NodeId a) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
        return push(Op::sigmoid, std::move(out), {a});
    }

    NodeId concat(NodeId a, NodeId b) {
        Tensor out = gencs::concat(value(a), value(b));
        return push(Op::concat, std::move(out), {a, b});
    }

    NodeId slice(NodeId a, std::size_t offset, std::size_t len) {
        const Tensor& va = value(a);
        require_vector(va, "tape slice");
        if (offset + len > va.numel()) {
            throw DimensionError("tape slice: [" + std::to_string(offset) + ", " +
                                 std::to_string(offset + len) + ") out of range for " +
                                 va.shape_string());
        }
        Tensor out({len});
        for (std::size_t i = 0; i < len; ++i) out[i] = va[offset + i];
        NodeId id = push(Op::slice, std::move(out), {a});
        nodes_[id].aux = static_cast<double>(offset);
        return id;
    }

    NodeId sum(NodeId a) {
        double s = 0.0;
        for (double v : value(a).data()) s += v;
        return push(Op::sum, Tensor::scalar(s), {a});
    }

    NodeId squared_l2(NodeId a) {
        return push(Op::squared_l2, Tensor::scalar(value(a).squared_norm()), {a});
    }

    NodeId l2_norm(NodeId a) {
        return push(Op::l2_norm, Tensor::scalar(value(a).norm()), {a});
    }

    NodeId l1_norm(NodeId a) {
        double s = 0.0;
        for (double v : value(a).data()) s += std::abs(v);
        return push(Op::l1_norm, Tensor::scalar(s), {a});
    }

    NodeId log_clamped(NodeId a, double eps = 1e-12) {
        Tensor out = value(a);
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] = std::log(std::max(eps, out[i]));
        NodeId id = push(Op::log_clamped, std::move(out), {a});
        nodes_[id].aux = eps;
        return id;
    }

    const Tensor& value(NodeId id) const {
        if (id < 0 || id >= static_cast<NodeId>(nodes_.size())) {
            throw ContractError("tape: node id " + std::to_string(id) + " not on tape");
        }
        return nodes_[id].value;
    }

    std::size_t size() const { return nodes_.size(); }
    bool is_leaf(NodeId id) const { return nodes_[id].is_leaf; }

    void clear() { nodes_.clear(); }

    /// Gradients of a scalar output with respect to the given leaves.
    /// Leaves unreachable from the output get zero gradients.
    std::unordered_map<NodeId, Tensor> grad(NodeId output, std::span<const NodeId> leaves) const {
        const Tensor& out = value(output);
        if (out.numel() != 1) {
            throw ContractError("tape grad: output must be scalar, got shape " + out.shape_string());
        }
        if (!out.all_finite()) throw NumericError("tape grad: output is not finite");
        for (NodeId l : leaves) {
            if (l < 0 || l >= static_cast<NodeId>(nodes_.size()) || !nodes_[l].is_leaf) {
                throw ContractError("tape grad: unknown leaf " + std::to_string(l));
            }
        }

        std::vector<Tensor> adj(nodes_.size());
        std::vector<bool> live(nodes_.size(), false);
        adj[output] = Tensor::scalar(1.0);
        live[output] = true;

        for (NodeId id = output; id >= 0; --id) {
            if (!live[id]) continue;
            backward(id, adj, live);
        }

        std::unordered_map<NodeId, Tensor> grads;
        for (NodeId l : leaves) {
            grads.emplace(l, live[l] ? std::move(adj[l]) : Tensor(nodes_[l].value.shape()));
        }
        return grads;
    }

    /// Gradient with respect to a single leaf.
    Tensor grad_one(NodeId output, NodeId leaf_id) const {
        const NodeId ls[1] = {leaf_id};
        auto g = grad(output, ls);
        return std::move(g.at(leaf_id));
    }

private:
    struct Node {
        Op op;
        Tensor value;
        NodeId a = -1;
        NodeId b = -1;
        double aux = 0.0;
        bool is_leaf = false;
    };

    NodeId push(Op op, Tensor value, std::initializer_list<NodeId> parents) {
        Node n;
        n.op = op;
        n.value = std::move(value);
        auto it = parents.begin();
        if (parents.size() > 0) n.a = *it++;
        if (parents.size() > 1) n.b = *it;
        nodes_.push_back(std::move(n));
        return static_cast<NodeId>(nodes_.size() - 1);
    }

    void accumulate(std::vector<Tensor>& adj, std::vector<bool>& live, NodeId id,
                    const Tensor& g) const {
        if (!live[id]) {
            adj[id] = g;
            live[id] = true;
        } else {
            Tensor& t = adj[id];
            for (std::size_t i = 0; i < t.numel(); ++i) t[i] += g[i];
        }
    }

    void backward(NodeId id, std::vector<Tensor>& adj, std::vector<bool>& live) const {
        const Node& n = nodes_[id];
        const Tensor& g = adj[id];
        switch (n.op) {
        case Op::leaf:
        case Op::constant:
            break;
        case Op::add:
            accumulate(adj, live, n.a, g);
            accumulate(adj, live, n.b, g);
            break;
        case Op::sub: {
            accumulate(adj, live, n.a, g);
            Tensor gb = g;
            for (std::size_t i = 0; i < gb.numel(); ++i) gb[i] = -gb[i];
            accumulate(adj, live, n.b, gb);
            break;
        }
        case Op::mul: {
            const Tensor& va = nodes_[n.a].value;
            const Tensor& vb = nodes_[n.b].value;
            Tensor ga = g, gb = g;
            for (std::size_t i = 0; i < g.numel(); ++i) {
                ga[i] *= vb[i];
                gb[i] *= va[i];
            }
            accumulate(adj, live, n.a, ga);
            accumulate(adj, live, n.b, gb);
            break;
        }
        case Op::scale: {
            Tensor ga = g;
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] *= n.aux;
            accumulate(adj, live, n.a, ga);
            break;
        }
        case Op::matvec: {
            const Tensor& A = nodes_[n.a].value;
            const Tensor& x = nodes_[n.b].value;
            Tensor gA({A.rows(), A.cols()});
            for (std::size_t i = 0; i < A.rows(); ++i)
                for (std::size_t j = 0; j < A.cols(); ++j) gA(i, j) = g[i] * x[j];
            accumulate(adj, live, n.a, gA);
            accumulate(adj, live, n.b, gencs::matvec_t(A, g));
            break;
        }
        case Op::matvec_t: {
            const Tensor& A = nodes_[n.a].value;
            const Tensor& v = nodes_[n.b].value;
            Tensor gA({A.rows(), A.cols()});
            for (std::size_t i = 0; i < A.rows(); ++i)
                for (std::size_t j = 0; j < A.cols(); ++j) gA(i, j) = v[i] * g[j];
            accumulate(adj, live, n.a, gA);
            accumulate(adj, live, n.b, gencs::matvec(A, g));
            break;
        }
        case Op::relu: {
            const Tensor& x = nodes_[n.a].value;
            Tensor ga = g;
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] = x[i] > 0.0 ? ga[i] : 0.0;
            accumulate(adj, live, n.a, ga);
            break;
        }
        case Op::tanh_fn: {
            Tensor ga = g;
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] *= 1.0 - n.value[i] * n.value[i];
            accumulate(adj, live, n.a, ga);
            break;
        }
        case Op::sigmoid: {
            Tensor ga = g;
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] *= n.value[i] * (1.0 - n.value[i]);
            accumulate(adj, live, n.a, ga);
            break;
        }
        case Op::concat: {
            const std::size_t na = nodes_[n.a].value.numel();
            const std::size_t nb = nodes_[n.b].value.numel();
            Tensor ga({na}), gb({nb});
            for (std::size_t i = 0; i < na; ++i) ga[i] = g[i];
            for (std::size_t i = 0; i < nb; ++i) gb[i] = g[na + i];
            accumulate(adj, live, n.a, ga);
            accumulate(adj, live, n.b, gb);
            break;
        }
        case Op::slice: {
            const std::size_t offset = static_cast<std::size_t>(n.aux);
            Tensor ga(nodes_[n.a].value.shape());
            for (std::size_t i = 0; i < g.numel(); ++i) ga[offset + i] = g[i];
            accumulate(adj, live, n.a, ga);
            break;
        }
        case Op::sum: {
            Tensor ga(nodes_[n.a].value.shape());
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] = g[0];
            accumulate(adj, live, n.a, ga);
            break;
        }
        case Op::squared_l2: {
            const Tensor& x = nodes_[n.a].value;
            Tensor ga(x.shape());
            for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] = 2.0 * x[i] * g[0];
            accumulate(adj, live, n.a, ga);
            break;
        }
        case Op::l2_norm: {
            const Tensor& x = nodes_[n.a].value;
            const double nrm = n.value[0];
            Tensor ga(x.shape());
            if (nrm > 0.0) {
                for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] = g[0] * x[i] / nrm;
            }
            accumulate(adj, live, n.a, ga);
            break;
        }
        case Op::l1_norm: {
            const Tensor& x = nodes_[n.a].value;
            Tensor ga(x.shape());
            for (std::size_t i = 0; i < ga.numel(); ++i) {
                ga[i] = g[0] * (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0));
            }
            accumulate(adj, live, n.a, ga);
            break;
        }
        case Op::log_clamped: {
            const Tensor& x = nodes_[n.a].value;
            Tensor ga = g;
            for (std::size_t i = 0; i < ga.numel(); ++i) {
                ga[i] = x[i] > n.aux ? ga[i] / x[i] : 0.0;
            }
            accumulate(adj, live, n.a, ga);
            break;
        }
        }
    }

    std::vector<Node> nodes_;
};

} // namespace gencs
