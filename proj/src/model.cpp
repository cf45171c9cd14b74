#include "tagspace/model.hpp"

#include <cmath>
#include <random>

#include "tagspace/errors.hpp"

namespace tagspace {

std::vector<int> ProjectorConfig::layer_dims() const {
    std::vector<int> dims;
    dims.push_back(input_dim);
    for (int h : hidden_dims) dims.push_back(h);
    dims.push_back(output_dim);
    return dims;
}

ProjectorNet::ProjectorNet(const ProjectorConfig& cfg) : cfg_(cfg) {
    if (cfg.input_dim < 1 || cfg.output_dim < 1)
        throw ContractError("ProjectorNet: dims must be >= 1");
    for (int h : cfg.hidden_dims)
        if (h < 1) throw ContractError("ProjectorNet: hidden dims must be >= 1");

    std::mt19937_64 rng(cfg.init_seed);
    auto dims = cfg.layer_dims();
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        Layer l;
        l.weight = Matrix(dims[i], dims[i + 1]);
        l.bias.assign(dims[i + 1], 0.0);
        double limit = std::sqrt(6.0 / dims[i]);  // fan-in scaled uniform
        std::uniform_real_distribution<double> u(-limit, limit);
        for (double& w : l.weight.data()) w = u(rng);
        layers_.push_back(std::move(l));
    }
}

std::size_t ProjectorNet::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.data().size() + l.bias.size();
    return n;
}

Matrix ProjectorNet::forward(const Matrix& x_batch, Cache* cache) const {
    if (static_cast<int>(x_batch.cols()) != cfg_.input_dim)
        throw ContractError("forward: input dimension mismatch");
    if (!all_finite(x_batch.data()))
        throw NumericalError("forward: non-finite input");

    Matrix cur = x_batch;
    if (cache) {
        cache->inputs.clear();
        cache->pre_act.clear();
    }
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const Layer& l = layers_[li];
        if (cache) cache->inputs.push_back(cur);
        Matrix out(cur.rows(), l.bias.size());
        for (std::size_t b = 0; b < cur.rows(); ++b) {
            auto in = cur.row(b);
            auto o = out.row(b);
            for (std::size_t j = 0; j < o.size(); ++j) o[j] = l.bias[j];
            for (std::size_t i = 0; i < in.size(); ++i) {
                double xi = in[i];
                if (xi == 0.0) continue;
                axpy(xi, l.weight.row(i), o);
            }
        }
        const bool is_last = li + 1 == layers_.size();
        if (!is_last) {
            if (cache) cache->pre_act.push_back(out);
            for (double& x : out.data())
                x = cfg_.activation == Activation::Relu ? (x > 0 ? x : 0.0) : std::tanh(x);
        }
        cur = std::move(out);
    }
    return cur;
}

ProjectorNet::Gradients ProjectorNet::backward(const Cache& cache, const Matrix& grad_f) const {
    if (cache.inputs.size() != layers_.size())
        throw ContractError("backward: cache does not match network");
    if (grad_f.cols() != layers_.back().bias.size() ||
        grad_f.rows() != cache.inputs.front().rows())
        throw ContractError("backward: grad_f shape mismatch");

    Gradients g;
    g.layers.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        g.layers[i].weight = Matrix(layers_[i].weight.rows(), layers_[i].weight.cols());
        g.layers[i].bias.assign(layers_[i].bias.size(), 0.0);
    }

    Matrix delta = grad_f;  // d objective / d (layer output)
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Layer& l = layers_[li];
        const Matrix& in = cache.inputs[li];
        const bool is_last = li + 1 == layers_.size();

        if (!is_last) {
            // delta currently holds d/d(activation output); push through the
            // activation derivative at the cached pre-activation.
            const Matrix& z = cache.pre_act[li];
            for (std::size_t k = 0; k < delta.data().size(); ++k) {
                double zv = z.data()[k];
                double d = cfg_.activation == Activation::Relu
                               ? (zv > 0 ? 1.0 : 0.0)
                               : 1.0 - std::tanh(zv) * std::tanh(zv);
                delta.data()[k] *= d;
            }
        }

        for (std::size_t b = 0; b < delta.rows(); ++b) {
            auto db = delta.row(b);
            auto ib = in.row(b);
            for (std::size_t j = 0; j < db.size(); ++j) g.layers[li].bias[j] += db[j];
            for (std::size_t i = 0; i < ib.size(); ++i) {
                if (ib[i] == 0.0) continue;
                axpy(ib[i], db, g.layers[li].weight.row(i));
            }
        }

        if (li > 0) {
            Matrix prev(delta.rows(), l.weight.rows());
            for (std::size_t b = 0; b < delta.rows(); ++b) {
                auto db = delta.row(b);
                auto pb = prev.row(b);
                for (std::size_t i = 0; i < pb.size(); ++i) pb[i] = dot(l.weight.row(i), db);
            }
            delta = std::move(prev);
        }
    }
    return g;
}

void OptimizerState::init_for(const ProjectorNet& net) {
    m.clear();
    v.clear();
    step = 0;
    auto zero_like = [](const ProjectorNet::Layer& l) {
        ProjectorNet::Layer z;
        z.weight = Matrix(l.weight.rows(), l.weight.cols());
        z.bias.assign(l.bias.size(), 0.0);
        return z;
    };
    for (const auto& l : net.layers()) {
        m.push_back(zero_like(l));
        if (cfg.kind == OptimizerKind::Adam) v.push_back(zero_like(l));
    }
}

void apply_update(ProjectorNet& net, const ProjectorNet::Gradients& grads,
                  OptimizerState& state) {
    if (grads.layers.size() != net.layers().size())
        throw ContractError("apply_update: gradient/parameter layer mismatch");
    if (state.cfg.kind != OptimizerKind::Sgd && state.m.size() != net.layers().size())
        throw ContractError("apply_update: optimizer state not initialized");

    ++state.step;
    const auto& oc = state.cfg;

    for (std::size_t li = 0; li < net.layers().size(); ++li) {
        auto update_span = [&](std::span<double> p, std::span<const double> g,
                               std::span<double> m1, std::span<double> m2) {
            for (std::size_t i = 0; i < p.size(); ++i) {
                double step_val = 0.0;
                switch (oc.kind) {
                    case OptimizerKind::Sgd:
                        step_val = oc.lr_net * g[i];
                        break;
                    case OptimizerKind::SgdMomentum:
                        m1[i] = oc.momentum * m1[i] + g[i];
                        step_val = oc.lr_net * m1[i];
                        break;
                    case OptimizerKind::Adam: {
                        m1[i] = oc.adam_beta1 * m1[i] + (1 - oc.adam_beta1) * g[i];
                        m2[i] = oc.adam_beta2 * m2[i] + (1 - oc.adam_beta2) * g[i] * g[i];
                        double mh = m1[i] / (1 - std::pow(oc.adam_beta1, state.step));
                        double vh = m2[i] / (1 - std::pow(oc.adam_beta2, state.step));
                        step_val = oc.lr_net * mh / (std::sqrt(vh) + oc.adam_eps);
                        break;
                    }
                }
                p[i] += step_val;  // ascent
                if (!std::isfinite(p[i]))
                    throw NumericalError("apply_update: non-finite parameter after update");
            }
        };
        auto& L = net.layers()[li];
        const auto& G = grads.layers[li];
        std::span<double> mW, mB, vW, vB;
        if (oc.kind != OptimizerKind::Sgd) {
            mW = std::span<double>(state.m[li].weight.data());
            mB = std::span<double>(state.m[li].bias);
        }
        if (oc.kind == OptimizerKind::Adam) {
            vW = std::span<double>(state.v[li].weight.data());
            vB = std::span<double>(state.v[li].bias);
        }
        update_span(L.weight.data(), G.weight.data(), mW, vW);
        update_span(L.bias, G.bias, mB, vB);
    }
}

}  // namespace tagspace
