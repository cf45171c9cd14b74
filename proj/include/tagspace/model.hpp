#pragma once

#include <cstdint>
#include <vector>

#include "tagspace/matrix.hpp"

namespace tagspace {

enum class Activation { Relu, Tanh };

struct ProjectorConfig {
    int input_dim = 0;
    std::vector<int> hidden_dims;  // full-scale canonical: {4096, 8192, 2048}
    int output_dim = 0;
    Activation activation = Activation::Relu;
    std::uint64_t init_seed = 0;

    std::vector<int> layer_dims() const;
};

/// Dense projector h(x): affine+activation hidden layers, affine output
/// (the raw d-vector must dot freely against word vectors).
class ProjectorNet {
public:
    struct Layer {
        Matrix weight;  // in_dim x out_dim
        std::vector<double> bias;
    };

    ProjectorNet() = default;
    explicit ProjectorNet(const ProjectorConfig& cfg);

    const ProjectorConfig& config() const { return cfg_; }
    std::vector<Layer>& layers() { return layers_; }
    const std::vector<Layer>& layers() const { return layers_; }
    std::size_t parameter_count() const;

    struct Cache {
        std::vector<Matrix> inputs;       // input to each layer
        std::vector<Matrix> pre_act;      // affine outputs (hidden layers only)
    };

    Matrix forward(const Matrix& x_batch, Cache* cache = nullptr) const;

    struct Gradients {
        std::vector<Layer> layers;  // same shapes as the parameters
    };

    /// Gradients of the scalar whose d/d(output) is grad_f.
    Gradients backward(const Cache& cache, const Matrix& grad_f) const;

private:
    ProjectorConfig cfg_;
    std::vector<Layer> layers_;
};

enum class OptimizerKind { Sgd, SgdMomentum, Adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::Sgd;
    double lr_net = 0.05;
    double lr_table = 0.05;
    double momentum = 0.9;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

/// Per-parameter buffers for momentum/adam, flat per layer.
struct OptimizerState {
    OptimizerConfig cfg;
    std::vector<ProjectorNet::Layer> m;  // first moment / velocity
    std::vector<ProjectorNet::Layer> v;  // second moment (adam)
    std::int64_t step = 0;

    void init_for(const ProjectorNet& net);
};

/// Ascent update: parameters move in the gradient direction.
void apply_update(ProjectorNet& net, const ProjectorNet::Gradients& grads,
                  OptimizerState& state);

}  // namespace tagspace
