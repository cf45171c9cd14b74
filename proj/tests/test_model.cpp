#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "gradcheck.hpp"
#include "tagspace/errors.hpp"
#include "tagspace/model.hpp"

using namespace tagspace;

namespace {

// No hidden layers: a single affine map we can reason about by hand.
ProjectorNet affine_net(int in, int out, std::uint64_t seed = 1) {
    ProjectorConfig cfg;
    cfg.input_dim = in;
    cfg.output_dim = out;
    cfg.init_seed = seed;
    return ProjectorNet(cfg);
}

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Matrix m(r, c);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& x : m.data()) x = u(rng);
    return m;
}

}  // namespace

TEST_CASE("a single affine layer set to identity passes inputs through") {
    auto net = affine_net(3, 3);
    auto& layer = net.layers()[0];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) layer.weight[i][j] = (i == j) ? 1.0 : 0.0;
    layer.bias.assign(3, 0.0);

    Matrix x = random_matrix(4, 3, 2);
    Matrix y = net.forward(x);
    CHECK(y == x);

    layer.bias = {0.5, -1.0, 2.0};
    Matrix y2 = net.forward(x);
    for (std::size_t r = 0; r < 4; ++r)
        for (int c = 0; c < 3; ++c)
            CHECK(y2[r][c] == doctest::Approx(x[r][c] + layer.bias[c]).epsilon(1e-15));
}

TEST_CASE("zero weights and biases map everything to zero") {
    ProjectorConfig cfg;
    cfg.input_dim = 4;
    cfg.hidden_dims = {5};
    cfg.output_dim = 3;
    cfg.activation = Activation::Tanh;
    ProjectorNet net(cfg);
    for (auto& l : net.layers()) {
        for (double& w : l.weight.data()) w = 0.0;
        for (double& b : l.bias) b = 0.0;
    }
    Matrix y = net.forward(random_matrix(2, 4, 3));
    for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("initialization is deterministic in the seed") {
    ProjectorConfig cfg;
    cfg.input_dim = 6;
    cfg.hidden_dims = {8, 4};
    cfg.output_dim = 5;
    cfg.init_seed = 77;
    ProjectorNet a(cfg), b(cfg);
    cfg.init_seed = 78;
    ProjectorNet c(cfg);
    for (std::size_t i = 0; i < a.layers().size(); ++i) {
        CHECK(a.layers()[i].weight == b.layers()[i].weight);
        CHECK(a.layers()[i].bias == b.layers()[i].bias);
    }
    CHECK(a.layers()[0].weight != c.layers()[0].weight);

    // He-style bound: |w| <= sqrt(6 / fan_in).
    const std::vector<int> fan{6, 8, 4};
    for (std::size_t i = 0; i < a.layers().size(); ++i) {
        double limit = std::sqrt(6.0 / fan[i]);
        for (double w : a.layers()[i].weight.data()) CHECK(std::abs(w) <= limit);
    }
}

TEST_CASE("parameter_count matches the layer shapes") {
    ProjectorConfig cfg;
    cfg.input_dim = 10;
    cfg.hidden_dims = {7, 3};
    cfg.output_dim = 4;
    ProjectorNet net(cfg);
    CHECK(net.parameter_count() == (10 * 7 + 7) + (7 * 3 + 3) + (3 * 4 + 4));
}

TEST_CASE("backward of a zero output gradient is zero everywhere") {
    ProjectorConfig cfg;
    cfg.input_dim = 4;
    cfg.hidden_dims = {6};
    cfg.output_dim = 3;
    cfg.init_seed = 5;
    ProjectorNet net(cfg);
    ProjectorNet::Cache cache;
    net.forward(random_matrix(3, 4, 9), &cache);
    auto grads = net.backward(cache, Matrix(3, 3));
    for (const auto& l : grads.layers) {
        for (double g : l.weight.data()) CHECK(g == 0.0);
        for (double g : l.bias) CHECK(g == 0.0);
    }
}

TEST_CASE("single affine layer gradients match the closed form") {
    // Objective sum_ij grad_f[i][j] * y[i][j] for fixed grad_f gives
    // dW = x^T grad_f and db = column sums of grad_f.
    auto net = affine_net(3, 2, 11);
    Matrix x = random_matrix(4, 3, 12);
    Matrix gf = random_matrix(4, 2, 13);

    ProjectorNet::Cache cache;
    net.forward(x, &cache);
    auto grads = net.backward(cache, gf);

    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) {
            double expect = 0;
            for (int b = 0; b < 4; ++b) expect += x[b][i] * gf[b][j];
            CHECK(grads.layers[0].weight[i][j] == doctest::Approx(expect).epsilon(1e-12));
        }
    for (int j = 0; j < 2; ++j) {
        double expect = 0;
        for (int b = 0; b < 4; ++b) expect += gf[b][j];
        CHECK(grads.layers[0].bias[j] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("full network gradients agree with finite differences") {
    for (Activation act : {Activation::Tanh, Activation::Relu}) {
        ProjectorConfig cfg;
        cfg.input_dim = 3;
        cfg.hidden_dims = {5, 4};
        cfg.output_dim = 2;
        cfg.activation = act;
        // Seed picked so no relu pre-activation sits within 1e-4 of zero,
        // keeping the finite differences on one side of the kink.
        cfg.init_seed = act == Activation::Relu ? 104 : 7;
        ProjectorNet net(cfg);

        Matrix x = random_matrix(6, 3, 21);
        Matrix gf = random_matrix(6, 2, 22);

        auto objective = [&] {
            Matrix y = net.forward(x);
            double s = 0;
            for (std::size_t i = 0; i < y.data().size(); ++i) s += gf.data()[i] * y.data()[i];
            return s;
        };

        if (act == Activation::Relu) {
            ProjectorNet::Cache cache;
            net.forward(x, &cache);
            for (const auto& pre : cache.pre_act)
                for (double v : pre.data()) REQUIRE(std::abs(v) > 1e-4);
        }

        ProjectorNet::Cache cache;
        net.forward(x, &cache);
        auto grads = net.backward(cache, gf);

        for (std::size_t li = 0; li < net.layers().size(); ++li) {
            auto& layer = net.layers()[li];
            double werr = gradcheck::max_rel_error(layer.weight.data(),
                                                   grads.layers[li].weight.data(), objective);
            double berr = gradcheck::max_rel_error(layer.bias, grads.layers[li].bias, objective);
            CHECK(werr < 1e-6);
            CHECK(berr < 1e-6);
        }
    }
}

TEST_CASE("apply_update with zero learning rate changes nothing") {
    auto net = affine_net(3, 2, 31);
    Matrix before = net.layers()[0].weight;
    OptimizerState state;
    state.cfg.lr_net = 0.0;
    state.init_for(net);

    ProjectorNet::Gradients g;
    g.layers.push_back({random_matrix(3, 2, 32), {1.0, -1.0}});
    apply_update(net, g, state);
    CHECK(net.layers()[0].weight == before);
}

TEST_CASE("sgd ascends along the gradient") {
    auto net = affine_net(1, 1, 41);
    net.layers()[0].weight[0][0] = 1.0;
    net.layers()[0].bias[0] = -3.0;
    OptimizerState state;
    state.cfg.kind = OptimizerKind::Sgd;
    state.cfg.lr_net = 0.1;
    state.init_for(net);

    ProjectorNet::Gradients g;
    Matrix gw(1, 1);
    gw[0][0] = 2.0;
    g.layers.push_back({gw, {0.5}});
    apply_update(net, g, state);
    CHECK(net.layers()[0].weight[0][0] == doctest::Approx(1.2).epsilon(1e-15));
    CHECK(net.layers()[0].bias[0] == doctest::Approx(-2.95).epsilon(1e-15));
}

TEST_CASE("momentum accumulates velocity across steps") {
    auto net = affine_net(1, 1, 51);
    net.layers()[0].weight[0][0] = 0.0;
    net.layers()[0].bias[0] = 0.0;
    OptimizerState state;
    state.cfg.kind = OptimizerKind::SgdMomentum;
    state.cfg.lr_net = 1.0;
    state.cfg.momentum = 0.5;
    state.init_for(net);

    ProjectorNet::Gradients g;
    Matrix gw(1, 1);
    gw[0][0] = 1.0;
    g.layers.push_back({gw, {0.0}});
    // v1 = 1, w = 1; v2 = 0.5 + 1 = 1.5, w = 2.5
    apply_update(net, g, state);
    CHECK(net.layers()[0].weight[0][0] == doctest::Approx(1.0).epsilon(1e-15));
    apply_update(net, g, state);
    CHECK(net.layers()[0].weight[0][0] == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("adam's first step moves by roughly the learning rate") {
    auto net = affine_net(1, 1, 61);
    net.layers()[0].weight[0][0] = 0.0;
    OptimizerState state;
    state.cfg.kind = OptimizerKind::Adam;
    state.cfg.lr_net = 0.01;
    state.init_for(net);

    ProjectorNet::Gradients g;
    Matrix gw(1, 1);
    gw[0][0] = 3.7;  // any constant gradient: bias-corrected ratio is 1
    g.layers.push_back({gw, {0.0}});
    apply_update(net, g, state);
    CHECK(net.layers()[0].weight[0][0] == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("apply_update rejects non-finite gradients") {
    auto net = affine_net(2, 2, 71);
    OptimizerState state;
    state.init_for(net);
    ProjectorNet::Gradients g;
    Matrix gw(2, 2);
    gw[0][1] = std::numeric_limits<double>::quiet_NaN();
    g.layers.push_back({gw, {0.0, 0.0}});
    CHECK_THROWS_AS(apply_update(net, g, state), NumericalError);
}
