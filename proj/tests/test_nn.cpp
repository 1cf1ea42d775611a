#include <catch2/catch_amalgamated.hpp>

#include <floornav/nn.hpp>

#include "helpers.hpp"

using namespace floornav;

TEST_CASE("dense layer gradients match central differences") {
    Rng rng(1);
    nn::ParamLayout layout;
    nn::Dense dense;
    dense.init(layout, 5, 3);
    std::vector<double> p(layout.size);
    dense.xavier(p, rng);

    std::vector<double> x(5), wout(3);
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : wout) v = rng.uniform(-1, 1);

    auto loss = [&] {
        std::vector<double> y(3);
        dense.fwd(p.data(), x.data(), y.data());
        double s = 0;
        for (int i = 0; i < 3; ++i) s += wout[i] * y[i] * y[i];
        return s;
    };

    std::vector<double> g(layout.size, 0.0), dx(5, 0.0), y(3);
    dense.fwd(p.data(), x.data(), y.data());
    std::vector<double> dy(3);
    for (int i = 0; i < 3; ++i) dy[i] = 2.0 * wout[i] * y[i];
    dense.bwd(p.data(), x.data(), dy.data(), g.data(), dx.data());

    auto fd = testutil::finite_diff(loss, p);
    CHECK(testutil::max_rel_error(g, fd) < 1e-6);

    // input gradient via FD on x
    auto fdx = testutil::finite_diff(loss, x);
    CHECK(testutil::max_rel_error(dx, fdx) < 1e-6);
}

TEST_CASE("activation derivatives") {
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
        double x = rng.uniform(-3, 3);
        double h = 1e-6;
        double fd_tanh = (std::tanh(x + h) - std::tanh(x - h)) / (2 * h);
        double y = std::tanh(x);
        CHECK((1.0 - y * y) == Catch::Approx(fd_tanh).margin(1e-8));

        double fd_sp = (nn::softplus(x + h) - nn::softplus(x - h)) / (2 * h);
        CHECK(nn::softplus_grad(x) == Catch::Approx(fd_sp).margin(1e-8));
    }
    CHECK(nn::softplus(40.0) == 40.0);
    CHECK(nn::softplus(-40.0) == Catch::Approx(std::exp(-40.0)).margin(1e-20));
    CHECK(nn::softplus(0.0) == Catch::Approx(std::log(2.0)).margin(1e-15));
}

TEST_CASE("attention block gradients match central differences") {
    Rng rng(3);
    const int T = 3, d = 4, dff = 5, heads = 2;
    nn::ParamLayout layout;
    nn::AttnBlock block;
    block.init(layout, d, dff, heads);
    std::vector<double> p(layout.size);
    block.xavier(p, rng);

    std::vector<double> x(T * d), wout(T * d);
    for (auto& v : x) v = rng.uniform(-1, 1);
    for (auto& v : wout) v = rng.uniform(-1, 1);

    auto loss = [&] {
        nn::AttnBlock::Workspace ws;
        std::vector<double> out(T * d);
        block.fwd(p.data(), x.data(), T, ws, out.data());
        double s = 0;
        for (int i = 0; i < T * d; ++i) s += wout[i] * out[i];
        return s;
    };

    nn::AttnBlock::Workspace ws;
    std::vector<double> out(T * d);
    block.fwd(p.data(), x.data(), T, ws, out.data());
    std::vector<double> g(layout.size, 0.0), dx(T * d, 0.0);
    block.bwd(p.data(), ws, wout.data(), g.data(), dx.data());

    auto fd = testutil::finite_diff(loss, p);
    CHECK(testutil::max_rel_error(g, fd) < 1e-5);
    auto fdx = testutil::finite_diff(loss, x);
    CHECK(testutil::max_rel_error(dx, fdx) < 1e-5);
}

TEST_CASE("adamw matches a scalar reference step") {
    std::vector<double> p{0.5, -0.2, 1.0};
    std::vector<double> g{0.1, -0.3, 0.0};
    nn::AdamW opt(p.size());
    opt.lr = 0.01;
    opt.weight_decay = 0.1;
    std::vector<double> p0 = p;
    opt.step(p, g);

    for (size_t i = 0; i < p.size(); ++i) {
        double m = 0.1 * g[i];
        double v = 0.001 * g[i] * g[i];
        double mhat = m / (1 - 0.9);
        double vhat = v / (1 - 0.999);
        double want = p0[i] - 0.01 * (mhat / (std::sqrt(vhat) + 1e-8) + 0.1 * p0[i]);
        CHECK(p[i] == Catch::Approx(want).margin(1e-15));
    }
}

TEST_CASE("sinusoidal embedding is bounded and distinguishes steps") {
    std::vector<double> a(16), b(16);
    nn::sinusoidal_embedding(1, 16, a.data());
    nn::sinusoidal_embedding(2, 16, b.data());
    CHECK(a != b);
    for (double v : a) {
        CHECK(v <= 1.0);
        CHECK(v >= -1.0);
    }
    std::vector<double> again(16);
    nn::sinusoidal_embedding(1, 16, again.data());
    CHECK(a == again);
}
