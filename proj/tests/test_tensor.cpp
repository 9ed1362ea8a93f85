#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vagn/errors.hpp"
#include "vagn/optimizer.hpp"
#include "vagn/tensor.hpp"

using vagn::ad::Tensor;
using vagn::ad::Tape;

namespace {

// Runs op(tape, leaves...) -> sum -> scalar loss and checks every gradient.
double check_op_gradients(
    const std::function<Tensor(Tape&, const std::vector<Tensor>&)>& op,
    const std::vector<Tensor>& values, double h = 1e-5) {
    auto forward = [&](const std::vector<Tensor>& vals) {
        Tape tape;
        std::vector<Tensor> leaves;
        for (const Tensor& v : vals) {
            leaves.push_back(tape.leaf(v));
        }
        return tape.sum(op(tape, leaves)).item();
    };
    auto analytic = [&](const std::vector<Tensor>& vals) {
        Tape tape;
        std::vector<Tensor> leaves;
        for (const Tensor& v : vals) {
            leaves.push_back(tape.leaf(v));
        }
        tape.backward(tape.sum(op(tape, leaves)));
        std::vector<Tensor> grads;
        for (const Tensor& l : leaves) {
            grads.push_back(tape.grad(l));
        }
        return grads;
    };
    return oracle::check_gradients(forward, analytic, values, h).max_rel_err;
}

}  // namespace

TEST_CASE("matmul forward examples") {
    Tape tape;
    const Tensor eye({2, 2}, {1, 0, 0, 1});
    const Tensor a({2, 2}, {1, 2, 3, 4});
    const Tensor prod = tape.matmul(eye, a);
    CHECK(prod.data == std::vector<double>{1, 2, 3, 4});

    const Tensor row({1, 2}, {1, 2});
    const Tensor col({2, 1}, {3, 4});
    CHECK(tape.matmul(row, col).item() == doctest::Approx(11.0).epsilon(1e-15));

    CHECK_THROWS_AS(tape.matmul(a, row), vagn::SchemaError);
}

TEST_CASE("matmul gradients match finite differences") {
    std::mt19937_64 rng(7);
    const std::vector<Tensor> vals{oracle::random_tensor({3, 4}, rng),
                                   oracle::random_tensor({4, 2}, rng)};
    const double err = check_op_gradients(
        [](Tape& t, const std::vector<Tensor>& l) { return t.matmul(l[0], l[1]); }, vals);
    CHECK(err < 1e-6);
}

TEST_CASE("conv2d forward examples") {
    Tape tape;
    SUBCASE("1x1 kernel scales a plane of ones") {
        const Tensor input = Tensor::full({1, 3, 3}, 1.0);
        const Tensor kernel({1, 1, 1, 1}, {2.0});
        const Tensor out = tape.conv2d(input, kernel, {}, 1, 0);
        CHECK(out.shape == std::vector<int>{1, 3, 3});
        for (double v : out.data) {
            CHECK(v == doctest::Approx(2.0).epsilon(1e-15));
        }
    }
    SUBCASE("impulse response recovers the kernel") {
        Tensor input = Tensor::zeros({1, 5, 5});
        input.data[2 * 5 + 2] = 1.0;
        std::mt19937_64 rng(3);
        const Tensor kernel = oracle::random_tensor({1, 1, 3, 3}, rng);
        const Tensor out = tape.conv2d(input, kernel, {}, 1, 1);
        for (int u = 0; u < 3; ++u) {
            for (int v = 0; v < 3; ++v) {
                CHECK(out.data[static_cast<std::size_t>((u + 1) * 5 + (v + 1))] ==
                      doctest::Approx(kernel.data[static_cast<std::size_t>(u * 3 + v)])
                          .epsilon(1e-14));
            }
        }
    }
    SUBCASE("non-positive output size is an error") {
        const Tensor input = Tensor::full({1, 2, 2}, 1.0);
        const Tensor kernel = Tensor::zeros({1, 1, 5, 5});
        CHECK_THROWS_AS(tape.conv2d(input, kernel, {}, 1, 0), vagn::SchemaError);
    }
}

TEST_CASE("conv2d gradients match finite differences") {
    std::mt19937_64 rng(11);
    const std::vector<Tensor> vals{oracle::random_tensor({2, 8, 8}, rng),
                                   oracle::random_tensor({4, 2, 3, 3}, rng),
                                   oracle::random_tensor({4}, rng)};
    const double err = check_op_gradients(
        [](Tape& t, const std::vector<Tensor>& l) { return t.conv2d(l[0], l[1], l[2], 2, 1); },
        vals);
    CHECK(err < 1e-5);
}

TEST_CASE("relu and sigmoid") {
    Tape tape;
    const Tensor x = Tensor::vector({-1.0, 0.0, 2.0});
    CHECK(tape.relu(x).data == std::vector<double>{0.0, 0.0, 2.0});
    CHECK(tape.sigmoid(Tensor::scalar(0.0)).item() == doctest::Approx(0.5).epsilon(1e-15));

    std::mt19937_64 rng(5);
    // Keep relu inputs away from the kink.
    Tensor v = oracle::random_tensor({10}, rng);
    for (double& d : v.data) {
        if (std::abs(d) < 0.05) {
            d += 0.1;
        }
    }
    const double relu_err = check_op_gradients(
        [](Tape& t, const std::vector<Tensor>& l) { return t.relu(l[0]); }, {v});
    CHECK(relu_err < 1e-6);
    const double sig_err = check_op_gradients(
        [](Tape& t, const std::vector<Tensor>& l) { return t.sigmoid(l[0]); },
        {oracle::random_tensor({10}, rng)});
    CHECK(sig_err < 1e-6);
}

TEST_CASE("softmax_columns") {
    Tape tape;
    SUBCASE("zeros give the uniform matrix") {
        const Tensor out = tape.softmax_columns(Tensor::zeros({2, 2}));
        for (double v : out.data) {
            CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
        }
    }
    SUBCASE("closed-form column") {
        const Tensor m({2, 2}, {std::log(2.0), 0.0, 0.0, 0.0});
        const Tensor out = tape.softmax_columns(m);
        CHECK(out.data[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(out.data[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
    SUBCASE("columns sum to one") {
        std::mt19937_64 rng(13);
        const Tensor m = oracle::random_tensor({5, 5}, rng, -3.0, 3.0);
        const Tensor out = tape.softmax_columns(m);
        for (int j = 0; j < 5; ++j) {
            double s = 0.0;
            for (int i = 0; i < 5; ++i) {
                s += out.data[static_cast<std::size_t>(i * 5 + j)];
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("Jacobian matches finite differences") {
        std::mt19937_64 rng(17);
        // Weighted sum gives a nontrivial pullback through the Jacobian.
        const Tensor w = oracle::random_tensor({5, 5}, rng);
        const double err = check_op_gradients(
            [&](Tape& t, const std::vector<Tensor>& l) {
                return t.mul(t.softmax_columns(l[0]), t.leaf(w));
            },
            {oracle::random_tensor({5, 5}, rng)});
        CHECK(err < 1e-5);
    }
}

TEST_CASE("global average pooling") {
    Tape tape;
    const Tensor c = Tensor::full({1, 4, 4}, 3.5);
    CHECK(tape.global_avg_pool(c).item() == doctest::Approx(3.5).epsilon(1e-15));
    const Tensor m({1, 2, 2}, {1, 2, 3, 4});
    CHECK(tape.global_avg_pool(m).item() == doctest::Approx(2.5).epsilon(1e-15));

    std::mt19937_64 rng(19);
    const double err = check_op_gradients(
        [](Tape& t, const std::vector<Tensor>& l) { return t.global_avg_pool(l[0]); },
        {oracle::random_tensor({3, 4, 4}, rng)});
    CHECK(err < 1e-6);
}

TEST_CASE("mse loss") {
    Tape tape;
    const Tensor a = Tensor::vector({1.0, 1.0});
    CHECK(tape.mse_loss(a, a).item() == 0.0);
    CHECK(tape.mse_loss(a, Tensor::vector({0.0, 2.0})).item() ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(tape.mse_loss(a, Tensor::vector({1.0})), vagn::SchemaError);

    std::mt19937_64 rng(23);
    const Tensor target = oracle::random_tensor({6}, rng);
    const double err = check_op_gradients(
        [&](Tape& t, const std::vector<Tensor>& l) { return t.mse_loss(l[0], t.leaf(target)); },
        {oracle::random_tensor({6}, rng)});
    CHECK(err < 1e-6);
}

TEST_CASE("backward on sum of squares") {
    Tape tape;
    const Tensor w = tape.leaf(Tensor::vector({1.0, -2.0}));
    const Tensor loss = tape.sum(tape.mul(w, w));
    tape.backward(loss);
    const Tensor g = tape.grad(w);
    CHECK(g.data == std::vector<double>{2.0, -4.0});

    CHECK_THROWS_AS(tape.backward(tape.leaf(Tensor::vector({1.0, 2.0}))), vagn::SchemaError);
}

TEST_CASE("sgd step matches hand arithmetic") {
    vagn::ad::ParamSet params;
    params.add("w", Tensor::vector({1.0, -2.0}));
    vagn::ad::OptimizerConfig cfg;
    cfg.mode = vagn::ad::OptimizerConfig::Mode::sgd;
    cfg.lr = 0.1;
    vagn::ad::Optimizer opt(cfg);
    opt.step(params, {Tensor::vector({2.0, -4.0})});
    CHECK(params.at("w").data[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(params.at("w").data[1] == doctest::Approx(-1.6).epsilon(1e-15));

    CHECK_THROWS_AS(opt.step(params, {Tensor::vector({1.0})}), vagn::SchemaError);
}

TEST_CASE("elementwise op gradients") {
    std::mt19937_64 rng(29);
    auto two = [&] {
        return std::vector<Tensor>{oracle::random_tensor({7}, rng),
                                   oracle::random_tensor({7}, rng, 0.5, 2.0)};
    };
    CHECK(check_op_gradients(
              [](Tape& t, const std::vector<Tensor>& l) { return t.add(l[0], l[1]); }, two()) <
          1e-6);
    CHECK(check_op_gradients(
              [](Tape& t, const std::vector<Tensor>& l) { return t.sub(l[0], l[1]); }, two()) <
          1e-6);
    CHECK(check_op_gradients(
              [](Tape& t, const std::vector<Tensor>& l) { return t.mul(l[0], l[1]); }, two()) <
          1e-6);
    CHECK(check_op_gradients(
              [](Tape& t, const std::vector<Tensor>& l) { return t.div(l[0], l[1]); }, two()) <
          1e-5);
    CHECK(check_op_gradients(
              [](Tape& t, const std::vector<Tensor>& l) { return t.sqrt(l[0]); },
              {oracle::random_tensor({7}, rng, 0.5, 3.0)}) < 1e-6);
    CHECK(check_op_gradients(
              [](Tape& t, const std::vector<Tensor>& l) { return t.matvec(l[0], l[1]); },
              {oracle::random_tensor({3, 5}, rng), oracle::random_tensor({5}, rng)}) < 1e-6);
    CHECK(check_op_gradients(
              [](Tape& t, const std::vector<Tensor>& l) {
                  return t.concat({t.slice(l[0], 1, 3), t.scale(l[0], 2.0)});
              },
              {oracle::random_tensor({6}, rng)}) < 1e-6);
}

TEST_CASE("replay determinism: identical seeds give bit-identical losses") {
    auto run = [](std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        Tape tape;
        const Tensor a = tape.leaf(oracle::random_tensor({4, 4}, rng));
        const Tensor b = tape.leaf(oracle::random_tensor({4, 4}, rng));
        const Tensor loss =
            tape.mse_loss(tape.matvec(tape.softmax_columns(tape.matmul(a, b)),
                                      oracle::random_tensor({4}, rng)),
                          oracle::random_tensor({4}, rng));
        tape.backward(loss);
        return std::pair<double, std::vector<double>>{loss.item(), tape.grad(a).data};
    };
    const auto [l1, g1] = run(42);
    const auto [l2, g2] = run(42);
    CHECK(l1 == l2);
    CHECK(g1 == g2);
}

TEST_CASE("finite inputs never produce non-finite outputs") {
    std::mt19937_64 rng(31);
    Tape tape;
    const Tensor big = oracle::random_tensor({16}, rng, -1e3, 1e3);
    CHECK(vagn::ad::all_finite(tape.sigmoid(big)));
    CHECK(vagn::ad::all_finite(tape.relu(big)));
    const Tensor sq = oracle::random_tensor({4, 4}, rng, -1e3, 1e3);
    CHECK(vagn::ad::all_finite(tape.softmax_columns(sq)));
    CHECK(vagn::ad::all_finite(tape.matmul(sq, sq)));

    // NaN injected into a leaf is rejected.
    Tensor bad = Tensor::vector({1.0, std::nan("")});
    CHECK_THROWS_AS(tape.leaf(bad), vagn::NumericError);
}
