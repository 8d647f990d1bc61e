#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "fpv/tape.hpp"

using namespace fpv;

namespace {

Tensor random_tensor(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
    std::normal_distribution<double> norm(0.0, scale);
    Tensor t(r, c);
    for (double& v : t.data) v = norm(rng);
    return t;
}

// Central-difference check of d(w . out)/d(leaf) for every leaf element.
// build() must create leaves from `inputs` (in order, needs_grad=true) and
// return the output node.
void grad_check(std::vector<Tensor> inputs,
                const std::function<int(Tape&, const std::vector<int>&)>& build,
                double tol = 1e-6) {
    Tape tape;
    std::vector<int> ids;
    for (const auto& t : inputs) ids.push_back(tape.leaf(t, true));
    int out = build(tape, ids);

    std::mt19937_64 wrng(99);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::vector<double> w(tape.value(out).size());
    for (double& x : w) x = norm(wrng);

    tape.backward(out, w);
    std::vector<std::vector<double>> analytic;
    for (int id : ids) {
        auto g = tape.grad(id);
        analytic.emplace_back(g.begin(), g.end());
    }

    auto eval = [&](const std::vector<Tensor>& xs) {
        Tape fresh;
        std::vector<int> fresh_ids;
        for (const auto& t : xs) fresh_ids.push_back(fresh.leaf(t, false));
        int node = build(fresh, fresh_ids);
        auto vals = fresh.value(node);
        double sum = 0;
        for (size_t i = 0; i < vals.size(); ++i) sum += w[i] * vals[i];
        return sum;
    };

    const double h = 1e-5;
    for (size_t leaf = 0; leaf < inputs.size(); ++leaf) {
        for (size_t i = 0; i < inputs[leaf].data.size(); ++i) {
            auto plus = inputs;
            plus[leaf].data[i] += h;
            auto minus = inputs;
            minus[leaf].data[i] -= h;
            double numeric = (eval(plus) - eval(minus)) / (2 * h);
            double denom = std::max({std::fabs(numeric), std::fabs(analytic[leaf][i]), 1e-4});
            if (std::fabs(numeric - analytic[leaf][i]) > tol * denom) {
                CAPTURE(leaf);
                CAPTURE(i);
                CAPTURE(numeric);
                CAPTURE(analytic[leaf][i]);
                REQUIRE(std::fabs(numeric - analytic[leaf][i]) <= tol * denom);
            }
        }
    }
}

}  // namespace

TEST_CASE("matmul forward and gradients") {
    std::mt19937_64 rng(1);
    auto a = random_tensor(rng, 4, 3);
    auto b = random_tensor(rng, 3, 5);

    Tape tape;
    int ia = tape.leaf(a, false), ib = tape.leaf(b, false);
    int out = tape.matmul(ia, ib);
    auto v = tape.value(out);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j) {
            double sum = 0;
            for (int k = 0; k < 3; ++k) sum += a.at(i, k) * b.at(k, j);
            CHECK(v[i * 5 + j] == doctest::Approx(sum).epsilon(1e-12));
        }

    grad_check({a, b}, [](Tape& t, const std::vector<int>& ids) {
        return t.matmul(ids[0], ids[1]);
    });
}

TEST_CASE("elementwise op gradients") {
    std::mt19937_64 rng(2);
    auto a = random_tensor(rng, 3, 4);
    auto b = random_tensor(rng, 3, 4);
    auto bias = random_tensor(rng, 1, 4);

    grad_check({a, b}, [](Tape& t, const std::vector<int>& ids) { return t.add(ids[0], ids[1]); });
    grad_check({a, b},
               [](Tape& t, const std::vector<int>& ids) { return t.hadamard(ids[0], ids[1]); });
    grad_check({a, bias},
               [](Tape& t, const std::vector<int>& ids) { return t.add_rowvec(ids[0], ids[1]); });
    grad_check({a}, [](Tape& t, const std::vector<int>& ids) { return t.add_const(ids[0], 2.5); });
    grad_check({a}, [](Tape& t, const std::vector<int>& ids) { return t.sigmoid(ids[0]); });
    // ReLU away from the kink.
    for (double& v : a.data) v += (v >= 0 ? 0.5 : -0.5);
    grad_check({a}, [](Tape& t, const std::vector<int>& ids) { return t.relu(ids[0]); });

    auto positive = random_tensor(rng, 4, 1);
    for (double& v : positive.data) v = std::fabs(v) + 0.8;
    grad_check({positive}, [](Tape& t, const std::vector<int>& ids) { return t.rsqrt(ids[0]); });
}

TEST_CASE("gather, scatter, scale and segment gradients") {
    std::mt19937_64 rng(3);
    auto a = random_tensor(rng, 5, 3);
    static const std::vector<int> gather_idx{4, 0, 2, 2, 1};
    grad_check({a}, [](Tape& t, const std::vector<int>& ids) {
        return t.gather_rows(ids[0], gather_idx);
    });

    auto rows = random_tensor(rng, 6, 3);
    static const std::vector<int> scatter_idx{0, 2, 2, 1, 3, 0};
    grad_check({rows}, [](Tape& t, const std::vector<int>& ids) {
        return t.scatter_add_rows(ids[0], scatter_idx, 4);
    });

    auto scale = random_tensor(rng, 5, 1);
    grad_check({a, scale}, [](Tape& t, const std::vector<int>& ids) {
        return t.scale_rows(ids[0], ids[1]);
    });

    static const std::vector<int> seg{0, 0, 1, 1, 1};
    grad_check({a}, [](Tape& t, const std::vector<int>& ids) {
        return t.segment_mean(ids[0], seg, 2);
    });
    grad_check({a}, [](Tape& t, const std::vector<int>& ids) {
        return t.segment_sum(ids[0], seg, 2);
    });

    auto b = random_tensor(rng, 5, 2);
    grad_check({a, b}, [](Tape& t, const std::vector<int>& ids) {
        return t.concat_cols(ids[0], ids[1]);
    });
}

TEST_CASE("composite expression gradient") {
    std::mt19937_64 rng(4);
    auto x = random_tensor(rng, 6, 4);
    auto w1 = random_tensor(rng, 4, 4, 0.5);
    auto w2 = random_tensor(rng, 4, 1, 0.5);
    static const std::vector<int> seg{0, 0, 0, 1, 1, 1};

    grad_check({x, w1, w2}, [](Tape& t, const std::vector<int>& ids) {
        int h = t.sigmoid(t.matmul(ids[0], ids[1]));
        int pooled = t.segment_mean(h, seg, 2);
        return t.matmul(pooled, ids[2]);
    });
}

TEST_CASE("tape reuse after reset gives identical results") {
    std::mt19937_64 rng(5);
    auto a = random_tensor(rng, 8, 8);
    auto b = random_tensor(rng, 8, 8);

    Tape tape;
    std::vector<double> first;
    for (int round = 0; round < 3; ++round) {
        tape.reset();
        int ia = tape.leaf(a, true), ib = tape.leaf(b, false);
        int out = tape.sigmoid(tape.matmul(ia, ib));
        auto v = tape.value(out);
        if (round == 0) {
            first.assign(v.begin(), v.end());
        } else {
            for (size_t i = 0; i < v.size(); ++i) CHECK(v[i] == first[i]);
        }
        std::vector<double> seed(v.size(), 1.0);
        tape.backward(out, seed);
    }
}

TEST_CASE("backward skips grad-free leaves") {
    std::mt19937_64 rng(6);
    auto a = random_tensor(rng, 2, 2);
    auto b = random_tensor(rng, 2, 2);
    Tape tape;
    int ia = tape.leaf(a, true);
    int ib = tape.leaf(b, false);
    int out = tape.matmul(ia, ib);
    std::vector<double> seed(4, 1.0);
    tape.backward(out, seed);
    CHECK(tape.grad(ia).size() == 4);  // populated
}
