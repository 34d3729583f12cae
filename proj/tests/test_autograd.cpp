#include <catch2/catch_amalgamated.hpp>

#include "ald/gradcheck.hpp"
#include "ald/ops.hpp"

#include <cmath>

using namespace ald;

namespace {

Tensor random_tensor(const Shape& shape, Rng& rng, bool requires_grad, double lo = -1.0, double hi = 1.0) {
    std::vector<double> vals(shape_numel(shape));
    for (double& v : vals) v = rand_uniform(rng, lo, hi);
    return Tensor::from_data(shape, std::move(vals), requires_grad);
}

} // namespace

TEST_CASE("tensor construction and invariants") {
    Tensor t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.numel() == 6);
    CHECK(t.at(1, 2) == 6.0);
    CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor::from_data({1, 2}, {1.0, std::nan("")}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor::zeros({0, 2}), std::invalid_argument);
}

TEST_CASE("forward values match hand arithmetic") {
    SECTION("matmul") {
        Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
        Tensor b = Tensor::from_data({2, 1}, {1, 1});
        Tensor c = matmul(a, b);
        CHECK(c.at(0, 0) == 3.0);
        CHECK(c.at(1, 0) == 7.0);
    }
    SECTION("softmax of uniform logits") {
        Tensor y = softmax(Tensor::from_data({1, 2}, {0, 0}));
        CHECK(y.at(0, 0) == Catch::Approx(0.5).margin(1e-12));
        CHECK(y.at(0, 1) == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("layer norm forces mean 0 variance 1") {
        Tensor gain = Tensor::from_data({1, 2}, {1, 1});
        Tensor bias = Tensor::from_data({1, 2}, {0, 0});
        Tensor y = layer_norm(Tensor::from_data({1, 2}, {1, 3}), gain, bias, 0.0);
        CHECK(y.at(0, 0) == Catch::Approx(-1.0).margin(1e-12));
        CHECK(y.at(0, 1) == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("shape mismatch names the primitive and shapes") {
        Tensor a = Tensor::zeros({2, 3});
        Tensor b = Tensor::zeros({4, 5});
        CHECK_THROWS_WITH(matmul(a, b), Catch::Matchers::ContainsSubstring("matmul") &&
                                            Catch::Matchers::ContainsSubstring("[2x3]") &&
                                            Catch::Matchers::ContainsSubstring("[4x5]"));
    }
}

TEST_CASE("softmax invariants") {
    Rng rng(7);
    Tensor x = random_tensor({5, 9}, rng, false, -4.0, 4.0);
    Tensor y = softmax(x);
    for (int i = 0; i < y.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < y.cols(); ++j) {
            CHECK(y.at(i, j) >= 0.0);
            CHECK(y.at(i, j) <= 1.0);
            s += y.at(i, j);
        }
        CHECK(s == Catch::Approx(1.0).margin(1e-9));
    }
    // shift invariance: softmax(x + c) == softmax(x)
    const double c = 3.7;
    std::vector<double> shifted = x.data();
    for (double& v : shifted) v += c;
    Tensor y2 = softmax(Tensor::from_data(x.shape(), shifted));
    for (size_t k = 0; k < y.numel(); ++k)
        CHECK(y2.data()[k] == Catch::Approx(y.data()[k]).margin(1e-9));
}

TEST_CASE("layer norm row statistics") {
    Rng rng(11);
    const int n = 16;
    Tensor gain = Tensor::from_data({1, n}, std::vector<double>(n, 1.0));
    Tensor bias = Tensor::zeros({1, n});
    Tensor x = random_tensor({6, n}, rng, false, -2.0, 2.0);
    Tensor y = layer_norm(x, gain, bias);
    for (int i = 0; i < y.rows(); ++i) {
        double mean = 0.0;
        for (int j = 0; j < n; ++j) mean += y.at(i, j);
        mean /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) var += (y.at(i, j) - mean) * (y.at(i, j) - mean);
        var /= n;
        CHECK(std::abs(mean) < 1e-9);
        CHECK(var == Catch::Approx(1.0).margin(1e-6));
    }
    // all-constant row: eps keeps the output finite (zeros)
    Tensor flat = layer_norm(Tensor::zeros({1, n}), gain, bias);
    for (double v : flat.data()) CHECK(v == 0.0);
}

TEST_CASE("backward basics") {
    SECTION("d(x*x)/dx at x=3 is 6") {
        Tensor x = Tensor::from_data({1, 1}, {3.0}, true);
        Tensor y = mul(x, x);
        y.backward();
        CHECK(x.grad()[0] == Catch::Approx(6.0).margin(1e-12));
    }
    SECTION("gradient of sum(softmax(x)) is zero") {
        Tensor x = Tensor::from_data({1, 4}, {0.3, -1.2, 2.0, 0.7}, true);
        Tensor loss = sum(softmax(x));
        loss.backward();
        for (double g : x.grad()) CHECK(std::abs(g) < 1e-12);
    }
    SECTION("backward on non-scalar errors") {
        Tensor x = Tensor::from_data({1, 2}, {1, 2}, true);
        Tensor y = relu(x);
        CHECK_THROWS_WITH(y.backward(), Catch::Matchers::ContainsSubstring("scalar"));
    }
    SECTION("backward twice without reset errors") {
        Tensor x = Tensor::from_data({1, 1}, {2.0}, true);
        Tensor y = mul(x, x);
        y.backward();
        CHECK_THROWS_WITH(y.backward(), Catch::Matchers::ContainsSubstring("already"));
    }
    SECTION("cross entropy gradient equals softmax minus one-hot") {
        // independent oracle: compute softmax(z) by hand and check both the
        // analytic backward and central differences against it
        Tensor z = Tensor::from_data({1, 3}, {0.2, -0.4, 1.1}, true);
        const std::vector<int> label{2};
        Tensor loss = cross_entropy_softmax(z, label);
        loss.backward();

        double mx = std::max({0.2, -0.4, 1.1});
        double e0 = std::exp(0.2 - mx), e1 = std::exp(-0.4 - mx), e2 = std::exp(1.1 - mx);
        const double s = e0 + e1 + e2;
        const double expected[3] = {e0 / s, e1 / s, e2 / s - 1.0};
        for (int j = 0; j < 3; ++j) CHECK(z.grad()[j] == Catch::Approx(expected[j]).margin(1e-12));

        const double eps = 1e-5;
        for (int j = 0; j < 3; ++j) {
            NoGradGuard ng;
            std::vector<double> v = z.data();
            v[j] += eps;
            const double fp = cross_entropy_softmax(Tensor::from_data({1, 3}, v), label).item();
            v[j] -= 2 * eps;
            const double fm = cross_entropy_softmax(Tensor::from_data({1, 3}, v), label).item();
            const double numeric = (fp - fm) / (2 * eps);
            CHECK(grad_rel_err(z.grad()[j], numeric) < 1e-4);
        }
    }
}

TEST_CASE("finite difference checker") {
    SECTION("linear map is exact") {
        Rng rng(3);
        Tensor w = random_tensor({1, 8}, rng, true);
        Tensor x = random_tensor({8, 1}, rng, false);
        auto loss = [&] { return matmul(w, x); };
        GradCheckReport rep = finite_diff_check(loss, {{"w", w}}, 1e-5, 1e-4);
        CHECK(rep.pass);
        CHECK(rep.max_rel_err < 1e-10);
        CHECK(rep.excluded_entries == 0);
    }
    SECTION("relu kink entries are excluded") {
        Tensor x = Tensor::from_data({1, 3}, {0.5, 1e-7, -0.5}, true);
        auto loss = [&] { return sum(relu(x)); };
        GradCheckReport rep = finite_diff_check(loss, {{"x", x}}, 1e-5, 1e-4);
        CHECK(rep.pass);
        CHECK(rep.params[0].excluded == 1);
        CHECK(rep.params[0].checked == 2);
    }
    SECTION("non-scalar function errors") {
        Tensor x = Tensor::from_data({1, 2}, {1, 2}, true);
        auto bad = [&] { return relu(x); };
        CHECK_THROWS_AS(finite_diff_check(bad, {{"x", x}}), std::runtime_error);
    }
}

TEST_CASE("per-primitive gradient checks") {
    Rng rng(17);
    const double eps = 1e-5, tol = 1e-4;

    auto check = [&](const char* name, const std::function<Tensor()>& loss,
                     std::vector<std::pair<std::string, Tensor>> params) {
        GradCheckReport rep = finite_diff_check(loss, std::move(params), eps, tol);
        INFO(name << " max rel err " << rep.max_rel_err);
        CHECK(rep.pass);
    };

    Tensor a = random_tensor({3, 4}, rng, true);
    Tensor b = random_tensor({3, 4}, rng, true);
    Tensor row = random_tensor({1, 4}, rng, true);
    Tensor m1 = random_tensor({3, 5}, rng, true);
    Tensor m2 = random_tensor({5, 2}, rng, true);
    Tensor probe = random_tensor({3, 4}, rng, false);

    check("add", [&] { return sum(mul(probe, add(a, b))); }, {{"a", a}, {"b", b}});
    check("add_row_broadcast", [&] { return sum(mul(probe, add(a, row))); }, {{"a", a}, {"row", row}});
    check("mul", [&] { return sum(mul(probe, mul(a, b))); }, {{"a", a}, {"b", b}});
    check("scale", [&] { return sum(scale(a, -2.5)); }, {{"a", a}});
    check("matmul", [&] { return sum(matmul(m1, m2)); }, {{"m1", m1}, {"m2", m2}});
    check("transpose", [&] { return sum(mul(probe, transpose(transpose(a)))); }, {{"a", a}});
    // inputs shifted away from the kink so nothing is excluded
    Tensor pos = random_tensor({3, 4}, rng, true, 0.5, 1.5);
    Tensor neg = random_tensor({3, 4}, rng, true, -1.5, -0.5);
    check("relu_positive", [&] { return sum(mul(probe, relu(pos))); }, {{"x", pos}});
    check("relu_negative", [&] { return sum(mul(probe, relu(neg))); }, {{"x", neg}});
    check("softmax", [&] { return sum(mul(probe, softmax(a))); }, {{"a", a}});

    Tensor gain = random_tensor({1, 4}, rng, true, 0.5, 1.5);
    Tensor bias = random_tensor({1, 4}, rng, true);
    check("layer_norm", [&] { return sum(mul(probe, layer_norm(a, gain, bias))); },
          {{"a", a}, {"gain", gain}, {"bias", bias}});

    Tensor cx = random_tensor({6, 3}, rng, true);
    Tensor cw = random_tensor({3, 3, 2}, rng, true);
    Tensor cb = random_tensor({1, 2}, rng, true);
    Tensor cprobe = random_tensor({6, 2}, rng, false);
    check("conv1d", [&] { return sum(mul(cprobe, conv1d(cx, cw, cb))); },
          {{"x", cx}, {"w", cw}, {"b", cb}});

    check("maxpool_tokens", [&] { return sum(maxpool_tokens(a)); }, {{"a", a}});
    Tensor probe_wide = random_tensor({3, 8}, rng, false);
    check("concat_cols", [&] { return sum(mul(probe_wide, concat_cols(a, b))); }, {{"a", a}, {"b", b}});
    check("broadcast_rows", [&] { return sum(mul(probe, broadcast_rows(row, 3))); }, {{"row", row}});
    Tensor probe_flat = random_tensor({1, 12}, rng, false);
    check("flatten", [&] { return sum(mul(probe_flat, flatten(a))); }, {{"a", a}});
    check("slice_cols", [&] { return sum(slice_cols(a, 1, 2)); }, {{"a", a}});

    Tensor table = random_tensor({5, 3}, rng, true);
    Tensor probe_rows = random_tensor({4, 3}, rng, false);
    const std::vector<int> idx{0, 3, 3, -1};
    check("rows_lookup", [&] { return sum(mul(probe_rows, rows_lookup(table, idx))); }, {{"table", table}});

    Tensor logits = random_tensor({4, 3}, rng, true);
    const std::vector<int> labels{0, 2, 1, 2};
    check("cross_entropy_softmax", [&] { return cross_entropy_softmax(logits, labels); }, {{"logits", logits}});
}

TEST_CASE("dropout") {
    Rng rng(5);
    Tensor x = Tensor::from_data({4, 8}, std::vector<double>(32, 1.0));
    SECTION("identity when disabled") {
        Tensor y = dropout(x, 0.5, rng, false);
        CHECK(y.node == x.node);
        Tensor z = dropout(x, 0.0, rng, true);
        CHECK(z.node == x.node);
    }
    SECTION("inverted scaling in train mode") {
        Tensor y = dropout(x, 0.5, rng, true);
        size_t zeros = 0;
        for (double v : y.data()) {
            const bool kept = std::abs(v - 2.0) < 1e-12;
            const bool dropped = v == 0.0;
            CHECK((kept || dropped));
            if (dropped) ++zeros;
        }
        CHECK(zeros > 0);
        CHECK(zeros < y.numel());
    }
    SECTION("invalid rate") {
        CHECK_THROWS_AS(dropout(x, 1.0, rng, true), std::invalid_argument);
    }
}

TEST_CASE("evaluation is deterministic") {
    auto run = [] {
        Rng rng(123);
        Tensor a = random_tensor({4, 6}, rng, true);
        Tensor b = random_tensor({6, 3}, rng, true);
        Tensor gain = Tensor::from_data({1, 3}, {1, 1, 1}, true);
        Tensor bias = Tensor::zeros({1, 3});
        Tensor h = layer_norm(softmax(matmul(a, b)), gain, bias);
        Tensor loss = sum(mul(h, h));
        loss.backward();
        std::vector<double> out = h.data();
        out.insert(out.end(), a.grad().begin(), a.grad().end());
        return out;
    };
    const auto r1 = run(), r2 = run();
    REQUIRE(r1.size() == r2.size());
    for (size_t k = 0; k < r1.size(); ++k) CHECK(r1[k] == r2[k]);
}

TEST_CASE("non-finite input rejected by ops") {
    Tensor ok = Tensor::from_data({1, 2}, {1.0, 2.0});
    ok.data()[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_WITH(relu(ok), Catch::Matchers::ContainsSubstring("non-finite"));
}
