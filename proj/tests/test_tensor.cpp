#include <catch_amalgamated.hpp>

#include <cmath>
#include <thread>

#include "mgd/gradcheck.hpp"
#include "mgd/rng.hpp"
#include "mgd/tensor.hpp"

using namespace mgd;

using T = Tensor<double>;

namespace {

// Independent central-difference probe used by the basic-op tests below;
// distinct from grad_check so the library checker is itself cross-checked.
double fd_slope(const std::function<double(double)>& f, double x, double h = 1e-5) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

T randt(Shape shape, Rng& rng, bool rg = false) { return T::randn(std::move(shape), rng, 1.0, rg); }

}  // namespace

TEST_CASE("silu at zero is zero") {
    T x = T::from({3}, {0.0, 1.0, -1.0});
    T y = silu(x);
    CHECK(y.data()[0] == 0.0);
    CHECK(y.data()[1] == Catch::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("matmul by identity is identity") {
    Rng rng(1);
    T a = randt({3, 5}, rng);
    std::vector<double> eye(9, 0.0);
    eye[0] = eye[4] = eye[8] = 1.0;
    T i3 = T::from({3, 3}, eye);
    T y = matmul(i3, a);
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(y.data()[size_t(i)] == a.data()[size_t(i)]);
}

TEST_CASE("sobel-x kernel on a unit ramp gives 8 at interior pixels") {
    // f(x,y) = x convolved with [[-1,0,1],[-2,0,2],[-1,0,1]] has slope 8
    const int H = 8, W = 8;
    std::vector<double> img(size_t(H * W));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) img[size_t(y * W + x)] = double(x);
    T x = T::from({1, H, W}, img);
    T w = T::from({1, 1, 3, 3}, {-1, 0, 1, -2, 0, 2, -1, 0, 1});
    T b = T::zeros({1});
    T y = conv2d(x, w, b);
    for (int yy = 1; yy < H - 1; ++yy)
        for (int xx = 1; xx < W - 1; ++xx) CHECK(y.data()[size_t(yy * W + xx)] == Catch::Approx(8.0));
}

TEST_CASE("shape mismatch names the offending dimension") {
    Rng rng(2);
    T a = randt({3, 4}, rng);
    T b = randt({5, 6}, rng);
    CHECK_THROWS_WITH(matmul(a, b), Catch::Matchers::ContainsSubstring("4") &&
                                        Catch::Matchers::ContainsSubstring("5"));
    T x = randt({3, 8, 8}, rng);
    T w = randt({4, 2, 3, 3}, rng);
    CHECK_THROWS_AS(conv2d(x, w, T::zeros({4})), ShapeError);
}

TEST_CASE("one-variable chain rule: mean_square(w*x) at w=2,x=3") {
    T w = T::from({1}, {2.0}, true);
    T x = T::from({1}, {3.0});
    T loss = mean_square(mul(x, w));
    CHECK(loss.item() == Catch::Approx(36.0));
    backward(loss);
    CHECK(w.grad()[0] == Catch::Approx(36.0));  // 2*(wx)*x
}

TEST_CASE("loss detached from a parameter leaves its grad zero") {
    Rng rng(3);
    T p = randt({4}, rng, true);
    T q = randt({4}, rng, true);
    T loss = mean_square(q);
    backward(loss);
    for (double g : p.grad()) CHECK(g == 0.0);
    bool any = false;
    for (double g : q.grad()) any = any || g != 0.0;
    CHECK(any);
}

TEST_CASE("repeated backward accumulates into leaves") {
    T w = T::from({1}, {2.0}, true);
    T loss = mean_square(w);
    backward(loss);
    double g1 = w.grad()[0];
    backward(loss);
    CHECK(w.grad()[0] == Catch::Approx(2 * g1));
}

TEST_CASE("non-scalar loss is rejected") {
    Rng rng(4);
    T x = randt({3}, rng, true);
    CHECK_THROWS_AS(backward(silu(x)), ShapeError);
}

TEST_CASE("backward linearity in the loss") {
    Rng rng(5);
    T w = randt({6}, rng, true);
    T c1 = randt({6}, rng);
    T c2 = randt({6}, rng);
    auto grad_of = [&](double a, double b) {
        w.node()->grad.assign(6, 0.0);
        T loss = add(mean_square(mul(w, c1)), mean_square(add(w, c2)), a, b);
        backward(loss);
        return std::vector<double>(w.grad().begin(), w.grad().end());
    };
    auto g1 = grad_of(1.0, 0.0);
    auto g2 = grad_of(0.0, 1.0);
    auto gc = grad_of(0.7, -2.5);
    for (size_t i = 0; i < 6; ++i) CHECK(gc[i] == Catch::Approx(0.7 * g1[i] - 2.5 * g2[i]).margin(1e-12));
}

TEST_CASE("simple fd probe agrees with backward on a scalar chain") {
    T w = T::from({1}, {0.37}, true);
    auto f = [](double v) {
        T wt = T::from({1}, {v});
        T y = silu(mul(wt, T::scalar(1.7)));
        return mean_square(y).item();
    };
    T loss = mean_square(silu(mul(w, T::scalar(1.7))));
    backward(loss);
    CHECK(w.grad()[0] == Catch::Approx(fd_slope(f, 0.37)).epsilon(1e-8));
}

TEST_CASE("grad_check validates every op kind") {
    Rng rng(42);

    auto check = [&](const char* what, ParamStore<double>& ps, std::function<Tensor<double>()> frag) {
        auto report = grad_check(ps, frag, 1e-6);
        INFO(what);
        for (auto& e : report.entries) {
            INFO(e.param << " err=" << e.max_rel_err);
        }
        CHECK(report.pass());
    };

    SECTION("matmul all transpose combinations") {
        for (bool ta : {false, true})
            for (bool tb : {false, true}) {
                ParamStore<double> ps;
                T a = ps.add("a", randt(ta ? Shape{4, 3} : Shape{3, 4}, rng));
                T b = ps.add("b", randt(tb ? Shape{5, 4} : Shape{4, 5}, rng));
                T c = randt({3, 5}, rng);
                check("matmul", ps, [=] { return mean_square(mul(matmul(a, b, ta, tb), c)); });
            }
    }
    SECTION("conv3x3 stride 1 and 2") {
        for (int stride : {1, 2}) {
            ParamStore<double> ps;
            T x = ps.add("x", randt({3, 6, 6}, rng));
            T w = ps.add("w", randt({4, 3, 3, 3}, rng));
            T b = ps.add("b", randt({4}, rng));
            T c = randt({4, stride == 1 ? 6 : 3, stride == 1 ? 6 : 3}, rng);
            check("conv3x3", ps, [=] { return mean_square(mul(conv2d(x, w, b, stride), c)); });
        }
    }
    SECTION("conv1x1 stride 1 and 2") {
        for (int stride : {1, 2}) {
            ParamStore<double> ps;
            T x = ps.add("x", randt({3, 6, 6}, rng));
            T w = ps.add("w", randt({4, 3, 1, 1}, rng));
            T b = ps.add("b", randt({4}, rng));
            T c = randt({4, stride == 1 ? 6 : 3, stride == 1 ? 6 : 3}, rng);
            check("conv1x1", ps, [=] { return mean_square(mul(conv2d(x, w, b, stride), c)); });
        }
    }
    SECTION("group_norm") {
        ParamStore<double> ps;
        T x = ps.add("x", randt({8, 4, 4}, rng));
        T gm = ps.add("gamma", randt({8}, rng));
        T bt = ps.add("beta", randt({8}, rng));
        T c = randt({8, 4, 4}, rng);
        check("group_norm", ps, [=] { return mean_square(mul(group_norm(x, gm, bt, 4), c)); });
    }
    SECTION("silu") {
        ParamStore<double> ps;
        T x = ps.add("x", randt({17}, rng));
        T c = randt({17}, rng);
        check("silu", ps, [=] { return mean_square(mul(silu(x), c)); });
    }
    SECTION("softmax") {
        ParamStore<double> ps;
        T x = ps.add("x", randt({3, 7}, rng));
        T c = randt({3, 7}, rng);
        check("softmax", ps, [=] { return mean_square(mul(softmax(x), c)); });
    }
    SECTION("attention multi-head") {
        ParamStore<double> ps;
        T q = ps.add("q", randt({5, 8}, rng));
        T k = ps.add("k", randt({6, 8}, rng));
        T v = ps.add("v", randt({6, 8}, rng));
        T c = randt({5, 8}, rng);
        check("attention", ps, [=] { return mean_square(mul(attention(q, k, v, 2), c)); });
    }
    SECTION("add broadcast forms") {
        {
            ParamStore<double> ps;
            T a = ps.add("a", randt({2, 3, 3}, rng));
            T b = ps.add("b", randt({2}, rng));
            T c = randt({2, 3, 3}, rng);
            check("add channel", ps, [=] { return mean_square(mul(add(a, b, 1.3, -0.7), c)); });
        }
        {
            ParamStore<double> ps;
            T a = ps.add("a", randt({4, 5}, rng));
            T b = ps.add("b", randt({5}, rng));
            T c = randt({4, 5}, rng);
            check("add row", ps, [=] { return mean_square(mul(add(a, b), c)); });
        }
        {
            ParamStore<double> ps;
            T a = ps.add("a", randt({7}, rng));
            T b = ps.add("b", randt({1}, rng));
            T c = randt({7}, rng);
            check("add scalar", ps, [=] { return mean_square(mul(add(a, b, 0.5, 2.0), c)); });
        }
    }
    SECTION("mul elementwise and scalar") {
        ParamStore<double> ps;
        T a = ps.add("a", randt({9}, rng));
        T b = ps.add("b", randt({9}, rng));
        T s = ps.add("s", randt({1}, rng));
        T c = randt({9}, rng);
        check("mul", ps, [=] { return mean_square(mul(mul(mul(a, b), s), c)); });
    }
    SECTION("normalize_rows") {
        ParamStore<double> ps;
        T x = ps.add("x", randt({4, 6}, rng));
        T c = randt({4, 6}, rng);
        check("normalize_rows", ps, [=] { return mean_square(mul(normalize_rows(x), c)); });
    }
    SECTION("infonce_pair") {
        ParamStore<double> ps;
        T x = ps.add("logits", randt({5, 5}, rng));
        check("infonce", ps, [=] { return infonce_pair(x); });
    }
    SECTION("embed") {
        ParamStore<double> ps;
        T table = ps.add("table", randt({6, 4}, rng));
        std::vector<int> ids{1, 3, 3, 0};
        T c = randt({4, 4}, rng);
        check("embed", ps, [=] { return mean_square(mul(embed(table, ids), c)); });
    }
    SECTION("concat0, upsample2, reshape, transpose2") {
        ParamStore<double> ps;
        T a = ps.add("a", randt({2, 3, 3}, rng));
        T b = ps.add("b", randt({1, 3, 3}, rng));
        T c = randt({3, 12, 12}, rng);
        check("structural", ps, [=] {
            T cat = concat0(a, b);
            T up = upsample2(upsample2(cat));
            T flat = reshape(mul(up, c), Shape{3, 144});
            return mean_square(transpose2(flat));
        });
    }
}

TEST_CASE("grad_check on a zero-parameter fragment reports pass") {
    ParamStore<double> ps;
    auto report = grad_check(ps, [] { return T::scalar(1.5); }, 1e-8);
    CHECK(report.entries.empty());
    CHECK(report.pass());
}

TEST_CASE("grad_check single linear layer under 1e-8") {
    Rng rng(7);
    ParamStore<double> ps;
    T w = ps.add("w", T::randn({4, 3}, rng, 0.5));
    T b = ps.add("b", T::randn({3}, rng, 0.5));
    T x = T::randn({2, 4}, rng);
    auto report = grad_check(ps, [=] { return mean_square(add(matmul(x, w), b)); }, 1e-8);
    CHECK(report.pass());
    CHECK(report.entries.size() == 2);
}

TEST_CASE("forward determinism and thread-independent graphs") {
    auto run = [](uint64_t seed) {
        Rng rng(seed);
        T x = T::randn({4, 8, 8}, rng);
        T w = T::randn({4, 4, 3, 3}, rng, 0.2);
        T b = T::randn({4}, rng, 0.1);
        T y = mean_square(silu(conv2d(x, w, b)));
        return y.item();
    };
    double a = run(11);
    double b = run(11);
    CHECK(a == b);  // bitwise

    // independent graphs on separate threads give the same answers
    double r1 = 0, r2 = 0;
    std::thread t1([&] { r1 = run(21); });
    std::thread t2([&] { r2 = run(22); });
    t1.join();
    t2.join();
    CHECK(r1 == run(21));
    CHECK(r2 == run(22));
}

TEST_CASE("parameter store rejects duplicate names") {
    ParamStore<float> ps;
    ps.add("w", Shape{2});
    CHECK_THROWS_AS(ps.add("w", Shape{2}), ConfigError);
}
