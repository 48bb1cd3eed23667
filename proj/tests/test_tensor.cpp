#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "tnet/tensor.hpp"

using namespace tnet;

namespace {

// Independent quadruple-loop reference for the valid convolution.
TensorD conv_reference(const TensorD& in, const TensorD& k, const std::vector<double>& bias, int stride) {
    const int c_in = in.extent(0), h = in.extent(1), w = in.extent(2);
    const int c_out = k.extent(0), kk = k.extent(2);
    const int oh = (h - kk) / stride + 1, ow = (w - kk) / stride + 1;
    TensorD out({c_out, oh, ow});
    for (int o = 0; o < c_out; ++o)
        for (int i = 0; i < oh; ++i)
            for (int j = 0; j < ow; ++j) {
                double acc = bias[static_cast<std::size_t>(o)];
                for (int c = 0; c < c_in; ++c)
                    for (int u = 0; u < kk; ++u)
                        for (int v = 0; v < kk; ++v)
                            acc += in.at(c, i * stride + u, j * stride + v) * k.at(o, c, u, v);
                out.at(o, i, j) = acc;
            }
    return out;
}

TensorD random_tensor(std::vector<int> shape, std::mt19937_64& rng) {
    TensorD t(std::move(shape));
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (double& v : t.data) v = d(rng);
    return t;
}

}  // namespace

TEST_CASE("constant input sums to kernel size") {
    TensorD in({1, 8, 8}, 1.0);
    TensorD k({1, 1, 3, 3}, 1.0);
    std::vector<double> bias{0.0};
    const TensorD out = conv2d_forward<double>(in, k, bias, 1);
    REQUIRE(out.shape == std::vector<int>{1, 6, 6});
    for (double v : out.data) CHECK(v == 9.0);
}

TEST_CASE("strided output extent follows the floor formula") {
    TensorD in({1, 8, 8}, 0.5);
    TensorD k({1, 1, 3, 3}, 1.0);
    std::vector<double> bias{0.0};
    const TensorD out = conv2d_forward<double>(in, k, bias, 2);
    CHECK(out.extent(1) == 3);
    CHECK(out.extent(2) == 3);
}

TEST_CASE("conv2d_forward matches the naive-loop reference") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        std::uniform_int_distribution<int> chans(1, 3), size(3, 9), kern(1, 3), strides(1, 2);
        const int c_in = chans(rng), h = size(rng), w = size(rng);
        const int k = std::min({kern(rng), h, w});
        const int c_out = chans(rng);
        const int stride = strides(rng);
        const TensorD in = random_tensor({c_in, h, w}, rng);
        const TensorD kr = random_tensor({c_out, c_in, k, k}, rng);
        std::vector<double> bias(static_cast<std::size_t>(c_out));
        std::uniform_real_distribution<double> d(-1.0, 1.0);
        for (double& b : bias) b = d(rng);

        const TensorD got = conv2d_forward<double>(in, kr, bias, stride);
        const TensorD want = conv_reference(in, kr, bias, stride);
        REQUIRE(got.shape == want.shape);
        for (std::size_t i = 0; i < got.data.size(); ++i)
            CHECK(std::abs(got.data[i] - want.data[i]) <= 1e-12);
    }
}

TEST_CASE("conv2d_backward zero upstream gradient gives zero gradients") {
    std::mt19937_64 rng(3);
    const TensorD in = random_tensor({2, 5, 5}, rng);
    const TensorD k = random_tensor({3, 2, 3, 3}, rng);
    const TensorD gout({3, 3, 3}, 0.0);
    const Conv2dGrads<double> g = conv2d_backward(in, k, 1, gout);
    for (double v : g.grad_input.data) CHECK(v == 0.0);
    for (double v : g.grad_kernels.data) CHECK(v == 0.0);
    for (double v : g.grad_bias) CHECK(v == 0.0);
}

TEST_CASE("degenerate 1x1 kernel gradient is the input-weighted sum") {
    std::mt19937_64 rng(4);
    const TensorD in = random_tensor({2, 4, 4}, rng);
    const TensorD k = random_tensor({3, 2, 1, 1}, rng);
    const TensorD gout = random_tensor({3, 4, 4}, rng);
    const Conv2dGrads<double> g = conv2d_backward(in, k, 1, gout);
    for (int o = 0; o < 3; ++o)
        for (int c = 0; c < 2; ++c) {
            double want = 0.0;
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) want += in.at(c, i, j) * gout.at(o, i, j);
            CHECK(g.grad_kernels.at(o, c, 0, 0) == doctest::Approx(want).epsilon(1e-12));
        }
}

TEST_CASE("conv2d_backward agrees with central finite differences") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 6; ++trial) {
        std::uniform_int_distribution<int> strides(1, 2);
        const int stride = strides(rng);
        TensorD in = random_tensor({2, 6, 6}, rng);
        TensorD k = random_tensor({2, 2, 3, 3}, rng);
        std::vector<double> bias{0.1, -0.2};
        const int oh = (6 - 3) / stride + 1;
        const TensorD gout = random_tensor({2, oh, oh}, rng);

        auto objective = [&]() {
            const TensorD out = conv2d_forward<double>(in, k, bias, stride);
            double s = 0.0;
            for (std::size_t i = 0; i < out.data.size(); ++i) s += out.data[i] * gout.data[i];
            return s;
        };
        const Conv2dGrads<double> g = conv2d_backward(in, k, stride, gout);

        const double eps = 1e-6;
        auto check_fd = [&](double& coord, double analytic) {
            const double saved = coord;
            coord = saved + eps;
            const double lp = objective();
            coord = saved - eps;
            const double lm = objective();
            coord = saved;
            const double numeric = (lp - lm) / (2 * eps);
            CHECK(std::abs(analytic - numeric) / std::max(std::abs(numeric), 1e-8) <= 1e-6);
        };
        for (std::size_t i = 0; i < in.data.size(); i += 7) check_fd(in.data[i], g.grad_input.data[i]);
        for (std::size_t i = 0; i < k.data.size(); i += 5) check_fd(k.data[i], g.grad_kernels.data[i]);
    }
}

TEST_CASE("elementwise and relu primitives") {
    TensorD a({3}, {1.0, -2.0, 3.0});
    TensorD b({3}, {0.5, 1.0, 0.0});
    const TensorD m = elementwise(a, b, ElementwiseOp::mul);
    CHECK(m.data == std::vector<double>{0.5, -2.0, 0.0});
    const TensorD s = elementwise(a, b, ElementwiseOp::add);
    CHECK(s.data == std::vector<double>{1.5, -1.0, 3.0});

    TensorD r({3}, {-1.0, 0.0, 2.0});
    CHECK(relu(r).data == std::vector<double>{0.0, 0.0, 2.0});
    CHECK(relu_grad(r).data == std::vector<double>{0.0, 0.0, 1.0});  // exactly 0 at 0
}

TEST_CASE("shape mismatches are rejected with the offending dimension named") {
    TensorD in({2, 8, 8}, 1.0);
    TensorD k({1, 3, 3, 3}, 1.0);
    std::vector<double> bias{0.0};
    CHECK_THROWS_WITH_AS(conv2d_forward<double>(in, k, bias, 1),
                         doctest::Contains("channel"), std::invalid_argument);

    TensorD big_k({1, 2, 9, 9}, 1.0);
    std::vector<double> bias1{0.0};
    CHECK_THROWS_WITH_AS(conv2d_forward<double>(in, big_k, bias1, 1),
                         doctest::Contains("exceeds input height"), std::invalid_argument);

    TensorD other({2, 8, 7}, 1.0);
    CHECK_THROWS_AS(elementwise(in, other, ElementwiseOp::mul), std::invalid_argument);

    TensorD gout_bad({1, 5, 5}, 1.0);
    TensorD k1({1, 2, 3, 3}, 1.0);
    CHECK_THROWS_WITH_AS(conv2d_backward(in, k1, 1, gout_bad), doctest::Contains("grad_out shape"),
                         std::invalid_argument);
}

TEST_CASE("forward shapes are total over a parameter sweep") {
    std::mt19937_64 rng(21);
    for (int h = 3; h <= 9; ++h)
        for (int k = 1; k <= h; ++k)
            for (int stride = 1; stride <= 3; ++stride) {
                const TensorD in = random_tensor({1, h, h}, rng);
                const TensorD kr = random_tensor({2, 1, k, k}, rng);
                std::vector<double> bias{0.0, 0.0};
                const TensorD out = conv2d_forward<double>(in, kr, bias, stride);
                const int want = (h - k) / stride + 1;
                CHECK(out.extent(1) == want);
                CHECK(out.extent(2) == want);
            }
}

TEST_CASE("TNT1 round-trips bit-exactly") {
    std::mt19937_64 rng(5);
    Tensor t({3, 4, 5});
    std::uniform_real_distribution<float> d(-10.0f, 10.0f);
    for (float& v : t.data) v = d(rng);
    t.data[0] = 0.0f;
    t.data[1] = -0.0f;

    const std::string dir = (std::filesystem::temp_directory_path() / "tnt_roundtrip").string();
    std::filesystem::create_directories(dir);
    const std::string p1 = dir + "/a.tnt", p2 = dir + "/b.tnt";
    write_tnt(p1, t);
    const Tensor back = read_tnt(p1);
    REQUIRE(back.shape == t.shape);
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        float a = t.data[i], b = back.data[i];
        CHECK(std::memcmp(&a, &b, 4) == 0);
    }
    write_tnt(p2, back);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    std::stringstream s1, s2;
    s1 << f1.rdbuf();
    s2 << f2.rdbuf();
    CHECK(s1.str() == s2.str());

    // truncated payload rejected
    std::string bytes = s1.str();
    std::ofstream trunc(dir + "/trunc.tnt", std::ios::binary);
    trunc.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 3));
    trunc.close();
    CHECK_THROWS_WITH_AS(read_tnt(dir + "/trunc.tnt"), doctest::Contains("truncated"), std::runtime_error);

    std::ofstream bad(dir + "/bad.tnt", std::ios::binary);
    bad << "NOPE\n1 3\n";
    bad.close();
    CHECK_THROWS_AS(read_tnt(dir + "/bad.tnt"), std::runtime_error);
}

TEST_CASE("tensor invariants are enforced") {
    CHECK_THROWS_AS(TensorD({2, 0, 3}), std::invalid_argument);
    CHECK_THROWS_AS(TensorD({2, 2}, std::vector<double>{1.0, 2.0, 3.0}), std::invalid_argument);
    const TensorD ok({2, 3}, 0.0);
    CHECK(ok.size() == 6);
}
