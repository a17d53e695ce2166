#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "advx/error.hpp"
#include "advx/tensor.hpp"
#include "test_util.hpp"

using namespace advx;

namespace {

double loop_norm(const Tensor& t, NormOrder p) {
    double acc = 0;
    for (double v : t.vec()) {
        if (p == NormOrder::L1) acc += std::fabs(v);
        if (p == NormOrder::L2) acc += v * v;
        if (p == NormOrder::Linf) acc = std::max(acc, std::fabs(v));
    }
    return p == NormOrder::L2 ? std::sqrt(acc) : acc;
}

}  // namespace

TEST(tensor, rejects_bad_construction)
{
    EXPECT_THROW(Tensor({2, 2}, {1, 2, 3}), InvalidArgument);
    EXPECT_THROW(Tensor({1}, {std::numeric_limits<double>::quiet_NaN()}), InvalidArgument);
    EXPECT_THROW(Tensor({1}, {std::numeric_limits<double>::infinity()}), InvalidArgument);
    EXPECT_EQ(Tensor::zeros({3, 2}).size(), 6u);
}

TEST(tensor, elementwise_shape_mismatch)
{
    auto a = Tensor::zeros({2, 3});
    auto b = Tensor::zeros({3, 2});
    EXPECT_THROW(add(a, b), InvalidArgument);
    EXPECT_THROW(sub(a, b), InvalidArgument);
    EXPECT_THROW(hadamard(a, b), InvalidArgument);
    EXPECT_THROW(distance(a, b, NormOrder::L2), InvalidArgument);
    EXPECT_THROW(clip_to_ball(a, b, 1.0), InvalidArgument);
}

TEST(tensor, sign_of_zero_is_zero)
{
    auto s = sign(Tensor({4}, {-3.0, 0.0, -0.0, 2.5}));
    EXPECT_EQ(s.vec(), (std::vector<double>{-1, 0, 0, 1}));
}

TEST(tensor, norms_match_loop_oracle)
{
    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        auto t = testutil::random_tensor({1 + rng.below(5), 1 + rng.below(7)}, rng, -100, 100);
        for (auto p : {NormOrder::L1, NormOrder::L2, NormOrder::Linf}) {
            EXPECT_NEAR(norm(t, p), loop_norm(t, p), 1e-12 * (1 + loop_norm(t, p)));
        }
        auto u = testutil::random_tensor(t.shape(), rng, -100, 100);
        for (auto p : {NormOrder::L1, NormOrder::L2, NormOrder::Linf})
            EXPECT_NEAR(distance(t, u, p), loop_norm(sub(t, u), p), 1e-9);
    }
}

TEST(tensor, norm_ordering_and_homogeneity)
{
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        auto t = testutil::random_tensor({1 + rng.below(30)}, rng, -5, 5);
        const double c = rng.uniform(-4, 4);
        EXPECT_LE(norm(t, NormOrder::Linf), norm(t, NormOrder::L2) + 1e-12);
        EXPECT_LE(norm(t, NormOrder::L2), norm(t, NormOrder::L1) + 1e-12);
        for (auto p : {NormOrder::L1, NormOrder::L2, NormOrder::Linf})
            EXPECT_NEAR(norm(scale(t, c), p), std::fabs(c) * norm(t, p), 1e-10);
    }
}

TEST(tensor, clamp_bounds)
{
    Rng rng(3);
    auto t = testutil::random_tensor({50}, rng, -300, 600);
    auto c = clamp(t, 0, 255);
    for (std::size_t i = 0; i < t.size(); ++i) {
        EXPECT_GE(c[i], 0);
        EXPECT_LE(c[i], 255);
        if (t[i] >= 0 && t[i] <= 255) {
            EXPECT_EQ(c[i], t[i]);
        }
    }
    EXPECT_THROW(clamp(t, 2, 1), InvalidArgument);
}

TEST(tensor, clip_to_ball_is_within_eps_and_idempotent)
{
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto center = testutil::random_tensor({20}, rng, 0, 255);
        auto t = testutil::random_tensor({20}, rng, -100, 400);
        const double eps = rng.uniform(0, 30);
        auto c = clip_to_ball(t, center, eps);
        EXPECT_LE(distance(c, center, NormOrder::Linf), eps + 1e-12);
        EXPECT_EQ(clip_to_ball(c, center, eps), c);
    }
    EXPECT_THROW(clip_to_ball(Tensor::zeros({1}), Tensor::zeros({1}), -1), InvalidArgument);
}

TEST(tensor, axpy_and_hadamard)
{
    Tensor a({3}, {1, 2, 3});
    Tensor b({3}, {4, -5, 6});
    EXPECT_EQ(axpy(a, 2.0, b).vec(), (std::vector<double>{9, -8, 15}));
    EXPECT_EQ(hadamard(a, b).vec(), (std::vector<double>{4, -10, 18}));
    EXPECT_EQ(a.reshaped({1, 3}).shape(), (Shape{1, 3}));
    EXPECT_THROW(a.reshaped({2, 2}), InvalidArgument);
}

TEST(tensor, norm_names_round_trip)
{
    for (auto p : {NormOrder::L1, NormOrder::L2, NormOrder::Linf}) EXPECT_EQ(parse_norm(to_string(p)), p);
    EXPECT_THROW(parse_norm("L3"), InvalidArgument);
}

TEST(rng, seeded_sequences_repeat)
{
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
    Rng c(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = c.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        EXPECT_LT(c.below(7), 7u);
    }
    std::vector<int> v{1, 2, 3, 4, 5, 6};
    c.shuffle(v);
    std::sort(v.begin(), v.end());
    EXPECT_EQ(v, (std::vector<int>{1, 2, 3, 4, 5, 6}));
}
