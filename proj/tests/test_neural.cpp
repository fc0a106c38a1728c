#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gapbench/core/rng.hpp"
#include "gapbench/neural/net.hpp"

using namespace gapbench;
using namespace gapbench::neural;
using dyncore::Mat;
using dyncore::Vec;

namespace {

constexpr double kGradTol = 1e-4;  // max relative error, central differences

Mat random_mat(long rows, long cols, Rng& rng, double scale = 1.0) {
    Mat m(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
    return m;
}

// Central-difference check of d(mse)/d(theta) for every parameter entry.
// Dropout masks are replayed by reseeding the rng before each forward.
double max_rel_grad_error(Network& net, const Mat& x, const Mat& target, bool train,
                          uint64_t mask_seed) {
    auto loss_of = [&]() {
        Rng rng(mask_seed);
        net.zero_state();
        Mat dp;
        return mse_loss(net.forward(x, train, &rng), target, dp);
    };

    Rng rng(mask_seed);
    net.zero_state();
    net.zero_grad();
    Mat dp;
    mse_loss(net.forward(x, train, &rng), target, dp);
    net.backward(dp);

    std::vector<Mat> analytic;
    for (Mat* g : net.gradients()) analytic.push_back(*g);

    const double h = 1e-5;  // near the roundoff/truncation optimum for central differences
    double worst = 0.0;
    auto params = net.parameters();
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        for (long r = 0; r < params[pi]->rows(); ++r) {
            for (long c = 0; c < params[pi]->cols(); ++c) {
                const double orig = (*params[pi])(r, c);
                (*params[pi])(r, c) = orig + h;
                const double lp = loss_of();
                (*params[pi])(r, c) = orig - h;
                const double lm = loss_of();
                (*params[pi])(r, c) = orig;
                const double fd = (lp - lm) / (2.0 * h);
                const double an = analytic[pi](r, c);
                const double denom = std::max({std::abs(fd), std::abs(an), 1e-8});
                worst = std::max(worst, std::abs(fd - an) / denom);
            }
        }
    }
    return worst;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST(Dense, ForwardMatchesManualAffine) {
    Rng init(1);
    Network net;
    net.dense(2, 2, Act::linear, init);
    auto params = net.parameters();
    *params[0] << 1.0, 2.0, -0.5, 0.25;  // W row-major
    *params[1] << 0.1, -0.2;
    Mat x(1, 2);
    x << 3.0, -1.0;
    const Mat y = net.forward(x);
    EXPECT_NEAR(y(0, 0), 1.0 * 3.0 + 2.0 * (-1.0) + 0.1, 1e-12);
    EXPECT_NEAR(y(0, 1), -0.5 * 3.0 + 0.25 * (-1.0) - 0.2, 1e-12);
}

TEST(Dense, ActivationsClampAndSaturate) {
    Rng init(2);
    Network relu_net, tanh_net;
    relu_net.dense(3, 8, Act::relu, init);
    tanh_net.dense(3, 8, Act::tanh, init);
    Rng rng(7);
    const Mat x = random_mat(16, 3, rng, 2.0);
    const Mat yr = relu_net.forward(x);
    const Mat yt = tanh_net.forward(x);
    EXPECT_GE(yr.minCoeff(), 0.0);
    EXPECT_LT(yt.maxCoeff(), 1.0);
    EXPECT_GT(yt.minCoeff(), -1.0);
}

TEST(GradCheck, DenseTanhChain) {
    Rng init(11);
    Network net;
    net.dense(3, 6, Act::tanh, init).dense(6, 2, Act::linear, init);
    Rng rng(12);
    const Mat x = random_mat(5, 3, rng);
    const Mat t = random_mat(5, 2, rng);
    EXPECT_LE(max_rel_grad_error(net, x, t, false, 0), kGradTol);
}

TEST(GradCheck, DenseReluChain) {
    Rng init(13);
    Network net;
    net.dense(4, 8, Act::relu, init).dense(8, 8, Act::relu, init).dense(8, 1, Act::linear, init);
    Rng rng(14);
    const Mat x = random_mat(6, 4, rng);
    const Mat t = random_mat(6, 1, rng);
    EXPECT_LE(max_rel_grad_error(net, x, t, false, 0), kGradTol);
}

TEST(GradCheck, LstmFullBackpropThroughTime) {
    Rng init(15);
    Network net;
    net.lstm(3, 4, init).dense(4, 2, Act::linear, init);
    Rng rng(16);
    const Mat x = random_mat(7, 3, rng);  // 7 time steps
    const Mat t = random_mat(7, 2, rng);
    EXPECT_LE(max_rel_grad_error(net, x, t, false, 0), kGradTol);
}

TEST(GradCheck, LstmConcatBranch) {
    Rng init(17);
    Network net;
    net.dense(4, 5, Act::tanh, init).lstm_concat(5, 3, init).dense(8, 2, Act::linear, init);
    Rng rng(18);
    const Mat x = random_mat(6, 4, rng);
    const Mat t = random_mat(6, 2, rng);
    EXPECT_LE(max_rel_grad_error(net, x, t, false, 0), kGradTol);
}

TEST(GradCheck, DropoutWithReplayedMask) {
    Rng init(19);
    Network net;
    net.dense(4, 10, Act::tanh, init).dropout(0.4).dense(10, 2, Act::linear, init);
    Rng rng(20);
    const Mat x = random_mat(5, 4, rng);
    const Mat t = random_mat(5, 2, rng);
    EXPECT_LE(max_rel_grad_error(net, x, t, true, 99), kGradTol);
}

TEST(Lstm, StepMatchesBatchedForward) {
    Rng init(21);
    Network net;
    net.lstm(3, 5, init).dense(5, 2, Act::tanh, init);
    Rng rng(22);
    const Mat x = random_mat(6, 3, rng);
    const Mat batched = net.forward(x);
    net.zero_state();
    for (long t = 0; t < x.rows(); ++t) {
        const Vec y = net.step(x.row(t).transpose());
        EXPECT_LT((y.transpose() - batched.row(t)).cwiseAbs().maxCoeff(), 1e-12)
            << "step " << t;
    }
}

TEST(Lstm, ZeroStateResetsStreaming) {
    Rng init(23);
    Network net;
    net.lstm(2, 4, init);
    const Vec x = Vec::Constant(2, 0.5);
    const Vec first = net.step(x);
    net.step(x);
    net.zero_state();
    const Vec again = net.step(x);
    EXPECT_LT((first - again).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Lstm, CarriesStateAcrossSteps) {
    Rng init(24);
    Network net;
    net.lstm(2, 4, init);
    const Vec x = Vec::Constant(2, 0.5);
    const Vec first = net.step(x);
    const Vec second = net.step(x);
    EXPECT_GT((first - second).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Dropout, InvertedScalingPreservesMeanAndEvalIsIdentity) {
    Rng init(25);
    Network net;
    net.dense(1, 1, Act::linear, init).dropout(0.3);
    auto params = net.parameters();
    *params[0] << 1.0;
    *params[1] << 0.0;
    const Mat x = Mat::Ones(20000, 1);
    Rng rng(26);
    const Mat y = net.forward(x, true, &rng);
    int zeros = 0;
    for (long r = 0; r < y.rows(); ++r)
        if (y(r, 0) == 0.0) ++zeros;
    EXPECT_NEAR(zeros / 20000.0, 0.3, 0.02);
    EXPECT_NEAR(y.mean(), 1.0, 0.02);
    const double kept = 1.0 / 0.7;
    for (long r = 0; r < y.rows(); ++r)
        EXPECT_TRUE(y(r, 0) == 0.0 || std::abs(y(r, 0) - kept) < 1e-12);
    const Mat ye = net.forward(x, false, nullptr);
    EXPECT_EQ(ye, x);
}

TEST(Adam, HandComputedUnitGradientSteps) {
    Rng init(27);
    Network net;
    net.dense(1, 1, Act::linear, init);
    auto params = net.parameters();
    auto grads = net.gradients();
    *params[0] << 1.0;
    *params[1] << 0.0;
    Adam opt(net, 0.1);
    // Unit gradient: bias-corrected m_hat and v_hat are exactly 1 every
    // step, so each update subtracts lr / (1 + eps).
    for (int k = 1; k <= 3; ++k) {
        *grads[0] << 1.0;
        grads[1]->setZero();
        opt.step();
        EXPECT_NEAR((*params[0])(0, 0), 1.0 - 0.1 * k / (1.0 + 1e-8), 1e-12) << "step " << k;
    }
}

TEST(Adam, FitsLeastSquaresLine) {
    Rng init(28);
    Network net;
    net.dense(1, 1, Act::linear, init);
    Rng rng(29);
    Mat x(64, 1), t(64, 1);
    for (long r = 0; r < 64; ++r) {
        x(r, 0) = rng.uniform(-1.0, 1.0);
        t(r, 0) = 2.0 * x(r, 0) - 1.0;
    }
    Adam opt(net, 0.05);
    for (int it = 0; it < 2000; ++it) {
        net.zero_grad();
        Mat dp;
        mse_loss(net.forward(x), t, dp);
        net.backward(dp);
        opt.step();
    }
    auto params = net.parameters();
    EXPECT_NEAR((*params[0])(0, 0), 2.0, 1e-3);
    EXPECT_NEAR((*params[1])(0, 0), -1.0, 1e-3);
}

TEST(Polyak, TauOneCopiesTauZeroKeeps) {
    Rng init(30);
    Network a, b;
    a.dense(2, 3, Act::tanh, init);
    b.dense(2, 3, Act::tanh, init);
    Network b0 = b;
    polyak_update(b, a, 0.0);
    EXPECT_EQ(*b.parameters()[0], *b0.parameters()[0]);
    polyak_update(b, a, 1.0);
    EXPECT_EQ(*b.parameters()[0], *a.parameters()[0]);
}

TEST(Polyak, BlendsWithGivenRate) {
    Rng init(31);
    Network a, b;
    a.dense(1, 1, Act::linear, init);
    b.dense(1, 1, Act::linear, init);
    (*a.parameters()[0]) << 2.0;
    (*b.parameters()[0]) << 1.0;
    polyak_update(b, a, 0.005);
    EXPECT_NEAR((*b.parameters()[0])(0, 0), 0.005 * 2.0 + 0.995 * 1.0, 1e-15);
}

TEST(Checkpoint, RoundTripRestoresExactOutputs) {
    Rng init(32);
    Network net;
    net.dense(3, 8, Act::relu, init).lstm_concat(8, 4, init).dense(12, 2, Act::tanh, init);
    Rng rng(33);
    const Mat x = random_mat(4, 3, rng);
    const Mat before = net.forward(x);
    const std::string path = temp_path("gapbench_ckpt_roundtrip.bin");
    net.save(path);
    for (Mat* p : net.parameters()) p->array() += 0.25;
    net.load(path);
    const Mat after = net.forward(x);
    EXPECT_EQ(before, after);
    std::remove(path.c_str());
}

TEST(Checkpoint, SaveIsByteDeterministic) {
    Rng init(34);
    Network net;
    net.dense(2, 4, Act::tanh, init).dense(4, 1, Act::linear, init);
    const std::string p1 = temp_path("gapbench_ckpt_a.bin");
    const std::string p2 = temp_path("gapbench_ckpt_b.bin");
    net.save(p1);
    net.save(p2);
    std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
    const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    EXPECT_FALSE(s1.empty());
    EXPECT_EQ(s1, s2);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST(Checkpoint, RejectsShapeMismatchAndBadMagic) {
    Rng init(35);
    Network net, other;
    net.dense(3, 4, Act::tanh, init);
    other.dense(4, 4, Act::tanh, init);
    const std::string path = temp_path("gapbench_ckpt_bad.bin");
    net.save(path);
    EXPECT_THROW(other.load(path), ContractViolation);
    {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    EXPECT_THROW(net.load(path), ContractViolation);
    std::remove(path.c_str());
}

TEST(Init, HeAndXavierScalesMatchFanIn) {
    Rng init(36);
    Network relu_net, tanh_net;
    relu_net.dense(256, 256, Act::relu, init);
    tanh_net.dense(256, 256, Act::tanh, init);
    const Mat& Wr = *relu_net.parameters()[0];
    const Mat& Wt = *tanh_net.parameters()[0];
    const double std_r = std::sqrt(Wr.array().square().mean());
    const double std_t = std::sqrt(Wt.array().square().mean());
    EXPECT_NEAR(std_r, std::sqrt(2.0 / 256.0), 0.15 * std::sqrt(2.0 / 256.0));
    EXPECT_NEAR(std_t, std::sqrt(2.0 / 512.0), 0.15 * std::sqrt(2.0 / 512.0));
    EXPECT_LE(Wt.cwiseAbs().maxCoeff(), std::sqrt(6.0 / 512.0) + 1e-12);
}

TEST(Init, DeterministicPerSeed) {
    Rng a(40), b(40), c(41);
    Network na, nb, nc;
    na.dense(4, 4, Act::tanh, a);
    nb.dense(4, 4, Act::tanh, b);
    nc.dense(4, 4, Act::tanh, c);
    EXPECT_EQ(*na.parameters()[0], *nb.parameters()[0]);
    EXPECT_NE(*na.parameters()[0], *nc.parameters()[0]);
}

TEST(Network, CopyIsIndependentDeepClone) {
    Rng init(42);
    Network net;
    net.dense(2, 4, Act::tanh, init).lstm(4, 3, init);
    Network copy = net;
    Rng rng(43);
    const Mat x = random_mat(3, 2, rng);
    const Mat y0 = copy.forward(x);
    net.parameters()[0]->setConstant(9.0);
    EXPECT_EQ(copy.forward(x), y0);
}

TEST(Network, ChainDimensionMismatchThrows) {
    Rng init(44);
    Network net;
    net.dense(2, 3, Act::tanh, init);
    EXPECT_THROW(net.dense(4, 1, Act::linear, init), ContractViolation);
    EXPECT_THROW(net.lstm(5, 2, init), ContractViolation);
}

TEST(Network, ParamCountMatchesArchitecture) {
    Rng init(45);
    Network net;
    net.dense(3, 8, Act::relu, init).lstm(8, 4, init).dense(4, 2, Act::linear, init);
    // dense: 8*3+8, lstm: 16*8+16*4+16, dense: 2*4+2
    EXPECT_EQ(net.param_count(), 8 * 3 + 8 + 16 * 8 + 16 * 4 + 16 + 2 * 4 + 2);
}

TEST(Loss, MseValueAndGradientHandChecked) {
    Mat pred(1, 2), target(1, 2), dp;
    pred << 1.0, -2.0;
    target << 0.0, 0.0;
    const double loss = mse_loss(pred, target, dp);
    EXPECT_NEAR(loss, (1.0 + 4.0) / 2.0, 1e-15);
    EXPECT_NEAR(dp(0, 0), 2.0 * 1.0 / 2.0, 1e-15);
    EXPECT_NEAR(dp(0, 1), 2.0 * -2.0 / 2.0, 1e-15);
}
