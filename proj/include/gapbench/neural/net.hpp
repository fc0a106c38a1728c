#pragma once

#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "gapbench/core/error.hpp"
#include "gapbench/core/rng.hpp"
#include "gapbench/dyncore/types.hpp"

namespace gapbench::neural {

using dyncore::Mat;
using dyncore::Vec;

enum class Act { linear, relu, tanh };

namespace detail {

inline Mat apply_act(const Mat& z, Act a) {
    switch (a) {
        case Act::linear: return z;
        case Act::relu: return z.cwiseMax(0.0);
        case Act::tanh: return z.array().tanh().matrix();
    }
    throw ContractViolation("unreachable activation");
}

// Derivative expressed through the activation output y.
inline Mat act_grad_from_output(const Mat& y, Act a) {
    switch (a) {
        case Act::linear: return Mat::Ones(y.rows(), y.cols());
        case Act::relu: return (y.array() > 0.0).cast<double>().matrix();
        case Act::tanh: return (1.0 - y.array().square()).matrix();
    }
    throw ContractViolation("unreachable activation");
}

inline Mat sigmoid(const Mat& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

// Rows of the batch matrix are samples for stateless layers and consecutive
// time steps of a single sequence for recurrent ones.
class Layer {
   public:
    virtual ~Layer() = default;
    virtual int in_dim() const = 0;
    virtual int out_dim() const = 0;
    virtual Mat forward(const Mat& x, bool train, Rng* rng) = 0;
    virtual Mat backward(const Mat& dy) = 0;
    virtual void collect(std::vector<Mat*>& params, std::vector<Mat*>& grads) = 0;
    virtual void zero_state() {}
    virtual Vec step(const Vec& x) = 0;  // streaming evaluation
    virtual std::unique_ptr<Layer> clone() const = 0;
};

class Dense : public Layer {
   public:
    Dense(int in, int out, Act act, Rng& init) : act_(act), W_(out, in), b_(out, 1) {
        // He for rectifiers, Xavier elsewhere.
        if (act == Act::relu) {
            const double std = std::sqrt(2.0 / in);
            for (int r = 0; r < out; ++r)
                for (int c = 0; c < in; ++c) W_(r, c) = std * init.normal();
        } else {
            const double lim = std::sqrt(6.0 / (in + out));
            for (int r = 0; r < out; ++r)
                for (int c = 0; c < in; ++c) W_(r, c) = init.uniform(-lim, lim);
        }
        b_.setZero();
        dW_ = Mat::Zero(out, in);
        db_ = Mat::Zero(out, 1);
    }

    int in_dim() const override { return static_cast<int>(W_.cols()); }
    int out_dim() const override { return static_cast<int>(W_.rows()); }

    Mat forward(const Mat& x, bool, Rng*) override {
        require(x.cols() == W_.cols(), "Dense: input width mismatch");
        x_ = x;
        y_ = detail::apply_act((x * W_.transpose()).rowwise() + b_.col(0).transpose(), act_);
        return y_;
    }

    Mat backward(const Mat& dy) override {
        const Mat dz = dy.cwiseProduct(detail::act_grad_from_output(y_, act_));
        dW_ += dz.transpose() * x_;
        db_ += dz.colwise().sum().transpose();
        return dz * W_;
    }

    void collect(std::vector<Mat*>& p, std::vector<Mat*>& g) override {
        p.push_back(&W_);
        p.push_back(&b_);
        g.push_back(&dW_);
        g.push_back(&db_);
    }

    Vec step(const Vec& x) override { return detail::apply_act(W_ * x + b_.col(0), act_); }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }

   private:
    Act act_;
    Mat W_, b_, dW_, db_;
    Mat x_, y_;
};

// Inverted dropout: scaling happens at train time so evaluation is identity.
class Dropout : public Layer {
   public:
    Dropout(int dim, double rate) : dim_(dim), rate_(rate) {
        require(rate >= 0.0 && rate < 1.0, "Dropout: rate in [0, 1)");
    }

    int in_dim() const override { return dim_; }
    int out_dim() const override { return dim_; }

    Mat forward(const Mat& x, bool train, Rng* rng) override {
        if (!train || rate_ == 0.0) {
            mask_ = Mat::Ones(x.rows(), x.cols());
            return x;
        }
        require(rng != nullptr, "Dropout: training forward needs an rng");
        const double keep = 1.0 - rate_;
        mask_ = Mat(x.rows(), x.cols());
        for (long r = 0; r < x.rows(); ++r)
            for (long c = 0; c < x.cols(); ++c)
                mask_(r, c) = rng->uniform01() < keep ? 1.0 / keep : 0.0;
        return x.cwiseProduct(mask_);
    }

    Mat backward(const Mat& dy) override { return dy.cwiseProduct(mask_); }
    void collect(std::vector<Mat*>&, std::vector<Mat*>&) override {}
    Vec step(const Vec& x) override { return x; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }

   private:
    int dim_;
    double rate_;
    Mat mask_;
};

// Single-sequence LSTM. Forward treats the batch as one episode in time
// order, starting from a zero state; backward runs full-length BPTT. The
// streaming path carries (h, c) across step() calls until zero_state().
class Lstm : public Layer {
   public:
    Lstm(int in, int hidden, Rng& init) : in_(in), h_(hidden) {
        const double lim = std::sqrt(6.0 / (in + hidden));
        Wx_ = Mat(4 * hidden, in);
        Wh_ = Mat(4 * hidden, hidden);
        b_ = Mat::Zero(4 * hidden, 1);
        for (long r = 0; r < Wx_.rows(); ++r)
            for (long c = 0; c < Wx_.cols(); ++c) Wx_(r, c) = init.uniform(-lim, lim);
        const double limh = std::sqrt(6.0 / (hidden + hidden));
        for (long r = 0; r < Wh_.rows(); ++r)
            for (long c = 0; c < Wh_.cols(); ++c) Wh_(r, c) = init.uniform(-limh, limh);
        b_.block(hidden, 0, hidden, 1).setConstant(1.0);  // open forget gates at init
        dWx_ = Mat::Zero(Wx_.rows(), Wx_.cols());
        dWh_ = Mat::Zero(Wh_.rows(), Wh_.cols());
        db_ = Mat::Zero(b_.rows(), 1);
        zero_state();
    }

    int in_dim() const override { return in_; }
    int out_dim() const override { return h_; }

    Mat forward(const Mat& x, bool, Rng*) override {
        require(x.cols() == in_, "Lstm: input width mismatch");
        const long T = x.rows();
        x_ = x;
        i_.resize(T, h_); f_.resize(T, h_); g_.resize(T, h_); o_.resize(T, h_);
        c_.resize(T, h_); ct_.resize(T, h_); hseq_.resize(T, h_);
        Vec h = Vec::Zero(h_), c = Vec::Zero(h_);
        for (long t = 0; t < T; ++t) {
            const Vec z = Wx_ * x.row(t).transpose() + Wh_ * h + b_.col(0);
            const Vec i = detail::sigmoid(z.segment(0, h_));
            const Vec f = detail::sigmoid(z.segment(h_, h_));
            const Vec g = z.segment(2 * h_, h_).array().tanh();
            const Vec o = detail::sigmoid(z.segment(3 * h_, h_));
            const Vec c_new = f.cwiseProduct(c) + i.cwiseProduct(g);
            const Vec c_tanh = c_new.array().tanh();
            h = o.cwiseProduct(c_tanh);
            i_.row(t) = i.transpose(); f_.row(t) = f.transpose();
            g_.row(t) = g.transpose(); o_.row(t) = o.transpose();
            c_.row(t) = c_new.transpose(); ct_.row(t) = c_tanh.transpose();
            hseq_.row(t) = h.transpose();
            c = c_new;
        }
        return hseq_;
    }

    Mat backward(const Mat& dy) override {
        const long T = x_.rows();
        Mat dx = Mat::Zero(T, in_);
        Vec dh_next = Vec::Zero(h_), dc_next = Vec::Zero(h_);
        for (long t = T - 1; t >= 0; --t) {
            const Vec i = i_.row(t).transpose(), f = f_.row(t).transpose();
            const Vec g = g_.row(t).transpose(), o = o_.row(t).transpose();
            const Vec ct = ct_.row(t).transpose();
            const Vec c_prev = t > 0 ? Vec(c_.row(t - 1).transpose()) : Vec(Vec::Zero(h_));
            const Vec dh = dy.row(t).transpose() + dh_next;
            const Vec dct = dh.cwiseProduct(o).cwiseProduct(
                                (1.0 - ct.array().square()).matrix()) +
                            dc_next;
            Vec dz(4 * h_);
            dz.segment(0, h_) = dct.cwiseProduct(g).cwiseProduct(i).cwiseProduct(
                (1.0 - i.array()).matrix());
            dz.segment(h_, h_) = dct.cwiseProduct(c_prev).cwiseProduct(f).cwiseProduct(
                (1.0 - f.array()).matrix());
            dz.segment(2 * h_, h_) =
                dct.cwiseProduct(i).cwiseProduct((1.0 - g.array().square()).matrix());
            dz.segment(3 * h_, h_) = dh.cwiseProduct(ct).cwiseProduct(o).cwiseProduct(
                (1.0 - o.array()).matrix());

            dWx_ += dz * x_.row(t);
            if (t > 0) dWh_ += dz * hseq_.row(t - 1);
            db_ += dz;
            dx.row(t) = (Wx_.transpose() * dz).transpose();
            dh_next = Wh_.transpose() * dz;
            dc_next = dct.cwiseProduct(f);
        }
        return dx;
    }

    void collect(std::vector<Mat*>& p, std::vector<Mat*>& g) override {
        p.push_back(&Wx_);
        p.push_back(&Wh_);
        p.push_back(&b_);
        g.push_back(&dWx_);
        g.push_back(&dWh_);
        g.push_back(&db_);
    }

    void zero_state() override {
        hs_ = Vec::Zero(h_);
        cs_ = Vec::Zero(h_);
    }

    Vec step(const Vec& x) override {
        const Vec z = Wx_ * x + Wh_ * hs_ + b_.col(0);
        const Vec i = detail::sigmoid(z.segment(0, h_));
        const Vec f = detail::sigmoid(z.segment(h_, h_));
        const Vec g = z.segment(2 * h_, h_).array().tanh();
        const Vec o = detail::sigmoid(z.segment(3 * h_, h_));
        cs_ = f.cwiseProduct(cs_) + i.cwiseProduct(g);
        hs_ = o.cwiseProduct(cs_.array().tanh().matrix());
        return hs_;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<Lstm>(*this); }

   private:
    int in_, h_;
    Mat Wx_, Wh_, b_, dWx_, dWh_, db_;
    Mat x_, i_, f_, g_, o_, c_, ct_, hseq_;
    Vec hs_, cs_;
};

// Pass-through concatenated with a recurrent branch: y = [x, lstm(x)]. Gives
// a recurrent pathway without losing the instantaneous features.
class LstmConcat : public Layer {
   public:
    LstmConcat(int in, int hidden, Rng& init) : in_(in), lstm_(in, hidden, init) {}

    int in_dim() const override { return in_; }
    int out_dim() const override { return in_ + lstm_.out_dim(); }

    Mat forward(const Mat& x, bool train, Rng* rng) override {
        const Mat h = lstm_.forward(x, train, rng);
        Mat y(x.rows(), out_dim());
        y << x, h;
        return y;
    }

    Mat backward(const Mat& dy) override {
        const Mat dx_branch = lstm_.backward(dy.rightCols(lstm_.out_dim()));
        return dy.leftCols(in_) + dx_branch;
    }

    void collect(std::vector<Mat*>& p, std::vector<Mat*>& g) override { lstm_.collect(p, g); }
    void zero_state() override { lstm_.zero_state(); }

    Vec step(const Vec& x) override {
        const Vec h = lstm_.step(x);
        Vec y(out_dim());
        y << x, h;
        return y;
    }

    std::unique_ptr<Layer> clone() const override { return std::make_unique<LstmConcat>(*this); }

   private:
    int in_;
    Lstm lstm_;
};

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

class Network {
   public:
    Network() = default;
    Network(const Network& other) { *this = other; }
    Network& operator=(const Network& other) {
        if (this == &other) return *this;
        layers_.clear();
        for (const auto& l : other.layers_) layers_.push_back(l->clone());
        return *this;
    }
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    Network& dense(int in, int out, Act act, Rng& init) {
        check_chain(in);
        layers_.push_back(std::make_unique<Dense>(in, out, act, init));
        return *this;
    }
    Network& lstm(int in, int hidden, Rng& init) {
        check_chain(in);
        layers_.push_back(std::make_unique<Lstm>(in, hidden, init));
        return *this;
    }
    Network& lstm_concat(int in, int hidden, Rng& init) {
        check_chain(in);
        layers_.push_back(std::make_unique<LstmConcat>(in, hidden, init));
        return *this;
    }
    Network& dropout(double rate) {
        require(!layers_.empty(), "dropout cannot be the first layer");
        layers_.push_back(std::make_unique<Dropout>(layers_.back()->out_dim(), rate));
        return *this;
    }

    int in_dim() const {
        require(!layers_.empty(), "empty network");
        return layers_.front()->in_dim();
    }
    int out_dim() const {
        require(!layers_.empty(), "empty network");
        return layers_.back()->out_dim();
    }

    Mat forward(const Mat& x, bool train = false, Rng* rng = nullptr) {
        Mat y = x;
        for (auto& l : layers_) y = l->forward(y, train, rng);
        return y;
    }

    Vec forward_vec(const Vec& x, bool train = false, Rng* rng = nullptr) {
        return forward(x.transpose(), train, rng).row(0).transpose();
    }

    Mat backward(const Mat& dy) {
        Mat d = dy;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) d = (*it)->backward(d);
        return d;
    }

    void zero_state() {
        for (auto& l : layers_) l->zero_state();
    }

    Vec step(const Vec& x) {
        Vec y = x;
        for (auto& l : layers_) y = l->step(y);
        return y;
    }

    std::vector<Mat*> parameters() {
        std::vector<Mat*> p, g;
        for (auto& l : layers_) l->collect(p, g);
        return p;
    }
    std::vector<Mat*> gradients() {
        std::vector<Mat*> p, g;
        for (auto& l : layers_) l->collect(p, g);
        return g;
    }

    void zero_grad() {
        for (Mat* g : gradients()) g->setZero();
    }

    long param_count() {
        long n = 0;
        for (Mat* p : parameters()) n += p->size();
        return n;
    }

    // Binary checkpoint: magic, version, tensor count, then each tensor as
    // u32 rows, u32 cols, row-major doubles (little-endian).
    static constexpr char kMagic[4] = {'G', 'B', 'N', 'T'};
    static constexpr uint32_t kVersion = 1;

    void save(const std::string& path) {
        std::ofstream out(path, std::ios::binary);
        require(out.good(), "cannot write checkpoint: " + path);
        out.write(kMagic, 4);
        write_u32(out, kVersion);
        const auto params = parameters();
        write_u32(out, static_cast<uint32_t>(params.size()));
        for (const Mat* p : params) {
            write_u32(out, static_cast<uint32_t>(p->rows()));
            write_u32(out, static_cast<uint32_t>(p->cols()));
            for (long r = 0; r < p->rows(); ++r)
                for (long c = 0; c < p->cols(); ++c) {
                    const double v = (*p)(r, c);
                    out.write(reinterpret_cast<const char*>(&v), sizeof(double));
                }
        }
        require(out.good(), "checkpoint write failed: " + path);
    }

    void load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        require(in.good(), "cannot read checkpoint: " + path);
        char magic[4];
        in.read(magic, 4);
        require(in.good() && std::memcmp(magic, kMagic, 4) == 0,
                "not a network checkpoint: " + path);
        require(read_u32(in) == kVersion, "unsupported checkpoint version: " + path);
        const auto params = parameters();
        require(read_u32(in) == params.size(), "checkpoint tensor count mismatch: " + path);
        for (Mat* p : params) {
            const uint32_t rows = read_u32(in), cols = read_u32(in);
            require(rows == static_cast<uint32_t>(p->rows()) &&
                        cols == static_cast<uint32_t>(p->cols()),
                    "checkpoint tensor shape mismatch: " + path);
            for (uint32_t r = 0; r < rows; ++r)
                for (uint32_t c = 0; c < cols; ++c) {
                    double v;
                    in.read(reinterpret_cast<char*>(&v), sizeof(double));
                    (*p)(r, c) = v;
                }
        }
        require(in.good(), "checkpoint truncated: " + path);
    }

   private:
    void check_chain(int in) const {
        if (!layers_.empty())
            require(layers_.back()->out_dim() == in, "layer input does not match previous output");
    }
    static void write_u32(std::ofstream& out, uint32_t v) {
        out.write(reinterpret_cast<const char*>(&v), sizeof(uint32_t));
    }
    static uint32_t read_u32(std::ifstream& in) {
        uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), sizeof(uint32_t));
        return v;
    }

    std::vector<std::unique_ptr<Layer>> layers_;
};

// ---------------------------------------------------------------------------
// Optimization
// ---------------------------------------------------------------------------

class Adam {
   public:
    explicit Adam(Network& net, double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : net_(&net), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
        for (Mat* p : net.parameters()) {
            m_.push_back(Mat::Zero(p->rows(), p->cols()));
            v_.push_back(Mat::Zero(p->rows(), p->cols()));
        }
    }

    void step() {
        ++t_;
        const auto params = net_->parameters();
        const auto grads = net_->gradients();
        const double c1 = 1.0 - std::pow(b1_, t_);
        const double c2 = 1.0 - std::pow(b2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = b1_ * m_[i] + (1.0 - b1_) * (*grads[i]);
            v_[i] = b2_ * v_[i] + (1.0 - b2_) * grads[i]->cwiseProduct(*grads[i]);
            params[i]->array() -=
                lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
        }
    }

    double lr() const { return lr_; }

   private:
    Network* net_;
    double lr_, b1_, b2_, eps_;
    int t_ = 0;
    std::vector<Mat> m_, v_;
};

inline void polyak_update(Network& target, Network& source, double tau) {
    const auto tp = target.parameters();
    const auto sp = source.parameters();
    require(tp.size() == sp.size(), "polyak_update: shape mismatch");
    for (std::size_t i = 0; i < tp.size(); ++i) *tp[i] = tau * (*sp[i]) + (1.0 - tau) * (*tp[i]);
}

inline double mse_loss(const Mat& pred, const Mat& target, Mat& dpred) {
    require(pred.rows() == target.rows() && pred.cols() == target.cols(), "mse_loss: shapes");
    const Mat diff = pred - target;
    dpred = 2.0 * diff / static_cast<double>(diff.size());
    return diff.squaredNorm() / static_cast<double>(diff.size());
}

}  // namespace gapbench::neural
