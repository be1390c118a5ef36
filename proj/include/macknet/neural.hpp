#ifndef MACKNET_NEURAL_HPP
#define MACKNET_NEURAL_HPP

#include "macknet/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

// Self-contained recurrent network stack sized for triangle-scale data:
// one LSTM cell, five dense layers with a skip connection from FC1 into
// FC5, inverted dropout, MSE loss, exact backpropagation through time and
// ADAM. Double precision throughout; every stochastic choice is driven by
// an explicit Rng so training is bit-reproducible.

namespace macknet {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class RunMode { Train, Eval };

struct TrainConfig {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double dropout = 0.05;
    bool dropout_on_input = false; // also drop LSTM inputs per timestep
    std::size_t epochs = 500;
    std::size_t patience = 50; // early-stopping patience on monitor loss; 0 disables
    std::size_t hidden = 16;   // LSTM state size
    std::size_t width = 16;    // FC1..FC4 width
    std::uint64_t seed = 0;
};

/// All parameters of one network in a single flat vector, with named
/// matrix/vector views. The flat layout keeps the optimizer, the
/// finite-difference harness and checkpointing trivial.
class Network {
public:
    struct TensorSpec {
        std::string name;
        std::size_t offset;
        std::size_t rows;
        std::size_t cols; // 1 for bias vectors
    };

    Network() = default;
    Network(std::size_t input, std::size_t hidden, std::size_t width);

    std::size_t input_size() const { return input_; }
    std::size_t hidden_size() const { return hidden_; }
    std::size_t width() const { return width_; }
    std::size_t n_params() const { return static_cast<std::size_t>(theta_.size()); }

    Vec& params() { return theta_; }
    const Vec& params() const { return theta_; }
    const std::vector<TensorSpec>& tensors() const { return specs_; }

    // LSTM gate weights: W_*x act on the input, W_*h on the recurrent
    // state; together they implement W_*[h_{t-1}, x_t] + b_*.
    auto Wfx() const { return mat(0); }
    auto Wfh() const { return mat(1); }
    auto bf() const { return vec(2); }
    auto Wix() const { return mat(3); }
    auto Wih() const { return mat(4); }
    auto bi() const { return vec(5); }
    auto Wcx() const { return mat(6); }
    auto Wch() const { return mat(7); }
    auto bc() const { return vec(8); }
    auto Wox() const { return mat(9); }
    auto Woh() const { return mat(10); }
    auto bo() const { return vec(11); }

    auto W1() const { return mat(12); }
    auto b1() const { return vec(13); }
    auto W2() const { return mat(14); }
    auto b2() const { return vec(15); }
    auto W3() const { return mat(16); }
    auto b3() const { return vec(17); }
    auto W4() const { return mat(18); }
    auto b4() const { return vec(19); }
    auto W5() const { return mat(20); }
    auto b5() const { return vec(21); }

    // Mutable views, same order.
    auto mWfx() { return mmat(0); }
    auto mWfh() { return mmat(1); }
    auto mbf() { return mvec(2); }
    auto mWix() { return mmat(3); }
    auto mWih() { return mmat(4); }
    auto mbi() { return mvec(5); }
    auto mWcx() { return mmat(6); }
    auto mWch() { return mmat(7); }
    auto mbc() { return mvec(8); }
    auto mWox() { return mmat(9); }
    auto mWoh() { return mmat(10); }
    auto mbo() { return mvec(11); }
    auto mW1() { return mmat(12); }
    auto mb1() { return mvec(13); }
    auto mW2() { return mmat(14); }
    auto mb2() { return mvec(15); }
    auto mW3() { return mmat(16); }
    auto mb3() { return mvec(17); }
    auto mW4() { return mmat(18); }
    auto mb4() { return mvec(19); }
    auto mW5() { return mmat(20); }
    auto mb5() { return mvec(21); }

    Eigen::Map<const Mat> mat(std::size_t k) const {
        const auto& s = specs_[k];
        return {theta_.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                static_cast<Eigen::Index>(s.cols)};
    }
    Eigen::Map<const Vec> vec(std::size_t k) const {
        const auto& s = specs_[k];
        return {theta_.data() + s.offset, static_cast<Eigen::Index>(s.rows)};
    }
    Eigen::Map<Mat> mmat(std::size_t k) {
        const auto& s = specs_[k];
        return {theta_.data() + s.offset, static_cast<Eigen::Index>(s.rows),
                static_cast<Eigen::Index>(s.cols)};
    }
    Eigen::Map<Vec> mvec(std::size_t k) {
        const auto& s = specs_[k];
        return {theta_.data() + s.offset, static_cast<Eigen::Index>(s.rows)};
    }

private:
    std::size_t input_ = 0;
    std::size_t hidden_ = 0;
    std::size_t width_ = 0;
    Vec theta_;
    std::vector<TensorSpec> specs_;
};

/// Everything the backward pass needs from one forward evaluation.
struct ForwardTape {
    Mat x;                       // input after any input dropout, D x T
    Mat h, c;                    // H x (T+1), column 0 is the zero state
    Mat fg, ig, og, cc, tanh_c;  // gate activations and tanh(C_t), H x T
    Vec z1, a1, z2, a2, z3, a3, z4, a4;
    Vec m1, m2, m3, m4; // dropout multipliers (1/(1-theta) or 0)
    Vec fc5_in;
    double out = 0.0;
};

/// Dropout configuration for a forward pass. `on_input` additionally
/// drops LSTM input elements per timestep (off by default; the recurrent
/// state itself is never dropped).
struct DropoutSpec {
    double theta = 0.0;
    bool on_input = false;
};

/// Runs the LSTM over the sequence (columns of x_seq are timesteps,
/// oldest first) from zero initial state; returns all hidden states
/// h_1..h_T as columns.
Mat lstm_forward(const Network& net, const Mat& x_seq);

/// Full forward pass: LSTM final state -> FC1..FC4 (rectifier, dropout in
/// train mode) -> FC5 with the FC1 activation added into the FC5 input.
/// `rng` is only consulted in train mode with dropout.theta > 0.
double forward(const Network& net, const Mat& x_seq, RunMode mode, const DropoutSpec& dropout,
               Rng* rng, ForwardTape* tape);

double mse_loss(const std::vector<double>& preds, const std::vector<double>& targets);

/// Gradient of 0.5-free MSE contribution for one sample: pass
/// dloss_dout = 2 * (pred - target) / batch_size and accumulate.
Vec backward(const Network& net, const ForwardTape& tape, double dloss_dout);

struct BatchEval {
    double loss = 0.0;
    Vec grad;
};

/// Mean MSE loss and its exact gradient over a full batch.
BatchEval loss_and_gradient(const Network& net, const std::vector<Mat>& inputs,
                            const std::vector<double>& targets, RunMode mode,
                            const DropoutSpec& dropout, Rng* rng);

struct OptimizerState {
    Vec m, v;
    std::size_t t = 0;

    explicit OptimizerState(std::size_t n = 0) : m(Vec::Zero(n)), v(Vec::Zero(n)) {}
};

/// One ADAM update with bias correction.
void adam_step(Vec& params, const Vec& grad, OptimizerState& state, const TrainConfig& cfg);

/// Uniform on [-L, L], L = sqrt(6 / (rows + cols)).
Mat init_glorot(std::size_t rows, std::size_t cols, Rng& rng);

/// Orthonormalized random Gaussian matrix (orthonormal columns if rows >=
/// cols, orthonormal rows otherwise), sign-fixed for determinism.
Mat init_orthogonal(std::size_t rows, std::size_t cols, Rng& rng);

/// Glorot for input-side LSTM weights and all dense weights, orthogonal
/// for the recurrent weights, zero biases.
void init_network(Network& net, Rng& rng);

/// Inverted dropout: train mode zeroes units with probability theta and
/// scales survivors by 1/(1-theta); eval mode is the identity.
Vec dropout(const Vec& x, double theta, Rng& rng, RunMode mode);

struct Sample {
    Mat x; // D x T
    double y = 0.0;
};

struct TrainResult {
    Network net;
    std::vector<double> train_loss;   // one entry per epoch run
    std::vector<double> monitor_loss; // empty when no monitor set given
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0; // 1-based; 0 when early stopping unused
    double best_monitor = 0.0;
};

/// Full-batch ADAM training. When `monitor` is nonempty and
/// cfg.patience > 0, training stops after `patience` epochs without
/// monitor improvement and the best weights are restored. The monitor set
/// never contributes gradients. Throws NumericalError on divergence.
TrainResult train(const std::vector<Sample>& samples, const std::vector<Sample>& monitor,
                  const TrainConfig& cfg);

} // namespace macknet

#endif
