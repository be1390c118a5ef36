#include "macknet/neural.hpp"
#include "macknet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace macknet {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vec relu(const Vec& z) { return z.cwiseMax(0.0); }

Vec relu_grad_mask(const Vec& z) {
    return (z.array() > 0.0).cast<double>().matrix();
}

Vec dropout_mask(std::size_t n, double theta, Rng* rng, RunMode mode) {
    if (mode == RunMode::Eval || theta == 0.0) return Vec::Ones(static_cast<Eigen::Index>(n));
    const double keep_scale = 1.0 / (1.0 - theta);
    Vec m(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < m.size(); ++k)
        m[k] = rng->uniform() < theta ? 0.0 : keep_scale;
    return m;
}

} // namespace

Network::Network(std::size_t input, std::size_t hidden, std::size_t width)
    : input_(input), hidden_(hidden), width_(width) {
    if (input == 0 || hidden == 0 || width == 0)
        throw DataError("Network: all dimensions must be positive");

    std::size_t offset = 0;
    const auto add = [&](const std::string& name, std::size_t rows, std::size_t cols) {
        specs_.push_back({name, offset, rows, cols});
        offset += rows * cols;
    };
    for (const char* gate : {"f", "i", "c", "o"}) {
        add(std::string("lstm.W") + gate + "x", hidden, input);
        add(std::string("lstm.W") + gate + "h", hidden, hidden);
        add(std::string("lstm.b") + gate, hidden, 1);
    }
    add("fc1.W", width, hidden);
    add("fc1.b", width, 1);
    for (int l = 2; l <= 4; ++l) {
        add("fc" + std::to_string(l) + ".W", width, width);
        add("fc" + std::to_string(l) + ".b", width, 1);
    }
    add("fc5.W", 1, width);
    add("fc5.b", 1, 1);

    theta_ = Vec::Zero(static_cast<Eigen::Index>(offset));
}

double forward(const Network& net, const Mat& x_seq, RunMode mode, const DropoutSpec& dropout,
               Rng* rng, ForwardTape* tape) {
    if (static_cast<std::size_t>(x_seq.rows()) != net.input_size())
        throw DataError("forward: input has " + std::to_string(x_seq.rows()) +
                        " features, network expects " + std::to_string(net.input_size()));
    if (x_seq.cols() < 1) throw DataError("forward: empty sequence");
    if (!x_seq.allFinite()) throw NumericalError("forward: non-finite input");
    if (!(dropout.theta >= 0.0 && dropout.theta < 1.0))
        throw DataError("forward: dropout outside [0, 1)");
    if (mode == RunMode::Train && dropout.theta > 0.0 && rng == nullptr)
        throw DataError("forward: train mode with dropout needs an rng");
    const double dropout_theta = dropout.theta;

    const auto H = static_cast<Eigen::Index>(net.hidden_size());
    const auto T = x_seq.cols();

    ForwardTape local;
    ForwardTape& tp = tape != nullptr ? *tape : local;
    tp.x = x_seq;
    if (mode == RunMode::Train && dropout.on_input && dropout_theta > 0.0) {
        for (Eigen::Index t = 0; t < T; ++t)
            tp.x.col(t) =
                tp.x.col(t).cwiseProduct(dropout_mask(net.input_size(), dropout_theta, rng, mode));
    }
    tp.h.setZero(H, T + 1);
    tp.c.setZero(H, T + 1);
    tp.fg.resize(H, T);
    tp.ig.resize(H, T);
    tp.og.resize(H, T);
    tp.cc.resize(H, T);
    tp.tanh_c.resize(H, T);

    for (Eigen::Index t = 0; t < T; ++t) {
        const Vec x_t = tp.x.col(t);
        const Vec h_prev = tp.h.col(t);
        const Vec c_prev = tp.c.col(t);

        const Vec zf = net.Wfx() * x_t + net.Wfh() * h_prev + net.bf();
        const Vec zi = net.Wix() * x_t + net.Wih() * h_prev + net.bi();
        const Vec zc = net.Wcx() * x_t + net.Wch() * h_prev + net.bc();
        const Vec zo = net.Wox() * x_t + net.Woh() * h_prev + net.bo();

        tp.fg.col(t) = zf.unaryExpr([](double v) { return sigmoid(v); });
        tp.ig.col(t) = zi.unaryExpr([](double v) { return sigmoid(v); });
        tp.cc.col(t) = zc.array().tanh().matrix();
        tp.og.col(t) = zo.unaryExpr([](double v) { return sigmoid(v); });

        tp.c.col(t + 1) =
            tp.fg.col(t).cwiseProduct(c_prev) + tp.ig.col(t).cwiseProduct(tp.cc.col(t));
        tp.tanh_c.col(t) = tp.c.col(t + 1).array().tanh().matrix();
        tp.h.col(t + 1) = tp.og.col(t).cwiseProduct(tp.tanh_c.col(t));
    }

    const Vec h_final = tp.h.col(T);

    tp.m1 = dropout_mask(net.width(), dropout_theta, rng, mode);
    tp.m2 = dropout_mask(net.width(), dropout_theta, rng, mode);
    tp.m3 = dropout_mask(net.width(), dropout_theta, rng, mode);
    tp.m4 = dropout_mask(net.width(), dropout_theta, rng, mode);

    tp.z1 = net.W1() * h_final + net.b1();
    tp.a1 = relu(tp.z1).cwiseProduct(tp.m1);
    tp.z2 = net.W2() * tp.a1 + net.b2();
    tp.a2 = relu(tp.z2).cwiseProduct(tp.m2);
    tp.z3 = net.W3() * tp.a2 + net.b3();
    tp.a3 = relu(tp.z3).cwiseProduct(tp.m3);
    tp.z4 = net.W4() * tp.a3 + net.b4();
    tp.a4 = relu(tp.z4).cwiseProduct(tp.m4);

    tp.fc5_in = tp.a4 + tp.a1; // skip connection from FC1
    tp.out = (net.W5() * tp.fc5_in)(0) + net.b5()(0);
    if (!std::isfinite(tp.out)) throw NumericalError("forward: non-finite output");
    return tp.out;
}

Mat lstm_forward(const Network& net, const Mat& x_seq) {
    ForwardTape tape;
    forward(net, x_seq, RunMode::Eval, DropoutSpec{}, nullptr, &tape);
    return tape.h.rightCols(x_seq.cols());
}

double mse_loss(const std::vector<double>& preds, const std::vector<double>& targets) {
    if (preds.empty() || preds.size() != targets.size())
        throw DataError("mse_loss: length mismatch or empty input");
    double sum = 0.0;
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const double d = preds[k] - targets[k];
        sum += d * d;
    }
    return sum / static_cast<double>(preds.size());
}

Vec backward(const Network& net, const ForwardTape& tape, double dloss_dout) {
    const auto& specs = net.tensors();
    Vec grad = Vec::Zero(static_cast<Eigen::Index>(net.n_params()));
    const auto gm = [&](std::size_t k) {
        return Eigen::Map<Mat>(grad.data() + specs[k].offset,
                               static_cast<Eigen::Index>(specs[k].rows),
                               static_cast<Eigen::Index>(specs[k].cols));
    };
    const auto gv = [&](std::size_t k) {
        return Eigen::Map<Vec>(grad.data() + specs[k].offset,
                               static_cast<Eigen::Index>(specs[k].rows));
    };

    const auto T = tape.x.cols();
    const Vec h_final = tape.h.col(T);

    // FC5 and the skip path.
    const double g_out = dloss_dout;
    gm(20) += g_out * tape.fc5_in.transpose(); // fc5.W
    gv(21)(0) += g_out;                        // fc5.b
    const Vec d_fc5in = net.W5().transpose() * g_out;

    Vec da4 = d_fc5in;
    Vec da1 = d_fc5in; // skip contribution

    const Vec dz4 = da4.cwiseProduct(tape.m4).cwiseProduct(relu_grad_mask(tape.z4));
    gm(18) += dz4 * tape.a3.transpose();
    gv(19) += dz4;
    const Vec da3 = net.W4().transpose() * dz4;

    const Vec dz3 = da3.cwiseProduct(tape.m3).cwiseProduct(relu_grad_mask(tape.z3));
    gm(16) += dz3 * tape.a2.transpose();
    gv(17) += dz3;
    const Vec da2 = net.W3().transpose() * dz3;

    const Vec dz2 = da2.cwiseProduct(tape.m2).cwiseProduct(relu_grad_mask(tape.z2));
    gm(14) += dz2 * tape.a1.transpose();
    gv(15) += dz2;
    da1 += net.W2().transpose() * dz2;

    const Vec dz1 = da1.cwiseProduct(tape.m1).cwiseProduct(relu_grad_mask(tape.z1));
    gm(12) += dz1 * h_final.transpose();
    gv(13) += dz1;

    // Backpropagation through time.
    Vec dh_next = net.W1().transpose() * dz1;
    Vec dc_next = Vec::Zero(tape.h.rows());

    for (Eigen::Index t = T - 1; t >= 0; --t) {
        const Vec x_t = tape.x.col(t);
        const Vec h_prev = tape.h.col(t);
        const Vec c_prev = tape.c.col(t);
        const Vec f = tape.fg.col(t);
        const Vec i = tape.ig.col(t);
        const Vec o = tape.og.col(t);
        const Vec cc = tape.cc.col(t);
        const Vec th = tape.tanh_c.col(t);

        const Vec dh = dh_next;
        const Vec do_ = dh.cwiseProduct(th);
        const Vec dc =
            dc_next + dh.cwiseProduct(o).cwiseProduct((1.0 - th.array().square()).matrix());

        const Vec df = dc.cwiseProduct(c_prev);
        const Vec di = dc.cwiseProduct(cc);
        const Vec dcc = dc.cwiseProduct(i);

        const Vec dzf = df.cwiseProduct(f).cwiseProduct((1.0 - f.array()).matrix());
        const Vec dzi = di.cwiseProduct(i).cwiseProduct((1.0 - i.array()).matrix());
        const Vec dzo = do_.cwiseProduct(o).cwiseProduct((1.0 - o.array()).matrix());
        const Vec dzc = dcc.cwiseProduct((1.0 - cc.array().square()).matrix());

        gm(0) += dzf * x_t.transpose();
        gm(1) += dzf * h_prev.transpose();
        gv(2) += dzf;
        gm(3) += dzi * x_t.transpose();
        gm(4) += dzi * h_prev.transpose();
        gv(5) += dzi;
        gm(6) += dzc * x_t.transpose();
        gm(7) += dzc * h_prev.transpose();
        gv(8) += dzc;
        gm(9) += dzo * x_t.transpose();
        gm(10) += dzo * h_prev.transpose();
        gv(11) += dzo;

        dh_next = net.Wfh().transpose() * dzf + net.Wih().transpose() * dzi +
                  net.Wch().transpose() * dzc + net.Woh().transpose() * dzo;
        dc_next = dc.cwiseProduct(f);
    }
    return grad;
}

BatchEval loss_and_gradient(const Network& net, const std::vector<Mat>& inputs,
                            const std::vector<double>& targets, RunMode mode,
                            const DropoutSpec& dropout, Rng* rng) {
    if (inputs.empty() || inputs.size() != targets.size())
        throw DataError("loss_and_gradient: empty batch or length mismatch");
    const double n = static_cast<double>(inputs.size());

    BatchEval out;
    out.grad = Vec::Zero(static_cast<Eigen::Index>(net.n_params()));
    ForwardTape tape;
    for (std::size_t s = 0; s < inputs.size(); ++s) {
        const double pred = forward(net, inputs[s], mode, dropout, rng, &tape);
        const double err = pred - targets[s];
        out.loss += err * err / n;
        out.grad += backward(net, tape, 2.0 * err / n);
    }
    return out;
}

void adam_step(Vec& params, const Vec& grad, OptimizerState& state, const TrainConfig& cfg) {
    if (params.size() != grad.size() || state.m.size() != params.size())
        throw DataError("adam_step: shape mismatch");
    if (!grad.allFinite()) throw NumericalError("adam_step: non-finite gradient");

    state.t += 1;
    const double t = static_cast<double>(state.t);
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v = cfg.beta2 * state.v.array().matrix() +
              (1.0 - cfg.beta2) * grad.array().square().matrix();
    const double m_corr = 1.0 - std::pow(cfg.beta1, t);
    const double v_corr = 1.0 - std::pow(cfg.beta2, t);
    params.array() -= cfg.learning_rate * (state.m.array() / m_corr) /
                      ((state.v.array() / v_corr).sqrt() + cfg.epsilon);
}

Mat init_glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    // Row-major fill so the draw order is part of the documented contract.
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-limit, limit);
    return m;
}

Mat init_orthogonal(std::size_t rows, std::size_t cols, Rng& rng) {
    Mat g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < g.rows(); ++r)
        for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = rng.normal();

    const bool tall = rows >= cols;
    const Mat work = tall ? g : Mat(g.transpose());
    const auto k = std::min(rows, cols);

    Eigen::HouseholderQR<Mat> qr(work);
    Mat q = qr.householderQ() * Mat::Identity(work.rows(), static_cast<Eigen::Index>(k));
    const Mat r_full = qr.matrixQR().topRows(static_cast<Eigen::Index>(k));
    for (Eigen::Index c = 0; c < q.cols(); ++c)
        if (r_full(c, c) < 0.0) q.col(c) = -q.col(c);

    return tall ? q : Mat(q.transpose());
}

void init_network(Network& net, Rng& rng) {
    for (std::size_t k = 0; k < net.tensors().size(); ++k) {
        const auto& spec = net.tensors()[k];
        if (spec.cols == 1) {
            net.mvec(k).setZero();
        } else if (spec.name.size() > 2 && spec.name.back() == 'h' &&
                   spec.name.rfind("lstm.", 0) == 0) {
            net.mmat(k) = init_orthogonal(spec.rows, spec.cols, rng);
        } else {
            net.mmat(k) = init_glorot(spec.rows, spec.cols, rng);
        }
    }
}

Vec dropout(const Vec& x, double theta, Rng& rng, RunMode mode) {
    if (!(theta >= 0.0 && theta < 1.0)) throw DataError("dropout: theta outside [0, 1)");
    if (mode == RunMode::Eval || theta == 0.0) return x;
    return x.cwiseProduct(dropout_mask(static_cast<std::size_t>(x.size()), theta, &rng, mode));
}

TrainResult train(const std::vector<Sample>& samples, const std::vector<Sample>& monitor,
                  const TrainConfig& cfg) {
    if (samples.empty()) throw DataError("train: no samples");
    if (cfg.epochs < 1) throw DataError("train: epochs must be at least 1");

    const auto input_dim = static_cast<std::size_t>(samples[0].x.rows());
    std::vector<Mat> inputs;
    std::vector<double> targets;
    inputs.reserve(samples.size());
    targets.reserve(samples.size());
    for (const auto& s : samples) {
        inputs.push_back(s.x);
        targets.push_back(s.y);
    }

    TrainResult result;
    result.net = Network(input_dim, cfg.hidden, cfg.width);
    Rng init_rng = Rng::stream(cfg.seed, 0);
    Rng drop_rng = Rng::stream(cfg.seed, 1);
    init_network(result.net, init_rng);

    OptimizerState state(result.net.n_params());
    const bool early_stop = !monitor.empty() && cfg.patience > 0;
    Vec best_theta;
    double best_monitor = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    std::size_t since_best = 0;

    const auto monitor_mse = [&]() {
        std::vector<double> preds, ys;
        preds.reserve(monitor.size());
        ys.reserve(monitor.size());
        for (const auto& s : monitor) {
            preds.push_back(
                forward(result.net, s.x, RunMode::Eval, DropoutSpec{}, nullptr, nullptr));
            ys.push_back(s.y);
        }
        return mse_loss(preds, ys);
    };

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const DropoutSpec drop{cfg.dropout, cfg.dropout_on_input};
        const BatchEval be =
            loss_and_gradient(result.net, inputs, targets, RunMode::Train, drop, &drop_rng);
        if (!std::isfinite(be.loss))
            throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch));
        adam_step(result.net.params(), be.grad, state, cfg);
        result.train_loss.push_back(be.loss);
        result.epochs_run = epoch;

        if (!monitor.empty()) {
            const double ml = monitor_mse();
            result.monitor_loss.push_back(ml);
            if (early_stop) {
                if (ml < best_monitor) {
                    best_monitor = ml;
                    best_theta = result.net.params();
                    best_epoch = epoch;
                    since_best = 0;
                } else if (++since_best >= cfg.patience) {
                    break;
                }
            }
        }
    }

    if (early_stop && best_epoch > 0) {
        result.net.params() = best_theta;
        result.best_epoch = best_epoch;
        result.best_monitor = best_monitor;
    }
    return result;
}

} // namespace macknet
