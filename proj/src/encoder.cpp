#include "dcct/encoder.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dcct/rng.hpp"

namespace dcct {

EncoderParams EncoderParams::random_init(int d_in, int d_hidden, int d_out,
                                         std::uint64_t seed) {
    Rng rng(seed * 0x6a09e667f3bcc909ULL + 3);
    EncoderParams p = zeros(d_in, d_hidden, d_out);
    double s1 = std::sqrt(2.0 / d_in);
    double s2 = std::sqrt(2.0 / d_hidden);
    for (int i = 0; i < d_hidden; ++i)
        for (int j = 0; j < d_in; ++j) p.w1(i, j) = s1 * rng.normal();
    for (int i = 0; i < d_out; ++i)
        for (int j = 0; j < d_hidden; ++j) p.w2(i, j) = s2 * rng.normal();
    return p;
}

EncoderParams EncoderParams::zeros(int d_in, int d_hidden, int d_out) {
    EncoderParams p;
    p.w1 = Matrix::Zero(d_hidden, d_in);
    p.b1 = Vector::Zero(d_hidden);
    p.w2 = Matrix::Zero(d_out, d_hidden);
    p.b2 = Vector::Zero(d_out);
    return p;
}

bool EncoderParams::same_shape(const EncoderParams& o) const {
    return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() &&
           w2.rows() == o.w2.rows() && w2.cols() == o.w2.cols();
}

bool EncoderParams::all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

EncoderParams& EncoderParams::axpy(double a, const EncoderParams& x) {
    w1 += a * x.w1;
    b1 += a * x.b1;
    w2 += a * x.w2;
    b2 += a * x.b2;
    return *this;
}

EncoderParams& EncoderParams::scale(double a) {
    w1 *= a;
    b1 *= a;
    w2 *= a;
    b2 *= a;
    return *this;
}

double EncoderParams::norm() const {
    return std::sqrt(w1.squaredNorm() + b1.squaredNorm() + w2.squaredNorm() +
                     b2.squaredNorm());
}

MeanNetParams MeanNetParams::init_from(const EncoderParams& p, double alpha) {
    return {p, alpha};
}

namespace {

// Shared forward with intermediates kept for backprop.
struct ForwardCache {
    Matrix hidden;    // n x d_hidden, post-tanh
    Matrix prenorm;   // n x d_out
    Vector norms;     // n
    Matrix embedded;  // n x d_out, unit rows
};

ForwardCache forward_cached(const EncoderParams& p, const Matrix& inputs) {
    for (int i = 0; i < inputs.rows(); ++i) {
        if (!inputs.row(i).allFinite())
            throw std::invalid_argument("non-finite input at row " +
                                        std::to_string(i));
    }
    if (inputs.cols() != p.w1.cols())
        throw std::invalid_argument("input dim mismatch");

    ForwardCache c;
    c.hidden = ((inputs * p.w1.transpose()).rowwise() + p.b1.transpose())
                   .array()
                   .tanh();
    c.prenorm = (c.hidden * p.w2.transpose()).rowwise() + p.b2.transpose();
    c.norms = c.prenorm.rowwise().norm();
    c.embedded = c.prenorm;
    for (int i = 0; i < c.embedded.rows(); ++i) {
        double n = c.norms(i);
        if (n < 1e-12) {
            // Degenerate pre-activation: pin to the first axis.
            c.embedded.row(i).setZero();
            c.embedded(i, 0) = 1.0;
            c.norms(i) = 1.0;
        } else {
            c.embedded.row(i) /= n;
        }
    }
    return c;
}

}  // namespace

EmbeddingBatch forward(const EncoderParams& params, const Matrix& inputs,
                       const std::vector<int>& sample_indices) {
    EmbeddingBatch b;
    b.rows = forward_cached(params, inputs).embedded;
    b.sample_indices = sample_indices;
    return b;
}

EmbeddingBatch forward(const EncoderParams& params, const Matrix& inputs) {
    std::vector<int> idx(inputs.rows());
    for (int i = 0; i < inputs.rows(); ++i) idx[i] = i;
    return forward(params, inputs, idx);
}

LossGrad loss_and_grad(const EncoderParams& params, const Matrix& batch_inputs,
                       const std::vector<int>& positive_ids,
                       const MemoryBank& memory, double tau) {
    const int n = static_cast<int>(batch_inputs.rows());
    if (n == 0) throw std::invalid_argument("empty batch");
    if (tau <= 0) throw std::invalid_argument("tau must be > 0");
    if (static_cast<int>(positive_ids.size()) != n)
        throw std::invalid_argument("positive_ids size mismatch");
    const int K = memory.size();
    for (int id : positive_ids)
        if (id < 0 || id >= K)
            throw std::out_of_range("positive_id out of range");

    ForwardCache c = forward_cached(params, batch_inputs);

    // logits(i,k) = q_i . c_k / tau
    Matrix logits = (c.embedded * memory.reps.transpose()) / tau;
    LossGrad out;
    out.grad = EncoderParams::zeros(static_cast<int>(params.w1.cols()),
                                    static_cast<int>(params.w1.rows()),
                                    static_cast<int>(params.w2.rows()));

    Matrix grad_embed(n, c.embedded.cols());
    for (int i = 0; i < n; ++i) {
        Eigen::RowVectorXd row = logits.row(i);
        double m = row.maxCoeff();
        Eigen::RowVectorXd ex = (row.array() - m).exp();
        double z = ex.sum();
        out.loss += -(row(positive_ids[i]) - m) + std::log(z);
        Eigen::RowVectorXd p = ex / z;
        p(positive_ids[i]) -= 1.0;
        grad_embed.row(i) = (p * memory.reps) / tau;
    }
    out.loss /= n;
    grad_embed /= n;

    // Through the L2 normalization: g_z = (g_e - (g_e.e) e) / ||z||.
    Matrix grad_pre(n, c.prenorm.cols());
    for (int i = 0; i < n; ++i) {
        double dot = grad_embed.row(i).dot(c.embedded.row(i));
        grad_pre.row(i) =
            (grad_embed.row(i) - dot * c.embedded.row(i)) / c.norms(i);
    }

    out.grad.w2 = grad_pre.transpose() * c.hidden;
    out.grad.b2 = grad_pre.colwise().sum();
    Matrix grad_hidden = (grad_pre * params.w2).array() *
                         (1.0 - c.hidden.array().square());
    out.grad.w1 = grad_hidden.transpose() * batch_inputs;
    out.grad.b1 = grad_hidden.colwise().sum();
    return out;
}

EncoderParams sgd_step(const EncoderParams& params, const EncoderParams& grad,
                       double lr, double weight_decay) {
    if (lr <= 0) throw std::invalid_argument("lr must be > 0");
    if (!grad.all_finite())
        throw std::runtime_error("non-finite gradient in sgd_step");
    EncoderParams next = params;
    next.axpy(-lr, grad);
    if (weight_decay != 0.0) next.axpy(-lr * weight_decay, params);
    return next;
}

MeanNetParams ema_update(const MeanNetParams& mean,
                         const EncoderParams& current) {
    if (!mean.params.same_shape(current))
        throw std::invalid_argument("ema_update shape mismatch");
    MeanNetParams next = mean;
    next.params.scale(mean.alpha);
    next.params.axpy(1.0 - mean.alpha, current);
    return next;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    std::vector<double> flat(m.size());
    Eigen::Map<Matrix>(flat.data(), m.rows(), m.cols()) = m;
    return flat;
}

Matrix matrix_from_json(const nlohmann::json& j, int rows, int cols) {
    auto flat = j.get<std::vector<double>>();
    if (static_cast<int>(flat.size()) != rows * cols)
        throw std::runtime_error("checkpoint tensor size mismatch");
    return Eigen::Map<Matrix>(flat.data(), rows, cols);
}

}  // namespace

void save_checkpoint(const EncoderParams& params, const std::string& path) {
    nlohmann::json j;
    j["shape"] = {{"d_in", params.w1.cols()},
                  {"d_hidden", params.w1.rows()},
                  {"d_out", params.w2.rows()}};
    j["w1"] = matrix_to_json(params.w1);
    j["b1"] = matrix_to_json(params.b1);
    j["w2"] = matrix_to_json(params.w2);
    j["b2"] = matrix_to_json(params.b2);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

EncoderParams load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    in >> j;
    int d_in = j["shape"]["d_in"];
    int d_hidden = j["shape"]["d_hidden"];
    int d_out = j["shape"]["d_out"];
    EncoderParams p;
    p.w1 = matrix_from_json(j["w1"], d_hidden, d_in);
    p.b1 = matrix_from_json(j["b1"], d_hidden, 1);
    p.w2 = matrix_from_json(j["w2"], d_out, d_hidden);
    p.b2 = matrix_from_json(j["b2"], d_out, 1);
    return p;
}

}  // namespace dcct
