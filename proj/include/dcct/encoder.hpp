#pragma once

#include <string>
#include <vector>

#include "dcct/memory.hpp"
#include "dcct/types.hpp"

namespace dcct {

/// 2-layer perceptron d_in -> d_hidden -> d_out, tanh between layers,
/// L2-normalized output.
struct EncoderParams {
    Matrix w1;  // d_hidden x d_in
    Vector b1;  // d_hidden
    Matrix w2;  // d_out x d_hidden
    Vector b2;  // d_out

    static EncoderParams random_init(int d_in, int d_hidden, int d_out,
                                     std::uint64_t seed);
    static EncoderParams zeros(int d_in, int d_hidden, int d_out);

    bool same_shape(const EncoderParams& o) const;
    bool all_finite() const;

    // Elementwise arithmetic over the whole parameter set.
    EncoderParams& axpy(double a, const EncoderParams& x);  // *this += a*x
    EncoderParams& scale(double a);
    double norm() const;
};

/// Temporally averaged shadow copy, updated as avg <- alpha*avg + (1-alpha)*net.
struct MeanNetParams {
    EncoderParams params;
    double alpha = 0.99;

    static MeanNetParams init_from(const EncoderParams& p, double alpha);
};

/// Forward pass; output rows unit norm. Throws on non-finite input, naming
/// the offending row.
EmbeddingBatch forward(const EncoderParams& params, const Matrix& inputs,
                       const std::vector<int>& sample_indices);
EmbeddingBatch forward(const EncoderParams& params, const Matrix& inputs);

/// InfoNCE loss against a memory bank, mean over the batch, with the exact
/// analytic gradient through the output normalization and both layers. Memory
/// representations are constants: no gradient flows into the bank.
struct LossGrad {
    double loss = 0.0;
    EncoderParams grad;
};
LossGrad loss_and_grad(const EncoderParams& params, const Matrix& batch_inputs,
                       const std::vector<int>& positive_ids,
                       const MemoryBank& memory, double tau);

/// One SGD step with decoupled weight decay.
EncoderParams sgd_step(const EncoderParams& params, const EncoderParams& grad,
                       double lr, double weight_decay);

/// avg <- alpha*avg + (1-alpha)*current, elementwise.
MeanNetParams ema_update(const MeanNetParams& mean, const EncoderParams& current);

/// Text checkpoint: values at 17 significant digits plus a JSON shape
/// manifest. Round trip is bit exact.
void save_checkpoint(const EncoderParams& params, const std::string& path);
EncoderParams load_checkpoint(const std::string& path);

}  // namespace dcct
