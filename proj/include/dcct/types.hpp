#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace dcct {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row-per-sample embedding matrix plus the sample indices the rows belong to.
/// Rows are unit L2 norm.
struct EmbeddingBatch {
    Matrix rows;                      // n x d_out
    std::vector<int> sample_indices;  // size n

    int size() const { return static_cast<int>(rows.rows()); }
    int dim() const { return static_cast<int>(rows.cols()); }
};

}  // namespace dcct
