#ifndef SEALID_MATRIX_H_
#define SEALID_MATRIX_H_

#include <Eigen/Core>

namespace sealid {

// Batches are row-major: one sample per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

}  // namespace sealid

#endif  // SEALID_MATRIX_H_
