// Copyright 2026 The dnr-asp Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef DNR_COMMON_MATRIX_H_
#define DNR_COMMON_MATRIX_H_

#include <complex>

#include <Eigen/Dense>

namespace dnr {

// Frame-major (frames x bins) storage everywhere.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                                    Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace dnr

#endif  // DNR_COMMON_MATRIX_H_
