// SPDX-License-Identifier: Apache-2.0
#pragma once

#define EIGEN_DONT_PARALLELIZE 1

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dagwgan {

/// Dense row-major f64 matrix. Row-major so that reshapes between
/// (p*k) x q and p x (k*q) are plain reinterpretations of the same buffer.
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Construction-time shape inconsistency in an expression graph.
struct ShapeError : Error {
    using Error::Error;
};

/// Runtime evaluation failure (unbound variable, non-finite result, ...).
struct EvalError : Error {
    using Error::Error;
};

/// Singular or ill-conditioned linear system.
struct SingularError : EvalError {
    using EvalError::EvalError;
};

/// Malformed input data (files, CSV cells, CPTs, graph files, ...).
struct DataError : Error {
    using Error::Error;
};

inline void ensure_finite(const Tensor& t, const std::string& what) {
    if (!t.allFinite()) throw EvalError("non-finite values in " + what);
}

inline Tensor tensor_from(std::initializer_list<std::initializer_list<double>> rows) {
    Eigen::Index r = static_cast<Eigen::Index>(rows.size());
    Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows.begin()->size()) : 0;
    Tensor t(r, c);
    Eigen::Index i = 0;
    for (const auto& row : rows) {
        if (static_cast<Eigen::Index>(row.size()) != c)
            throw ShapeError("ragged initializer for tensor");
        Eigen::Index j = 0;
        for (double v : row) t(i, j++) = v;
        ++i;
    }
    return t;
}

} // namespace dagwgan
