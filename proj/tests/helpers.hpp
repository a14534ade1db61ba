// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dagwgan/expr.hpp"
#include "dagwgan/rng.hpp"

#include <cmath>
#include <functional>

namespace dagwgan::testing {

inline Tensor random_tensor(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -2.0,
                            double hi = 2.0) {
    Tensor t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(lo, hi);
    return t;
}

/// Central finite differences of a scalar expression w.r.t. one variable.
inline Tensor fd_gradient(const ad::Expr& root, const ad::Expr& var, ad::Bindings bindings,
                          double step = 1e-5) {
    const Tensor* bound = bindings.find(var.var_id());
    if (!bound) throw EvalError("fd_gradient: variable not bound");
    Tensor base = *bound;
    Tensor g(base.rows(), base.cols());
    for (Eigen::Index i = 0; i < base.size(); ++i) {
        Tensor up = base, dn = base;
        up.data()[i] += step;
        dn.data()[i] -= step;
        bindings.set(var.var_id(), up);
        double f_up = ad::evaluate(root, bindings)(0, 0);
        bindings.set(var.var_id(), dn);
        double f_dn = ad::evaluate(root, bindings)(0, 0);
        g.data()[i] = (f_up - f_dn) / (2.0 * step);
    }
    return g;
}

inline double rel_err(const Tensor& got, const Tensor& want) {
    double denom = std::max(want.norm(), 1e-6);
    return (got - want).norm() / denom;
}

/// Checks the autodiff gradient of `root` w.r.t. `var` against central
/// differences; returns the relative error.
inline double grad_vs_fd(const ad::Expr& root, const ad::Expr& var,
                         const ad::Bindings& bindings, double step = 1e-5) {
    std::vector<ad::Expr> wrt{var};
    Tensor g = ad::gradient(root, wrt, bindings)[0];
    Tensor fd = fd_gradient(root, var, bindings, step);
    return rel_err(g, fd);
}

} // namespace dagwgan::testing
