// SPDX-License-Identifier: Apache-2.0
#include "dagwgan/mlp.hpp"

#include <cmath>

namespace dagwgan {

void MlpParams::validate() const {
    if (weights.size() != biases.size()) throw ShapeError("MlpParams: layer list mismatch");
    for (size_t l = 0; l < weights.size(); ++l) {
        if (biases[l].rows() != 1 || biases[l].cols() != weights[l].cols())
            throw ShapeError("MlpParams: bias shape mismatch at layer " + std::to_string(l));
        if (l + 1 < weights.size() && weights[l].cols() != weights[l + 1].rows())
            throw ShapeError("MlpParams: dimensions do not chain at layer " + std::to_string(l));
        ensure_finite(weights[l], "MLP weight");
        ensure_finite(biases[l], "MLP bias");
    }
}

MlpParams init_mlp(const std::vector<int>& dims, Activation hidden_act, Rng& rng) {
    MlpParams p;
    p.hidden_act = hidden_act;
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        int in = dims[l], out = dims[l + 1];
        double s = std::sqrt(6.0 / static_cast<double>(in + out));
        Tensor w(in, out);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-s, s);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Tensor::Zero(1, out));
    }
    p.validate();
    return p;
}

std::vector<ad::Expr> MlpVars::all() const {
    std::vector<ad::Expr> v;
    v.reserve(weights.size() + biases.size());
    v.insert(v.end(), weights.begin(), weights.end());
    v.insert(v.end(), biases.begin(), biases.end());
    return v;
}

MlpVars make_mlp_vars(const std::string& prefix, const MlpParams& p) {
    MlpVars v;
    for (int l = 0; l < p.layer_count(); ++l) {
        v.weights.push_back(ad::variable(prefix + ".W" + std::to_string(l),
                                         p.weights[l].rows(), p.weights[l].cols()));
        v.biases.push_back(ad::variable(prefix + ".b" + std::to_string(l), 1,
                                        p.biases[l].cols()));
    }
    return v;
}

void bind_mlp(ad::Bindings& b, const MlpVars& vars, const MlpParams& p) {
    for (int l = 0; l < p.layer_count(); ++l) {
        b.set(vars.weights[l], p.weights[l]);
        b.set(vars.biases[l], p.biases[l]);
    }
}

ad::Expr mlp_forward(const ad::Expr& input, const MlpVars& vars, const MlpParams& meta,
                     std::span<const ad::Expr> dropout_masks) {
    using namespace ad;
    Expr h = input;
    const int layers = static_cast<int>(vars.weights.size());
    for (int l = 0; l < layers; ++l) {
        h = add(matmul(h, vars.weights[l]), broadcast_row(vars.biases[l], h.rows()));
        if (l + 1 == layers) break; // output layer stays linear
        switch (meta.hidden_act) {
            case Activation::kIdentity: break;
            case Activation::kTanh: h = tanh_op(h); break;
            case Activation::kLeakyRelu: h = leaky_relu(h, meta.leaky_slope); break;
            case Activation::kSigmoid: h = sigmoid(h); break;
        }
        if (!dropout_masks.empty()) h = dropout_apply(h, dropout_masks[l]);
    }
    return h;
}

} // namespace dagwgan
