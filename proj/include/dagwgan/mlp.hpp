// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "dagwgan/expr.hpp"
#include "dagwgan/rng.hpp"
#include "dagwgan/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace dagwgan {

enum class Activation { kIdentity, kTanh, kLeakyRelu, kSigmoid };

/// Fully connected stack. Hidden layers get `hidden_act`; the output layer is
/// always linear. An empty layer list is the identity map.
struct MlpParams {
    std::vector<Tensor> weights; // layer l: in x out
    std::vector<Tensor> biases;  // 1 x out
    Activation hidden_act = Activation::kTanh;
    double leaky_slope = 0.2;

    int layer_count() const { return static_cast<int>(weights.size()); }
    void validate() const; // consecutive dims chain, entries finite
};

/// Xavier-uniform weights, zero biases. dims = {in, hidden..., out}.
MlpParams init_mlp(const std::vector<int>& dims, Activation hidden_act, Rng& rng);

/// Graph-side mirror of MlpParams.
struct MlpVars {
    std::vector<ad::Expr> weights;
    std::vector<ad::Expr> biases;

    std::vector<ad::Expr> all() const;
};

MlpVars make_mlp_vars(const std::string& prefix, const MlpParams& p);
void bind_mlp(ad::Bindings& b, const MlpVars& vars, const MlpParams& p);

/// rows x in -> rows x out. `dropout_masks`, when non-empty, must hold one
/// mask expression per hidden layer and is applied after the activation.
ad::Expr mlp_forward(const ad::Expr& input, const MlpVars& vars, const MlpParams& meta,
                     std::span<const ad::Expr> dropout_masks = {});

} // namespace dagwgan
