// SPDX-License-Identifier: Apache-2.0
//
// Experiment-grade evaluation: SHD summaries over repeated runs and
// dimension-wise probability between real and generated data.

#pragma once

#include "dagwgan/autoencoder.hpp"
#include "dagwgan/sem_synth.hpp"

#include <optional>
#include <utility>

namespace dagwgan {

struct RunSummary {
    std::vector<double> values; // raw per-seed values, retained
    double mean = 0.0;
    double std_dev = 0.0;       // sample std (n-1)
    double ci_halfwidth = 0.0;  // 1.96 * std / sqrt(n)
    bool degenerate = false;    // single value: ci defined as 0, flagged
};

RunSummary summarize_runs(const std::vector<double>& values);

struct DimProbReport {
    std::vector<std::pair<double, double>> points; // (real_mean, synth_mean) per dimension
    std::optional<double> correlation;             // Pearson across dimensions
    std::string note;                              // set when correlation is undefined
};

/// Per-column means of both matrices and their Pearson correlation across
/// dimensions. Zero variance in either mean vector leaves the correlation
/// undefined (reported via `note`).
DimProbReport dimension_wise_probability(const Tensor& real, const Tensor& synth);

/// Decoder as generator: draw Z ~ Normal(0, I) and decode. Continuous mode
/// returns samples; discrete mode returns probability rows.
Tensor generate_samples(const AeConfig& cfg, const AeParams& params, int n, Rng& rng);

/// Draw one category per node from probability rows; returns n x num_nodes codes.
IntMatrix sample_categories(const AeConfig& cfg, const Tensor& probability_rows, Rng& rng);

} // namespace dagwgan
