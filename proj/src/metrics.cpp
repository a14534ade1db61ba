// SPDX-License-Identifier: Apache-2.0
#include "dagwgan/metrics.hpp"

#include <cmath>

namespace dagwgan {

RunSummary summarize_runs(const std::vector<double>& values) {
    if (values.empty()) throw DataError("summarize_runs: empty value list");
    RunSummary s;
    s.values = values;
    const double n = static_cast<double>(values.size());
    for (double v : values) s.mean += v;
    s.mean /= n;
    if (values.size() == 1) {
        s.degenerate = true;
        return s;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std_dev = std::sqrt(ss / (n - 1.0));
    s.ci_halfwidth = 1.96 * s.std_dev / std::sqrt(n);
    return s;
}

DimProbReport dimension_wise_probability(const Tensor& real, const Tensor& synth) {
    if (real.cols() != synth.cols())
        throw DataError("dimension_wise_probability: column counts differ (" +
                        std::to_string(real.cols()) + " vs " + std::to_string(synth.cols()) +
                        ")");
    if (real.rows() == 0 || synth.rows() == 0)
        throw DataError("dimension_wise_probability: empty matrix");
    DimProbReport rep;
    const Eigen::Index k = real.cols();
    Eigen::VectorXd rm(k), sm(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        rm(j) = real.col(j).mean();
        sm(j) = synth.col(j).mean();
        rep.points.emplace_back(rm(j), sm(j));
    }
    const double mr = rm.mean(), ms = sm.mean();
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        sxy += (rm(j) - mr) * (sm(j) - ms);
        sxx += (rm(j) - mr) * (rm(j) - mr);
        syy += (sm(j) - ms) * (sm(j) - ms);
    }
    if (sxx == 0.0 || syy == 0.0) {
        rep.note = "correlation undefined: zero variance in " +
                   std::string(sxx == 0.0 ? "real" : "synthetic") + " dimension means";
        return rep;
    }
    rep.correlation = sxy / std::sqrt(sxx * syy);
    return rep;
}

Tensor generate_samples(const AeConfig& cfg, const AeParams& params, int n, Rng& rng) {
    if (n < 0) throw DataError("generate_samples: n must be >= 0");
    if (params.A.rows() != cfg.num_nodes || params.A.cols() != cfg.num_nodes)
        throw EvalError("generate_samples: model not initialized (adjacency shape mismatch)");
    if (n == 0) return Tensor(0, cfg.width());
    Tensor z(n, cfg.width());
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
    return decode(cfg, params, z);
}

IntMatrix sample_categories(const AeConfig& cfg, const Tensor& probability_rows, Rng& rng) {
    if (cfg.data_mode != DataMode::kDiscrete)
        throw DataError("sample_categories: discrete mode only");
    if (probability_rows.cols() != cfg.width())
        throw ShapeError("sample_categories: row width mismatch");
    const int n = static_cast<int>(probability_rows.rows());
    IntMatrix codes(n, cfg.num_nodes);
    for (int i = 0; i < n; ++i) {
        Rng stream = rng.split(static_cast<std::uint64_t>(i));
        for (int j = 0; j < cfg.num_nodes; ++j) {
            const int card =
                cfg.cardinalities.empty() ? cfg.node_dim : cfg.cardinalities[j];
            double u = stream.uniform();
            double acc = 0.0;
            int code = card - 1;
            for (int c = 0; c < card; ++c) {
                acc += probability_rows(i, j * cfg.node_dim + c);
                if (u < acc) {
                    code = c;
                    break;
                }
            }
            codes(i, j) = code;
        }
    }
    return codes;
}

} // namespace dagwgan
