// SPDX-License-Identifier: Apache-2.0
//
// File formats: data CSV, one-hot encoding for discrete data, graph files,
// dataset manifests, train config files, model checkpoints, history CSV and
// the scatter SVG.

#pragma once

#include "dagwgan/metrics.hpp"
#include "dagwgan/sem_synth.hpp"
#include "dagwgan/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dagwgan {

namespace fs = std::filesystem;

// ---- data CSV (header row + numeric cells) ----

Tensor load_continuous(const fs::path& csv);
void save_continuous(const fs::path& csv, const Tensor& data,
                     const std::vector<std::string>& header = {});

IntMatrix load_codes(const fs::path& csv);
void save_codes(const fs::path& csv, const IntMatrix& codes,
                const std::vector<std::string>& header = {});

/// One variable per node expanded to a one-hot block of width
/// max(cardinalities); padding positions are always zero.
Tensor onehot_encode(const IntMatrix& codes, const std::vector<int>& cardinalities);
IntMatrix onehot_decode(const Tensor& onehot, const std::vector<int>& cardinalities);

/// Codes CSV -> one-hot matrix; out-of-range codes are reported with cell
/// coordinates.
Tensor load_discrete(const fs::path& csv, const std::vector<int>& cardinalities);

// ---- graph files ----

enum class GraphFormat { kEdgeList, kAdjacencyCsv };

/// .csv selects the dense adjacency format, anything else the edge list.
GraphFormat graph_format_for(const fs::path& p);

void save_weighted_graph(const fs::path& p, const Tensor& weighted, GraphFormat fmt);
void save_dag(const fs::path& p, const BinaryDag& dag, GraphFormat fmt); // weights 1.0

/// Edge-list node count is inferred as max index + 1 unless m_hint is larger.
Tensor load_weighted_graph(const fs::path& p, GraphFormat fmt, int m_hint = 0);
/// Additionally validates: no self-loops, no duplicates, acyclic.
BinaryDag load_dag(const fs::path& p, GraphFormat fmt, int m_hint = 0);

// ---- dataset manifest (JSON) ----

struct BnProvenance {
    int m = 0;
    double expected_degree = 3.0;
    int cardinality = 3;
    double sharpen = 2.0;
    std::uint64_t seed = 0;
};

struct DatasetManifest {
    std::string data_csv; // relative to the manifest's directory
    DataMode data_mode = DataMode::kContinuous;
    int num_nodes = 0;
    int n = 0;
    std::vector<int> cardinalities; // discrete mode
    std::string truth_graph;        // optional, relative path

    // provenance: present for synthetic data, enough to regenerate exactly
    enum class Provenance { kNone, kSem, kDiscreteBn } provenance = Provenance::kNone;
    SemSpec sem;
    BnProvenance bn;

    fs::path dir; // set on load; resolves relative paths
    fs::path resolve(const std::string& rel) const { return rel.empty() ? fs::path{} : dir / rel; }
};

void save_manifest(const fs::path& p, const DatasetManifest& m);
DatasetManifest load_manifest(const fs::path& p);

/// Loads the data matrix a manifest points at (one-hot encoded in discrete
/// mode).
Tensor load_dataset(const DatasetManifest& m);

// ---- train config file ----

/// Flat `key = value` lines, '#' comments. Keys mirror TrainConfig field
/// names plus documented model keys; unknown keys are errors. Model shape
/// (num_nodes, node_dim, data_mode, cardinalities) comes from the manifest.
ExperimentConfig load_experiment_config(const fs::path& p, const DatasetManifest& manifest);
ExperimentConfig experiment_config_for(const DatasetManifest& manifest); // defaults only

// ---- checkpoint ----

struct Checkpoint {
    AeConfig ae_cfg;
    CriticConfig critic_cfg;
    AeParams ae;
    CriticParams critic;
    AugLagState auglag;
    AdamState ae_adam, critic_adam;
    double edge_tau = 0.3;
    double alpha = 0.0; // 0 = default 1/num_nodes
    std::uint64_t seed = 0;
    bool converged = true;
};

/// Versioned little-endian binary container; save/load round-trips all
/// parameters bit-exactly.
void save_checkpoint(const fs::path& p, const Checkpoint& c);
Checkpoint load_checkpoint(const fs::path& p);

// ---- reports ----

void save_history_csv(const fs::path& p, const std::vector<EpochRecord>& history);
void save_run_summary_csv(const fs::path& p, const RunSummary& s);

/// Scatter of (real, synthetic) dimension means with the diagonal reference.
void write_scatter_svg(const fs::path& p, const DimProbReport& report);

} // namespace dagwgan
