// SPDX-License-Identifier: Apache-2.0
#include "dagwgan/data_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dagwgan {

namespace {

using nlohmann::json;

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open file: " + p.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_double(const std::string& cell, std::size_t line_no, std::size_t col_no) {
    const char* b = cell.data();
    const char* e = b + cell.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
    double v = 0.0;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc{} || res.ptr != e)
        throw DataError("non-numeric cell '" + cell + "' at line " + std::to_string(line_no) +
                        ", column " + std::to_string(col_no));
    return v;
}

long parse_int(const std::string& cell, std::size_t line_no, std::size_t col_no) {
    double v = parse_double(cell, line_no, col_no);
    long iv = static_cast<long>(v);
    if (static_cast<double>(iv) != v)
        throw DataError("non-integer cell '" + cell + "' at line " + std::to_string(line_no) +
                        ", column " + std::to_string(col_no));
    return iv;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

// ---- data CSV ----

Tensor load_continuous(const fs::path& csv) {
    auto lines = read_lines(csv);
    if (lines.empty()) throw DataError("empty file: " + csv.string());
    if (lines.size() < 2)
        throw DataError("no data rows after the header in " + csv.string());
    const std::size_t cols = split_csv(lines[0]).size();
    Tensor out(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split_csv(lines[i]);
        if (cells.size() != cols)
            throw DataError("ragged row at line " + std::to_string(i + 1) + " of " +
                            csv.string() + ": " + std::to_string(cells.size()) +
                            " cells, expected " + std::to_string(cols));
        for (std::size_t j = 0; j < cols; ++j)
            out(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) =
                parse_double(cells[j], i + 1, j + 1);
    }
    ensure_finite(out, "data loaded from " + csv.string());
    return out;
}

void save_continuous(const fs::path& csv, const Tensor& data,
                     const std::vector<std::string>& header) {
    std::ofstream out(csv);
    if (!out) throw DataError("cannot write file: " + csv.string());
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        if (j) out << ',';
        out << (header.empty() ? "x" + std::to_string(j) : header[static_cast<size_t>(j)]);
    }
    out << '\n';
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.cols(); ++j) {
            if (j) out << ',';
            out << fmt17(data(i, j));
        }
        out << '\n';
    }
}

IntMatrix load_codes(const fs::path& csv) {
    auto lines = read_lines(csv);
    if (lines.empty()) throw DataError("empty file: " + csv.string());
    if (lines.size() < 2)
        throw DataError("no data rows after the header in " + csv.string());
    const std::size_t cols = split_csv(lines[0]).size();
    IntMatrix out(static_cast<Eigen::Index>(lines.size() - 1), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split_csv(lines[i]);
        if (cells.size() != cols)
            throw DataError("ragged row at line " + std::to_string(i + 1) + " of " +
                            csv.string());
        for (std::size_t j = 0; j < cols; ++j)
            out(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j)) =
                static_cast<int>(parse_int(cells[j], i + 1, j + 1));
    }
    return out;
}

void save_codes(const fs::path& csv, const IntMatrix& codes,
                const std::vector<std::string>& header) {
    std::ofstream out(csv);
    if (!out) throw DataError("cannot write file: " + csv.string());
    for (Eigen::Index j = 0; j < codes.cols(); ++j) {
        if (j) out << ',';
        out << (header.empty() ? "x" + std::to_string(j) : header[static_cast<size_t>(j)]);
    }
    out << '\n';
    for (Eigen::Index i = 0; i < codes.rows(); ++i) {
        for (Eigen::Index j = 0; j < codes.cols(); ++j) {
            if (j) out << ',';
            out << codes(i, j);
        }
        out << '\n';
    }
}

Tensor onehot_encode(const IntMatrix& codes, const std::vector<int>& cardinalities) {
    const int m = static_cast<int>(codes.cols());
    if (static_cast<int>(cardinalities.size()) != m)
        throw DataError("onehot_encode: cardinalities size != column count");
    const int d = *std::max_element(cardinalities.begin(), cardinalities.end());
    Tensor out = Tensor::Zero(codes.rows(), static_cast<Eigen::Index>(m) * d);
    for (Eigen::Index i = 0; i < codes.rows(); ++i)
        for (int j = 0; j < m; ++j) {
            int c = codes(i, j);
            if (c < 0 || c >= cardinalities[j])
                throw DataError("code " + std::to_string(c) + " out of range for cardinality " +
                                std::to_string(cardinalities[j]) + " at row " +
                                std::to_string(i + 1) + ", column " + std::to_string(j + 1));
            out(i, static_cast<Eigen::Index>(j) * d + c) = 1.0;
        }
    return out;
}

IntMatrix onehot_decode(const Tensor& onehot, const std::vector<int>& cardinalities) {
    const int m = static_cast<int>(cardinalities.size());
    const int d = *std::max_element(cardinalities.begin(), cardinalities.end());
    if (onehot.cols() != static_cast<Eigen::Index>(m) * d)
        throw ShapeError("onehot_decode: width mismatch");
    IntMatrix codes(onehot.rows(), m);
    for (Eigen::Index i = 0; i < onehot.rows(); ++i)
        for (int j = 0; j < m; ++j) {
            int best = 0;
            double best_v = -1.0;
            for (int c = 0; c < cardinalities[j]; ++c) {
                double v = onehot(i, static_cast<Eigen::Index>(j) * d + c);
                if (v > best_v) {
                    best_v = v;
                    best = c;
                }
            }
            codes(i, j) = best;
        }
    return codes;
}

Tensor load_discrete(const fs::path& csv, const std::vector<int>& cardinalities) {
    return onehot_encode(load_codes(csv), cardinalities);
}

// ---- graph files ----

GraphFormat graph_format_for(const fs::path& p) {
    return p.extension() == ".csv" ? GraphFormat::kAdjacencyCsv : GraphFormat::kEdgeList;
}

void save_weighted_graph(const fs::path& p, const Tensor& weighted, GraphFormat fmt) {
    if (weighted.rows() != weighted.cols())
        throw ShapeError("save_weighted_graph: matrix not square");
    std::ofstream out(p);
    if (!out) throw DataError("cannot write file: " + p.string());
    if (fmt == GraphFormat::kAdjacencyCsv) {
        for (Eigen::Index i = 0; i < weighted.rows(); ++i) {
            for (Eigen::Index j = 0; j < weighted.cols(); ++j) {
                if (j) out << ',';
                out << fmt17(weighted(i, j));
            }
            out << '\n';
        }
    } else {
        for (Eigen::Index i = 0; i < weighted.rows(); ++i)
            for (Eigen::Index j = 0; j < weighted.cols(); ++j)
                if (weighted(i, j) != 0.0)
                    out << i << ' ' << j << ' ' << fmt17(weighted(i, j)) << '\n';
    }
}

void save_dag(const fs::path& p, const BinaryDag& dag, GraphFormat fmt) {
    Tensor t = Tensor::Zero(dag.m, dag.m);
    for (const auto& [u, v] : dag.edges) t(u, v) = 1.0;
    save_weighted_graph(p, t, fmt);
}

Tensor load_weighted_graph(const fs::path& p, GraphFormat fmt, int m_hint) {
    if (fmt == GraphFormat::kAdjacencyCsv) {
        auto lines = read_lines(p);
        if (lines.empty()) throw DataError("empty graph file: " + p.string());
        const std::size_t m = lines.size();
        Tensor out(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i) {
            auto cells = split_csv(lines[i]);
            if (cells.size() != m)
                throw DataError("adjacency CSV is not square at line " + std::to_string(i + 1) +
                                " of " + p.string());
            for (std::size_t j = 0; j < m; ++j)
                out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    parse_double(cells[j], i + 1, j + 1);
        }
        return out;
    }
    // edge list
    auto lines = read_lines(p);
    struct E {
        int u, v;
        double w;
    };
    std::vector<E> es;
    int max_node = -1;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::istringstream ss(lines[i]);
        long u, v;
        double w;
        if (!(ss >> u >> v >> w))
            throw DataError("malformed edge at line " + std::to_string(i + 1) + " of " +
                            p.string() + " (expected 'i j weight')");
        std::string rest;
        if (ss >> rest)
            throw DataError("trailing tokens at line " + std::to_string(i + 1) + " of " +
                            p.string());
        if (u < 0 || v < 0)
            throw DataError("negative node index at line " + std::to_string(i + 1) + " of " +
                            p.string());
        es.push_back({static_cast<int>(u), static_cast<int>(v), w});
        max_node = std::max({max_node, static_cast<int>(u), static_cast<int>(v)});
    }
    int m = std::max(m_hint, max_node + 1);
    if (m == 0) throw DataError("empty edge list and no node-count hint: " + p.string());
    Tensor out = Tensor::Zero(m, m);
    for (const auto& e : es) {
        if (out(e.u, e.v) != 0.0)
            throw DataError("duplicate edge " + std::to_string(e.u) + " -> " +
                            std::to_string(e.v) + " in " + p.string());
        out(e.u, e.v) = e.w;
    }
    return out;
}

BinaryDag load_dag(const fs::path& p, GraphFormat fmt, int m_hint) {
    Tensor t = load_weighted_graph(p, fmt, m_hint);
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        if (t(i, i) != 0.0)
            throw DataError("self-loop at node " + std::to_string(i) +
                            " in a file declared as DAG: " + p.string());
    return make_dag(static_cast<int>(t.rows()), threshold_graph(t, 0.0));
}

// ---- manifest ----

void save_manifest(const fs::path& p, const DatasetManifest& m) {
    json j;
    j["data_csv"] = m.data_csv;
    j["data_mode"] = m.data_mode == DataMode::kDiscrete ? "discrete" : "continuous";
    j["num_nodes"] = m.num_nodes;
    j["n"] = m.n;
    if (!m.cardinalities.empty()) j["cardinalities"] = m.cardinalities;
    if (!m.truth_graph.empty()) j["truth_graph"] = m.truth_graph;
    if (m.provenance == DatasetManifest::Provenance::kSem) {
        j["provenance"] = {{"kind", "sem"},
                           {"seed", m.sem.seed},
                           {"variant", sem_variant_name(m.sem.variant)},
                           {"m", m.sem.m},
                           {"expected_degree", m.sem.expected_degree},
                           {"noise_std", m.sem.noise_std},
                           {"weight_low", m.sem.weight_low},
                           {"weight_high", m.sem.weight_high}};
    } else if (m.provenance == DatasetManifest::Provenance::kDiscreteBn) {
        j["provenance"] = {{"kind", "discrete_bn"},
                           {"seed", m.bn.seed},
                           {"m", m.bn.m},
                           {"expected_degree", m.bn.expected_degree},
                           {"cardinality", m.bn.cardinality},
                           {"sharpen", m.bn.sharpen}};
    }
    std::ofstream out(p);
    if (!out) throw DataError("cannot write manifest: " + p.string());
    out << j.dump(2) << '\n';
}

DatasetManifest load_manifest(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw DataError("cannot open manifest: " + p.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("malformed manifest " + p.string() + ": " + e.what());
    }
    DatasetManifest m;
    try {
        m.data_csv = j.at("data_csv").get<std::string>();
        std::string mode = j.at("data_mode").get<std::string>();
        if (mode == "discrete")
            m.data_mode = DataMode::kDiscrete;
        else if (mode == "continuous")
            m.data_mode = DataMode::kContinuous;
        else
            throw DataError("manifest data_mode must be continuous|discrete");
        m.num_nodes = j.at("num_nodes").get<int>();
        m.n = j.at("n").get<int>();
        if (j.contains("cardinalities"))
            m.cardinalities = j["cardinalities"].get<std::vector<int>>();
        if (j.contains("truth_graph")) m.truth_graph = j["truth_graph"].get<std::string>();
        if (j.contains("provenance")) {
            const auto& pr = j["provenance"];
            std::string kind = pr.at("kind").get<std::string>();
            if (kind == "sem") {
                m.provenance = DatasetManifest::Provenance::kSem;
                m.sem.seed = pr.at("seed").get<std::uint64_t>();
                m.sem.variant = sem_variant_from(pr.at("variant").get<std::string>());
                m.sem.m = pr.at("m").get<int>();
                m.sem.expected_degree = pr.at("expected_degree").get<double>();
                m.sem.noise_std = pr.at("noise_std").get<double>();
                m.sem.weight_low = pr.at("weight_low").get<double>();
                m.sem.weight_high = pr.at("weight_high").get<double>();
            } else if (kind == "discrete_bn") {
                m.provenance = DatasetManifest::Provenance::kDiscreteBn;
                m.bn.seed = pr.at("seed").get<std::uint64_t>();
                m.bn.m = pr.at("m").get<int>();
                m.bn.expected_degree = pr.at("expected_degree").get<double>();
                m.bn.cardinality = pr.at("cardinality").get<int>();
                m.bn.sharpen = pr.at("sharpen").get<double>();
            } else {
                throw DataError("manifest provenance kind unknown: " + kind);
            }
        }
    } catch (const json::exception& e) {
        throw DataError("manifest " + p.string() + " missing fields: " + e.what());
    }
    m.dir = p.parent_path();
    if (m.data_mode == DataMode::kDiscrete && m.cardinalities.empty())
        throw DataError("discrete manifest must list cardinalities");
    return m;
}

Tensor load_dataset(const DatasetManifest& m) {
    fs::path data = m.resolve(m.data_csv);
    Tensor X = m.data_mode == DataMode::kDiscrete
                   ? load_discrete(data, m.cardinalities)
                   : load_continuous(data);
    const int d = m.data_mode == DataMode::kDiscrete
                      ? *std::max_element(m.cardinalities.begin(), m.cardinalities.end())
                      : 1;
    if (X.cols() != static_cast<Eigen::Index>(m.num_nodes) * d)
        throw DataError("dataset width " + std::to_string(X.cols()) +
                        " does not match manifest num_nodes=" + std::to_string(m.num_nodes));
    if (m.n != 0 && X.rows() != m.n)
        throw DataError("dataset has " + std::to_string(X.rows()) +
                        " rows, manifest declares " + std::to_string(m.n));
    return X;
}

// ---- train config ----

ExperimentConfig experiment_config_for(const DatasetManifest& manifest) {
    ExperimentConfig cfg;
    cfg.ae.num_nodes = manifest.num_nodes;
    cfg.ae.data_mode = manifest.data_mode;
    if (manifest.data_mode == DataMode::kDiscrete) {
        cfg.ae.node_dim = *std::max_element(manifest.cardinalities.begin(),
                                            manifest.cardinalities.end());
        cfg.ae.cardinalities = manifest.cardinalities;
        cfg.ae.node_bias = true;
        cfg.ae.hidden_dims = {64};
    } else {
        cfg.ae.node_dim = 1;
    }
    return cfg;
}

namespace {

std::vector<int> parse_int_list(const std::string& v, const std::string& key) {
    std::vector<int> out;
    if (v.empty()) return out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        try {
            out.push_back(std::stoi(cur));
        } catch (...) {
            throw DataError("config key '" + key + "': bad integer '" + cur + "'");
        }
        cur.clear();
    };
    for (char c : v) {
        if (c == ',')
            flush();
        else if (!isspace(static_cast<unsigned char>(c)))
            cur += c;
    }
    flush();
    return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw DataError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

} // namespace

ExperimentConfig load_experiment_config(const fs::path& p, const DatasetManifest& manifest) {
    ExperimentConfig cfg = experiment_config_for(manifest);
    auto lines = read_lines(p);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = lines[i];
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        auto notblank = [](char c) { return !isspace(static_cast<unsigned char>(c)); };
        line.erase(line.begin(), std::find_if(line.begin(), line.end(), notblank));
        line.erase(std::find_if(line.rbegin(), line.rend(), notblank).base(), line.end());
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config line " + std::to_string(i + 1) +
                            ": expected 'key = value'");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        key.erase(std::find_if(key.rbegin(), key.rend(), notblank).base(), key.end());
        val.erase(val.begin(), std::find_if(val.begin(), val.end(), notblank));

        auto as_int = [&] {
            try {
                return std::stoi(val);
            } catch (...) {
                throw DataError("config key '" + key + "': bad integer '" + val + "'");
            }
        };
        auto as_double = [&]() -> double {
            try {
                return std::stod(val);
            } catch (...) {
                throw DataError("config key '" + key + "': bad number '" + val + "'");
            }
        };

        TrainConfig& t = cfg.train;
        if (key == "epochs_per_outer") t.epochs_per_outer = as_int();
        else if (key == "max_outer_iters") t.max_outer_iters = as_int();
        else if (key == "n_critic") t.n_critic = as_int();
        else if (key == "batch_size") t.batch_size = as_int();
        else if (key == "lr") t.lr = as_double();
        else if (key == "lr_decay") t.lr_decay = as_double();
        else if (key == "h_tolerance") t.h_tolerance = as_double();
        else if (key == "rho_max") t.rho_max = as_double();
        else if (key == "seed") t.seed = static_cast<std::uint64_t>(std::stoull(val));
        else if (key == "standardize_flag") t.standardize = parse_bool(val, key);
        else if (key == "gen_loss_weight") t.gen_loss_weight = as_double();
        else if (key == "ae_hidden") cfg.ae.hidden_dims = parse_int_list(val, key);
        else if (key == "node_bias") cfg.ae.node_bias = parse_bool(val, key);
        else if (key == "a_random_init") cfg.ae.a_random_init = parse_bool(val, key);
        else if (key == "critic_hidden") cfg.critic.hidden_dims = parse_int_list(val, key);
        else if (key == "pac") cfg.critic.pac = as_int();
        else if (key == "leaky_slope") cfg.critic.leaky_slope = as_double();
        else if (key == "dropout_p") cfg.critic.dropout_p = as_double();
        else if (key == "gp_lambda") cfg.critic.gp_lambda = as_double();
        else if (key == "dropout_in_penalty") cfg.critic.dropout_in_penalty = parse_bool(val, key);
        else if (key == "alpha") cfg.acyclicity_alpha = as_double();
        else if (key == "edge_tau") cfg.edge_tau = as_double();
        else if (key == "ae_only") cfg.ae_only = parse_bool(val, key);
        else if (key == "fake_from_reconstruction")
            cfg.fake_from_reconstruction = parse_bool(val, key);
        else
            throw DataError("unknown config key '" + key + "' at line " + std::to_string(i + 1) +
                            " of " + p.string());
    }
    cfg.validate();
    return cfg;
}

// ---- checkpoint ----

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x44574743; // "DWGC"
constexpr std::uint32_t kCheckpointVersion = 1;

struct Writer {
    std::ofstream out;
    explicit Writer(const fs::path& p) : out(p, std::ios::binary) {
        if (!out) throw DataError("cannot write checkpoint: " + p.string());
    }
    void raw(const void* data, std::size_t bytes) {
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    }
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void i64(std::int64_t v) { raw(&v, 8); }
    void f64(double v) { raw(&v, 8); }
    void b8(bool v) {
        std::uint8_t b = v ? 1 : 0;
        raw(&b, 1);
    }
    void ivec(const std::vector<int>& v) {
        u64(v.size());
        for (int x : v) i64(x);
    }
    void tensor(const Tensor& t) {
        i64(t.rows());
        i64(t.cols());
        raw(t.data(), sizeof(double) * static_cast<std::size_t>(t.size()));
    }
    void mlp(const MlpParams& p) {
        u64(p.weights.size());
        u32(static_cast<std::uint32_t>(p.hidden_act));
        f64(p.leaky_slope);
        for (size_t l = 0; l < p.weights.size(); ++l) {
            tensor(p.weights[l]);
            tensor(p.biases[l]);
        }
    }
    void adam(const AdamState& a) {
        i64(a.step);
        f64(a.lr);
        f64(a.cfg.beta1);
        f64(a.cfg.beta2);
        f64(a.cfg.eps);
        u64(a.m.size());
        for (const auto& t : a.m) tensor(t);
        for (const auto& t : a.v) tensor(t);
    }
};

struct Reader {
    std::ifstream in;
    fs::path path;
    explicit Reader(const fs::path& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw DataError("cannot open checkpoint: " + p.string());
    }
    void raw(void* data, std::size_t bytes) {
        in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
        if (!in) throw DataError("truncated checkpoint: " + path.string());
    }
    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        raw(&v, 8);
        return v;
    }
    std::int64_t i64() {
        std::int64_t v;
        raw(&v, 8);
        return v;
    }
    double f64() {
        double v;
        raw(&v, 8);
        return v;
    }
    bool b8() {
        std::uint8_t b;
        raw(&b, 1);
        return b != 0;
    }
    std::vector<int> ivec() {
        std::vector<int> v(u64());
        for (auto& x : v) x = static_cast<int>(i64());
        return v;
    }
    Tensor tensor() {
        std::int64_t r = i64(), c = i64();
        if (r < 0 || c < 0 || r * c > (1LL << 32))
            throw DataError("corrupt tensor header in checkpoint: " + path.string());
        Tensor t(r, c);
        raw(t.data(), sizeof(double) * static_cast<std::size_t>(t.size()));
        return t;
    }
    MlpParams mlp() {
        MlpParams p;
        std::uint64_t layers = u64();
        p.hidden_act = static_cast<Activation>(u32());
        p.leaky_slope = f64();
        for (std::uint64_t l = 0; l < layers; ++l) {
            p.weights.push_back(tensor());
            p.biases.push_back(tensor());
        }
        return p;
    }
    AdamState adam() {
        AdamState a;
        a.step = i64();
        a.lr = f64();
        a.cfg.beta1 = f64();
        a.cfg.beta2 = f64();
        a.cfg.eps = f64();
        std::uint64_t k = u64();
        for (std::uint64_t i = 0; i < k; ++i) a.m.push_back(tensor());
        for (std::uint64_t i = 0; i < k; ++i) a.v.push_back(tensor());
        return a;
    }
};

} // namespace

void save_checkpoint(const fs::path& p, const Checkpoint& c) {
    Writer w(p);
    w.u32(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    // AeConfig
    w.i64(c.ae_cfg.num_nodes);
    w.i64(c.ae_cfg.node_dim);
    w.b8(c.ae_cfg.data_mode == DataMode::kDiscrete);
    w.b8(c.ae_cfg.node_bias);
    w.b8(c.ae_cfg.a_random_init);
    w.ivec(c.ae_cfg.hidden_dims);
    w.ivec(c.ae_cfg.cardinalities);
    // CriticConfig
    w.i64(c.critic_cfg.pac);
    w.ivec(c.critic_cfg.hidden_dims);
    w.f64(c.critic_cfg.leaky_slope);
    w.f64(c.critic_cfg.dropout_p);
    w.f64(c.critic_cfg.gp_lambda);
    w.b8(c.critic_cfg.dropout_in_penalty);
    // run metadata
    w.f64(c.edge_tau);
    w.f64(c.alpha);
    w.u64(c.seed);
    w.b8(c.converged);
    // parameters
    w.tensor(c.ae.A);
    w.mlp(c.ae.f1);
    w.mlp(c.ae.f2);
    w.tensor(c.ae.node_bias);
    w.mlp(c.critic.mlp);
    // training state
    w.f64(c.auglag.multiplier);
    w.f64(c.auglag.rho);
    w.f64(c.auglag.h_prev);
    w.i64(c.auglag.outer_iter);
    w.adam(c.ae_adam);
    w.adam(c.critic_adam);
}

Checkpoint load_checkpoint(const fs::path& p) {
    Reader r(p);
    if (r.u32() != kCheckpointMagic)
        throw DataError("not a checkpoint file: " + p.string());
    std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version) + " in " +
                        p.string());
    Checkpoint c;
    c.ae_cfg.num_nodes = static_cast<int>(r.i64());
    c.ae_cfg.node_dim = static_cast<int>(r.i64());
    c.ae_cfg.data_mode = r.b8() ? DataMode::kDiscrete : DataMode::kContinuous;
    c.ae_cfg.node_bias = r.b8();
    c.ae_cfg.a_random_init = r.b8();
    c.ae_cfg.hidden_dims = r.ivec();
    c.ae_cfg.cardinalities = r.ivec();
    c.critic_cfg.pac = static_cast<int>(r.i64());
    c.critic_cfg.hidden_dims = r.ivec();
    c.critic_cfg.leaky_slope = r.f64();
    c.critic_cfg.dropout_p = r.f64();
    c.critic_cfg.gp_lambda = r.f64();
    c.critic_cfg.dropout_in_penalty = r.b8();
    c.edge_tau = r.f64();
    c.alpha = r.f64();
    c.seed = r.u64();
    c.converged = r.b8();
    c.ae.A = r.tensor();
    c.ae.f1 = r.mlp();
    c.ae.f2 = r.mlp();
    c.ae.node_bias = r.tensor();
    c.critic.mlp = r.mlp();
    c.auglag.multiplier = r.f64();
    c.auglag.rho = r.f64();
    c.auglag.h_prev = r.f64();
    c.auglag.outer_iter = static_cast<int>(r.i64());
    c.ae_adam = r.adam();
    c.critic_adam = r.adam();
    return c;
}

// ---- reports ----

void save_history_csv(const fs::path& p, const std::vector<EpochRecord>& history) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot write history: " + p.string());
    out << "outer_iter,epoch,L_D,L_G,L_R,h,lr,multiplier,rho\n";
    for (const auto& r : history)
        out << r.outer << ',' << r.epoch << ',' << fmt17(r.loss_d) << ',' << fmt17(r.loss_g)
            << ',' << fmt17(r.loss_r) << ',' << fmt17(r.h) << ',' << fmt17(r.lr) << ','
            << fmt17(r.multiplier) << ',' << fmt17(r.rho) << '\n';
}

void save_run_summary_csv(const fs::path& p, const RunSummary& s) {
    std::ofstream out(p);
    if (!out) throw DataError("cannot write summary: " + p.string());
    out << "index,shd\n";
    for (std::size_t i = 0; i < s.values.size(); ++i)
        out << i << ',' << fmt17(s.values[i]) << '\n';
    out << "mean," << fmt17(s.mean) << '\n';
    out << "std," << fmt17(s.std_dev) << '\n';
    out << "ci95_halfwidth," << fmt17(s.ci_halfwidth) << '\n';
}

void write_scatter_svg(const fs::path& p, const DimProbReport& report) {
    const double size = 560, margin = 50;
    const double plot = size - 2 * margin;
    double hi = 1.0;
    for (const auto& [x, y] : report.points) hi = std::max({hi, x, y});
    hi *= 1.05;
    auto sx = [&](double x) { return margin + plot * (x / hi); };
    auto sy = [&](double y) { return size - margin - plot * (y / hi); };

    std::ofstream out(p);
    if (!out) throw DataError("cannot write SVG: " + p.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\""
        << size << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "  <rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot
        << "\" height=\"" << plot << "\" fill=\"none\" stroke=\"#444\"/>\n";
    // ideal scenario: the diagonal
    out << "  <line x1=\"" << sx(0) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(hi) << "\" y2=\""
        << sy(hi) << "\" stroke=\"#999\" stroke-dasharray=\"6 4\"/>\n";
    for (const auto& [x, y] : report.points)
        out << "  <circle cx=\"" << sx(x) << "\" cy=\"" << sy(y)
            << "\" r=\"3.5\" fill=\"#1f77b4\" fill-opacity=\"0.8\"/>\n";
    out << "  <text x=\"" << size / 2 << "\" y=\"" << size - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
        << "real dimension mean</text>\n";
    out << "  <text x=\"16\" y=\"" << size / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
        << "transform=\"rotate(-90 16 " << size / 2 << ")\">synthetic dimension mean</text>\n";
    if (report.correlation)
        out << "  <text x=\"" << margin + 8 << "\" y=\"" << margin - 10
            << "\" font-family=\"sans-serif\" font-size=\"14\">correlation = "
            << *report.correlation << "</text>\n";
    else
        out << "  <text x=\"" << margin + 8 << "\" y=\"" << margin - 10
            << "\" font-family=\"sans-serif\" font-size=\"14\">" << report.note << "</text>\n";
    out << "</svg>\n";
}

} // namespace dagwgan
