// SPDX-License-Identifier: Apache-2.0
#include "dagwgan/cli.hpp"

#include "dagwgan/data_io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace dagwgan {

namespace {

int cmd_simulate(const std::string& variant, int m, int n, double degree, std::uint64_t seed,
                 std::string out_dir, double noise_std, double wlow, double whigh,
                 int cardinality, double sharpen) {
    if (out_dir.empty()) {
        const char* env = std::getenv("DAGWGAN_OUT_DIR");
        if (!env || !*env)
            throw DataError("no --out-dir given and DAGWGAN_OUT_DIR is not set");
        out_dir = env;
    }
    fs::create_directories(out_dir);
    fs::path dir(out_dir);

    DatasetManifest manifest;
    manifest.num_nodes = m;
    manifest.n = n;
    manifest.truth_graph = "truth.edges";

    if (variant == "discrete") {
        Rng rng(seed);
        DiscreteBnSpec spec = random_discrete_bn(m, degree, cardinality, rng, sharpen);
        Rng sample_rng = rng.split(77);
        IntMatrix codes = sample_discrete_bn(spec, n, sample_rng);
        save_codes(dir / "codes.csv", codes);
        save_dag(dir / "truth.edges", spec.dag, GraphFormat::kEdgeList);
        save_dag(dir / "truth_adjacency.csv", spec.dag, GraphFormat::kAdjacencyCsv);
        manifest.data_csv = "codes.csv";
        manifest.data_mode = DataMode::kDiscrete;
        manifest.cardinalities = spec.cardinalities;
        manifest.provenance = DatasetManifest::Provenance::kDiscreteBn;
        manifest.bn = BnProvenance{m, degree, cardinality, sharpen, seed};
    } else {
        SemSpec spec;
        spec.m = m;
        spec.variant = sem_variant_from(variant);
        spec.noise_std = noise_std;
        spec.weight_low = wlow;
        spec.weight_high = whigh;
        spec.expected_degree = degree;
        spec.seed = seed;
        SemDraw draw = simulate_sem(spec, n);
        save_continuous(dir / "data.csv", draw.data);
        save_weighted_graph(dir / "truth.edges", draw.weights, GraphFormat::kEdgeList);
        save_weighted_graph(dir / "truth_adjacency.csv", draw.weights,
                            GraphFormat::kAdjacencyCsv);
        manifest.data_csv = "data.csv";
        manifest.data_mode = DataMode::kContinuous;
        manifest.provenance = DatasetManifest::Provenance::kSem;
        manifest.sem = spec;
    }
    save_manifest(dir / "manifest.json", manifest);
    std::cout << "wrote " << (dir / "manifest.json").string() << "\n";
    return 0;
}

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::string& out_path) {
    DatasetManifest manifest = load_manifest(data_path);
    ExperimentConfig cfg = config_path.empty()
                               ? experiment_config_for(manifest)
                               : load_experiment_config(config_path, manifest);
    Tensor X = load_dataset(manifest);

    fs::path out(out_path);
    if (out.parent_path() != fs::path() ) fs::create_directories(out.parent_path());

    auto make_ckpt = [&](const Trainer& t, bool converged) {
        Checkpoint c;
        c.ae_cfg = cfg.ae;
        c.critic_cfg = cfg.critic;
        c.ae = t.ae_params();
        c.critic = t.critic_params();
        c.auglag = t.auglag();
        c.ae_adam = t.ae_adam();
        c.critic_adam = t.critic_adam();
        c.edge_tau = cfg.edge_tau;
        c.alpha = cfg.acyclicity_alpha;
        c.seed = cfg.train.seed;
        c.converged = converged;
        return c;
    };

    Trainer trainer(X, cfg);
    TrainResult result = trainer.run([&](int outer, const Trainer& t) {
        fs::path periodic = out;
        periodic += ".outer" + std::to_string(outer);
        save_checkpoint(periodic, make_ckpt(t, false));
    });

    save_checkpoint(out, make_ckpt(trainer, result.converged));
    fs::path hist = out;
    hist += ".history.csv";
    save_history_csv(hist, result.history);
    fs::path adj = out;
    adj += ".adjacency.csv";
    save_weighted_graph(adj, result.A, GraphFormat::kAdjacencyCsv);
    fs::path edges = out;
    edges += ".edges";
    Tensor learned = Tensor::Zero(result.A.rows(), result.A.cols());
    for (const auto& [u, v] : result.learned_edges) learned(u, v) = result.A(u, v);
    save_weighted_graph(edges, learned, GraphFormat::kEdgeList);

    std::cout << "final h = " << result.final_h << ", edges = " << result.learned_edges.size()
              << (result.converged ? "" : " (NOT converged)") << "\n";
    if (result.aborted)
        std::cerr << "training aborted: " << result.abort_reason
                  << " (last good parameters written)\n";
    return result.converged && !result.aborted ? 0 : 3;
}

/// loads a graph file; returns (edges, m)
std::pair<EdgeSet, int> load_eval_graph(const std::string& path) {
    GraphFormat fmt = graph_format_for(path);
    Tensor w = load_weighted_graph(path, fmt);
    return {threshold_graph(w, 0.0), static_cast<int>(w.rows())};
}

int cmd_evaluate(const std::string& learned_path, const std::string& truth_path,
                 const std::string& runs_dir, const std::string& out_csv) {
    auto [truth_edges, m_truth] = load_eval_graph(truth_path);
    if (runs_dir.empty()) {
        auto [learned_edges, m_learned] = load_eval_graph(learned_path);
        bool both_adj = graph_format_for(learned_path) == GraphFormat::kAdjacencyCsv &&
                        graph_format_for(truth_path) == GraphFormat::kAdjacencyCsv;
        if (both_adj && m_learned != m_truth)
            throw DataError("node counts differ: learned " + std::to_string(m_learned) +
                            " vs truth " + std::to_string(m_truth));
        int m = std::max(m_learned, m_truth);
        std::cout << "SHD " << shd(learned_edges, truth_edges, m) << "\n";
        return 0;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(runs_dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no run files in " + runs_dir);
    std::vector<double> shds;
    for (const auto& f : files) {
        auto [edges, m_learned] = load_eval_graph(f.string());
        int m = std::max(m_learned, m_truth);
        int v = shd(edges, truth_edges, m);
        std::cout << f.filename().string() << " SHD " << v << "\n";
        shds.push_back(v);
    }
    RunSummary s = summarize_runs(shds);
    std::cout << "mean " << s.mean << " std " << s.std_dev << " ci95 " << s.ci_halfwidth
              << "\n";
    if (!out_csv.empty()) save_run_summary_csv(out_csv, s);
    return 0;
}

int cmd_generate(const std::string& model_path, int n, std::uint64_t seed,
                 const std::string& out_path, bool sample_cats) {
    Checkpoint ckpt = load_checkpoint(model_path);
    Rng rng(seed);
    Tensor samples = generate_samples(ckpt.ae_cfg, ckpt.ae, n, rng);
    if (ckpt.ae_cfg.data_mode == DataMode::kDiscrete && sample_cats) {
        Rng cat_rng = rng.split(1);
        IntMatrix codes = sample_categories(ckpt.ae_cfg, samples, cat_rng);
        save_codes(out_path, codes);
    } else {
        save_continuous(out_path, samples);
    }
    std::cout << "wrote " << out_path << " (" << n << " samples)\n";
    return 0;
}

int cmd_dimprob(const std::string& real_path, const std::string& synth_path,
                const std::string& out_svg) {
    Tensor real = load_continuous(real_path);
    Tensor synth = load_continuous(synth_path);
    DimProbReport rep = dimension_wise_probability(real, synth);
    write_scatter_svg(out_svg, rep);
    if (rep.correlation)
        std::cout << "correlation " << *rep.correlation << "\n";
    else
        std::cout << rep.note << "\n";
    return 0;
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"DAG-WGAN: causal structure learning with a Wasserstein-critic autoencoder"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic benchmark dataset");
    std::string variant;
    int sim_m = 10, sim_n = 5000, cardinality = 3;
    double degree = 3.0, noise_std = 1.0, wlow = 0.5, whigh = 2.0, sharpen = 2.0;
    std::uint64_t sim_seed = 0;
    std::string out_dir;
    sim->add_option("--m", sim_m, "node count")->required();
    sim->add_option("--variant", variant, "linear|nonlinear1|nonlinear2|discrete")->required();
    sim->add_option("--n", sim_n, "sample count (default 5000)");
    sim->add_option("--degree", degree, "expected node degree (default 3)");
    sim->add_option("--seed", sim_seed, "rng seed");
    sim->add_option("--out-dir", out_dir, "output directory (default $DAGWGAN_OUT_DIR)");
    sim->add_option("--noise-std", noise_std, "SEM noise std (default 1)");
    sim->add_option("--weight-low", wlow, "min |edge weight| (default 0.5)");
    sim->add_option("--weight-high", whigh, "max |edge weight| (default 2)");
    sim->add_option("--cardinality", cardinality, "category count for discrete (default 3)");
    sim->add_option("--sharpen", sharpen, "CPT sharpening exponent (default 2)");

    // train
    auto* tr = app.add_subcommand("train", "train on a dataset manifest");
    std::string data_path, config_path, ckpt_out;
    tr->add_option("--data", data_path, "dataset manifest (JSON)")->required();
    tr->add_option("--config", config_path, "train config file (key = value)");
    tr->add_option("--out", ckpt_out, "output checkpoint path")->required();

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "SHD between learned and truth graphs");
    std::string learned_path, truth_path, runs_dir, summary_csv;
    ev->add_option("--learned", learned_path, "learned graph file");
    ev->add_option("--truth", truth_path, "ground-truth graph file")->required();
    ev->add_option("--runs", runs_dir, "directory of learned graphs (one per run)");
    ev->add_option("--out", summary_csv, "write run summary CSV here");

    // generate
    auto* gen = app.add_subcommand("generate", "sample synthetic data from a checkpoint");
    std::string model_path, gen_out;
    int gen_n = 1000;
    std::uint64_t gen_seed = 0;
    bool sample_cats = false;
    gen->add_option("--model", model_path, "checkpoint path")->required();
    gen->add_option("--n", gen_n, "sample count")->required();
    gen->add_option("--seed", gen_seed, "rng seed");
    gen->add_option("--out", gen_out, "output CSV")->required();
    gen->add_flag("--sample-categories", sample_cats,
                  "discrete mode: write sampled codes instead of probabilities");

    // dimprob
    auto* dp = app.add_subcommand("dimprob", "dimension-wise probability scatter");
    std::string real_path, synth_path, svg_out;
    dp->add_option("--real", real_path, "real data CSV")->required();
    dp->add_option("--synth", synth_path, "synthetic data CSV")->required();
    dp->add_option("--out", svg_out, "output SVG")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(variant, sim_m, sim_n, degree, sim_seed, out_dir, noise_std,
                                wlow, whigh, cardinality, sharpen);
        if (tr->parsed()) return cmd_train(data_path, config_path, ckpt_out);
        if (ev->parsed()) {
            if (runs_dir.empty() && learned_path.empty()) {
                std::cerr << "evaluate: need --learned or --runs\n";
                return 1;
            }
            return cmd_evaluate(learned_path, truth_path, runs_dir, summary_csv);
        }
        if (gen->parsed()) return cmd_generate(model_path, gen_n, gen_seed, gen_out, sample_cats);
        if (dp->parsed()) return cmd_dimprob(real_path, synth_path, svg_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full;
    full.push_back("dagwgan");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : full) argv.push_back(s.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

} // namespace dagwgan
