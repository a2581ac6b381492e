// hypergen command line: simulation, fitting, diffusion training/sampling,
// baselines and the evaluation harness. Every subcommand writes meta.json
// plus its outputs into --out.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hypergen/baselines.hpp"
#include "hypergen/csv.hpp"
#include "hypergen/error.hpp"
#include "hypergen/hypergraph.hpp"
#include "hypergen/linmodel.hpp"
#include "hypergen/lowrank.hpp"
#include "hypergen/metrics.hpp"
#include "hypergen/mle.hpp"
#include "hypergen/pipeline.hpp"
#include "hypergen/scorediff.hpp"
#include "hypergen/simgen.hpp"
#include "hypergen/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hypergen;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string config;
    fs::path out = "hypergen-out";
};

json read_config(const Globals& g) {
    if (g.config.empty()) return json::object();
    std::ifstream in(g.config);
    if (!in) throw IoError("cannot open config '" + g.config + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + g.config + "': " + e.what());
    }
}

// Sub-object `key` of the config when present, else the whole config.
json section(const json& cfg, const char* key) {
    return cfg.contains(key) ? cfg.at(key) : cfg;
}

class Timer {
public:
    void lap(const std::string& name) {
        const auto now = std::chrono::steady_clock::now();
        times_[name] = std::chrono::duration<double>(now - last_).count();
        last_ = now;
    }
    const json& times() const { return times_; }

private:
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
    json times_ = json::object();
};

void write_meta(const fs::path& dir, const std::string& command, const json& config, const Timer& t,
                json extra = json::object()) {
    json meta = {{"command", command}, {"config", config}, {"timings", t.times()}, {"versions", version_info()}};
    for (auto& [k, v] : extra.items()) meta[k] = v;
    write_text(dir / "meta.json", meta.dump(2) + "\n");
}

void write_report(const fs::path& path, const std::vector<std::pair<std::string, double>>& cells) {
    std::vector<std::string> cols, row;
    for (const auto& [k, v] : cells) {
        cols.push_back(k);
        row.push_back(format_double(v));
    }
    write_table_csv(path, cols, {row});
}

void write_trace(const fs::path& path, const std::string& name, const std::vector<double>& v) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) rows.push_back({std::to_string(i), format_double(v[i])});
    write_table_csv(path, {"step", name}, rows);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypergen: diffused-embedding hypergraph generation"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(kVersion));

    Globals g;
    app.add_option_function<std::uint64_t>(
           "--seed", [&](std::uint64_t s) { g.seed = s, g.seed_set = true; }, "master seed")
        ->default_val(0);
    app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", g.out, "output directory")->capture_default_str();

    // simulate ---------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "draw a hypergraph and its ground truth from the simulation model");
    std::optional<int> sim_K;
    std::optional<std::size_t> sim_m, sim_n;
    std::optional<double> sim_lo, sim_hi;
    sim->add_option("-K", sim_K, "embedding dimension");
    sim->add_option("-m", sim_m, "number of hyperlinks");
    sim->add_option("-n", sim_n, "number of nodes");
    sim->add_option("--alpha-lo", sim_lo);
    sim->add_option("--alpha-hi", sim_hi);

    // fit --------------------------------------------------------------------
    auto* fitc = app.add_subcommand("fit", "constrained maximum-likelihood embedding of a hypergraph");
    std::string fit_input, fit_format = "lines";
    std::optional<int> fit_K;
    fitc->add_option("input", fit_input, "hypergraph file")->required()->check(CLI::ExistingFile);
    fitc->add_option("--format", fit_format)->check(CLI::IsMember({"lines", "jsonl"}));
    fitc->add_option("-K", fit_K);

    // train ------------------------------------------------------------------
    auto* train = app.add_subcommand("train", "train a score network on embedding rows (CSV)");
    std::string train_input;
    std::optional<int> train_epochs, train_hidden;
    train->add_option("embeddings", train_input, "X.csv")->required()->check(CLI::ExistingFile);
    train->add_option("--epochs", train_epochs);
    train->add_option("--hidden", train_hidden, "hidden width");

    // sample -----------------------------------------------------------------
    auto* samp = app.add_subcommand("sample", "draw embeddings from a trained score network");
    std::string samp_model, samp_stepper = "exponential";
    std::size_t samp_count = 1000;
    samp->add_option("model", samp_model, "directory written by train")->required()->check(CLI::ExistingDirectory);
    samp->add_option("--count", samp_count)->capture_default_str();
    samp->add_option("--stepper", samp_stepper)->check(CLI::IsMember({"exponential", "euler"}));

    // generate ---------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "decode embeddings into hyperlinks with node parameters");
    std::string gen_emb, gen_params;
    gen->add_option("embeddings", gen_emb, "CSV of hyperlink embeddings")->required()->check(CLI::ExistingFile);
    gen->add_option("params", gen_params, "directory with Z.csv and alpha.csv")
        ->required()
        ->check(CLI::ExistingDirectory);

    // evaluate ---------------------------------------------------------------
    auto* eval = app.add_subcommand("evaluate", "RMSE of means/covariances and duplicate rate");
    std::string ev_gen, ev_ref, ev_train, ev_format = "lines";
    eval->add_option("generated", ev_gen)->required()->check(CLI::ExistingFile);
    eval->add_option("reference", ev_ref)->required()->check(CLI::ExistingFile);
    eval->add_option("--train", ev_train, "training hypergraph for the duplicate rate (default: reference)")
        ->check(CLI::ExistingFile);
    eval->add_option("--format", ev_format)->check(CLI::IsMember({"lines", "jsonl"}));

    // pipeline ---------------------------------------------------------------
    auto* pipe = app.add_subcommand("pipeline", "fit, train, sample, decode and evaluate end to end");
    std::optional<std::string> pipe_method, pipe_reference, pipe_input;
    std::optional<int> pipe_mult, pipe_epochs;
    pipe->add_option("--method", pipe_method)->check(CLI::IsMember({"dde", "gau-diff", "ber-diff"}));
    pipe->add_option("--reference", pipe_reference)->check(CLI::IsMember({"train-sample", "oracle-sample"}));
    pipe->add_option("--input", pipe_input, "observed hypergraph instead of simulation")->check(CLI::ExistingFile);
    pipe->add_option("--multiplier", pipe_mult, "generated hyperlinks per observed one");
    pipe->add_option("--epochs", pipe_epochs);

    // grid -------------------------------------------------------------------
    auto* grid = app.add_subcommand("grid", "experiment grid; per-cell and median reports");
    std::optional<int> grid_reps, grid_workers;
    grid->add_option("--repetitions", grid_reps);
    grid->add_option("--workers", grid_workers);

    // baseline ---------------------------------------------------------------
    auto* base = app.add_subcommand("baseline", "Gau-Diff or Ber-Diff directly on incidence vectors");
    std::string base_method, base_input, base_format = "lines";
    int base_mult = 32;
    std::optional<int> base_epochs, base_steps;
    base->add_option("method", base_method)->required()->check(CLI::IsMember({"gau-diff", "ber-diff"}));
    base->add_option("input", base_input)->required()->check(CLI::ExistingFile);
    base->add_option("--format", base_format)->check(CLI::IsMember({"lines", "jsonl"}));
    base->add_option("--multiplier", base_mult)->capture_default_str()->check(CLI::PositiveNumber);
    base->add_option("--epochs", base_epochs);
    base->add_option("--steps", base_steps, "Ber-Diff steps");

    // lowrank ----------------------------------------------------------------
    auto* lr = app.add_subcommand("lowrank", "SVD embedding, latent diffusion and decoding of a matrix (CSV)");
    std::string lr_input;
    int lr_K = 2;
    std::size_t lr_count = 1000;
    std::optional<int> lr_epochs;
    lr->add_option("matrix", lr_input)->required()->check(CLI::ExistingFile);
    lr->add_option("-K", lr_K)->capture_default_str();
    lr->add_option("--count", lr_count)->capture_default_str();
    lr->add_option("--epochs", lr_epochs);

    CLI11_PARSE(app, argc, argv);

    try {
        const json cfg = read_config(g);
        fs::create_directories(g.out);
        Timer timer;

        if (*sim) {
            SimConfig s = sim_config_from_json(section(cfg, "sim"));
            if (sim_K) s.K = *sim_K;
            if (sim_m) s.m = *sim_m;
            if (sim_n) s.n = *sim_n;
            if (sim_lo) s.alpha_lo = *sim_lo;
            if (sim_hi) s.alpha_hi = *sim_hi;
            if (g.seed_set) s.seed = g.seed;
            s.validate();
            const GroundTruth truth = generate_ground_truth(s);
            timer.lap("simulate");
            save_hypergraph(truth.hypergraph, g.out / "hypergraph.txt");
            save_embeddings(truth.embeddings, g.out / "X.csv");
            save_node_params(truth.params, g.out);
            const DegreeSummary d = degree_summary(truth.hypergraph);
            std::vector<std::vector<std::string>> rows;
            for (const auto& [order, count] : d.order_hist) rows.push_back({std::to_string(order), std::to_string(count)});
            write_table_csv(g.out / "order_hist.csv", {"order", "count"}, rows);
            write_meta(g.out, "simulate", to_json(s), timer);
        } else if (*fitc) {
            MleConfig mc = mle_config_from_json(section(cfg, "mle"));
            if (fit_K) mc.K = *fit_K;
            if (g.seed_set) mc.seed = g.seed;
            const Hypergraph h = load_hypergraph(fit_input, parse_format(fit_format));
            const MleFit f = fit(h, mc);
            timer.lap("fit");
            save_fit(f, mc, g.out / "fit");
            write_report(g.out / "report.csv", {{"loglik", f.loglik_trace.back()},
                                                {"iterations", static_cast<double>(f.iterations)},
                                                {"converged", f.converged ? 1.0 : 0.0},
                                                {"max_residual", f.residuals.max()},
                                                {"c_mn", f.c_mn}});
            write_meta(g.out, "fit", to_json(mc), timer,
                       {{"input", fit_input}, {"residuals", to_json(f.residuals)}});
        } else if (*train) {
            TrainConfig tc = train_config_from_json(section(cfg, "train"));
            DiffusionSchedule sched = schedule_from_json(section(cfg, "schedule"));
            if (train_epochs) tc.epochs = *train_epochs;
            if (g.seed_set) tc.seed = g.seed;
            const int hidden = train_hidden.value_or(cfg.value("hidden_width", 128));
            const EmbeddingSet x = load_embeddings(train_input);
            if (x.size() == 0) throw EmptyInputError("no embedding rows in '" + train_input + "'");
            TrainResult r = train_score(x, make_score_net(static_cast<int>(x.dim()), splitmix64(tc.seed), hidden),
                                        sched, tc);
            timer.lap("train");
            save_score_net(r.net, sched, g.out / "model");
            write_trace(g.out / "loss.csv", "loss", r.loss_trace);
            write_meta(g.out, "train", {{"train", to_json(tc)}, {"schedule", to_json(sched)}, {"hidden_width", hidden}},
                       timer, {{"input", train_input}});
        } else if (*samp) {
            auto [net, sched] = load_score_net(samp_model);
            const Stepper st = parse_stepper(samp_stepper);
            const EmbeddingSet out = sample(net, sched, samp_count, g.seed, st);
            timer.lap("sample");
            save_embeddings(out, g.out / "samples.csv");
            write_meta(g.out, "sample", {{"schedule", to_json(sched)}, {"count", samp_count}, {"stepper", samp_stepper},
                                         {"seed", g.seed}},
                       timer, {{"model", samp_model}});
        } else if (*gen) {
            const EmbeddingSet x = load_embeddings(gen_emb);
            const NodeParams p = load_node_params(gen_params);
            const Hypergraph h = sample_hypergraph(x, p, g.seed);
            timer.lap("generate");
            save_hypergraph(h, g.out / "generated.txt");
            write_meta(g.out, "generate", {{"seed", g.seed}}, timer, {{"embeddings", gen_emb}, {"params", gen_params}});
        } else if (*eval) {
            const FileFormat fmt = parse_format(ev_format);
            const Hypergraph hg = load_hypergraph(ev_gen, fmt);
            const Hypergraph hr = load_hypergraph(ev_ref, fmt);
            const Hypergraph ht = ev_train.empty() ? hr : load_hypergraph(ev_train, fmt);
            write_report(g.out / "report.csv", {{"rmse_mean", rmse_means(hg, hr)},
                                                {"rmse_cov", rmse_covs(hg, hr)},
                                                {"duplicate_rate", duplicate_rate(hg, ht)}});
            timer.lap("evaluate");
            write_meta(g.out, "evaluate", json::object(), timer,
                       {{"generated", ev_gen}, {"reference", ev_ref}, {"train", ev_train.empty() ? ev_ref : ev_train}});
        } else if (*pipe) {
            json pc = cfg;
            if (pipe_input) {
                pc.erase("sim");
                pc["input"] = *pipe_input;
            } else if (!pc.contains("sim") && !pc.contains("input")) {
                pc["sim"] = json::object();
            }
            if (g.seed_set) {
                pc["seed"] = g.seed;
                if (pc.contains("sim")) pc["sim"]["seed"] = g.seed;
            }
            if (pipe_method) pc["method"] = *pipe_method;
            if (pipe_reference) pc["reference"] = *pipe_reference;
            if (pipe_mult) pc["m_tilde_multiplier"] = *pipe_mult;
            if (pipe_epochs) pc["train"]["epochs"] = *pipe_epochs;
            const PipelineConfig c = pipeline_config_from_json(pc);
            const PipelineResult r = run_pipeline(c);
            write_pipeline_outputs(r, c, g.out);
        } else if (*grid) {
            json gc = cfg;
            if (g.seed_set) gc["seed"] = g.seed;
            if (grid_reps) gc["repetitions"] = *grid_reps;
            if (grid_workers) gc["workers"] = *grid_workers;
            const GridSpec spec = grid_spec_from_json(gc);
            const auto reports = run_experiment_grid(spec);
            timer.lap("grid");
            write_reports_csv(reports, g.out / "reports.csv");
            write_reports_csv(median_reports(reports), g.out / "medians.csv");
            std::size_t failed = 0;
            for (const auto& r : reports) failed += r.error.empty() ? 0 : 1;
            write_meta(g.out, "grid", gc, timer, {{"cells", reports.size()}, {"failed_cells", failed}});
        } else if (*base) {
            const Hypergraph h = load_hypergraph(base_input, parse_format(base_format));
            TrainConfig tc = train_config_from_json(section(cfg, "train"));
            if (base_epochs) tc.epochs = *base_epochs;
            if (g.seed_set) tc.seed = g.seed;
            const std::size_t m_tilde = static_cast<std::size_t>(base_mult) * h.num_links();
            const int hidden = cfg.value("hidden_width", 128);
            json echo = {{"train", to_json(tc)}, {"multiplier", base_mult}, {"hidden_width", hidden}, {"seed", g.seed}};
            Hypergraph generated;
            std::vector<double> loss;
            if (base_method == "gau-diff") {
                const DiffusionSchedule sched = schedule_from_json(section(cfg, "schedule"));
                GauDiffResult r = gau_diff_fit_sample(h, sched, tc, m_tilde, g.seed, hidden);
                generated = std::move(r.generated);
                loss = std::move(r.loss_trace);
                echo["schedule"] = to_json(sched);
                std::vector<double> th(r.model.thresholds.data(), r.model.thresholds.data() + r.model.thresholds.size());
                echo["thresholds"] = th;
            } else {
                BerDiffConfig bc;
                bc.steps = base_steps.value_or(cfg.value("ber_steps", bc.steps));
                bc.hidden_width = hidden;
                BerDiffResult r = ber_diff_fit_sample(h, bc, tc, m_tilde, g.seed);
                generated = std::move(r.generated);
                loss = std::move(r.loss_trace);
                echo["ber_steps"] = bc.steps;
                echo["beta"] = r.model.schedule();
            }
            timer.lap(base_method);
            save_hypergraph(generated, g.out / "generated.txt");
            write_trace(g.out / "loss.csv", "loss", loss);
            write_report(g.out / "report.csv", {{"rmse_mean", rmse_means(generated, h)},
                                                {"rmse_cov", rmse_covs(generated, h)},
                                                {"duplicate_rate", duplicate_rate(generated, h)}});
            write_meta(g.out, "baseline " + base_method, echo, timer, {{"input", base_input}});
        } else if (*lr) {
            const Eigen::MatrixXd y = read_matrix_csv(lr_input);
            TrainConfig tc = train_config_from_json(section(cfg, "train"));
            const DiffusionSchedule sched = schedule_from_json(section(cfg, "schedule"));
            if (lr_epochs) tc.epochs = *lr_epochs;
            if (g.seed_set) tc.seed = g.seed;
            const LowRankFit f = svd_embed(y, lr_K);
            timer.lap("svd");
            TrainResult r = train_score(EmbeddingSet{f.x_hat}, make_score_net(lr_K, splitmix64(tc.seed)), sched, tc);
            timer.lap("train");
            const Eigen::MatrixXd out = lowrank_generate(f, r.net, sched, lr_count, g.seed);
            timer.lap("sample");
            write_matrix_csv(g.out / "Z_hat.csv", f.z_hat, "n x K orthonormal basis");
            write_matrix_csv(g.out / "X_hat.csv", f.x_hat, "m x K latent rows");
            write_matrix_csv(g.out / "singular_values.csv", f.singular_values, "singular values");
            write_matrix_csv(g.out / "generated.csv", out, "generated rows");
            write_trace(g.out / "loss.csv", "loss", r.loss_trace);
            write_meta(g.out, "lowrank",
                       {{"K", lr_K}, {"count", lr_count}, {"train", to_json(tc)}, {"schedule", to_json(sched)}}, timer,
                       {{"input", lr_input}});
        }
    } catch (const PipelineError& e) {
        std::cerr << "hypergen: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "hypergen: config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "hypergen: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
