#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hypergen/baselines.hpp"
#include "hypergen/error.hpp"
#include "hypergen/hypergraph.hpp"
#include "hypergen/mle.hpp"
#include "hypergen/scorediff.hpp"
#include "hypergen/simgen.hpp"

namespace hypergen {

enum class Method { dde, gau_diff, ber_diff };
std::string to_string(Method m);
Method parse_method(const std::string& name);

/// What generated statistics are compared against.
///  train_sample:  the observed hypergraph itself;
///  oracle_sample: a fresh hypergraph of multiplier·m hyperlinks drawn from
///                 the known simulation truth (simulated input only).
enum class ReferenceMode { train_sample, oracle_sample };
std::string to_string(ReferenceMode r);
ReferenceMode parse_reference(const std::string& name);

struct PipelineConfig {
    std::optional<SimConfig> sim;          // simulate the input...
    std::optional<std::filesystem::path> input;  // ...or read it
    FileFormat format = FileFormat::lines;
    Method method = Method::dde;
    MleConfig mle;
    DiffusionSchedule schedule;
    TrainConfig train;
    BerDiffConfig ber;
    int hidden_width = 128;
    int m_tilde_multiplier = 32;
    ReferenceMode reference = ReferenceMode::train_sample;
    Stepper stepper = Stepper::exponential;
    std::uint64_t seed = 0;

    void validate() const;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& c);

struct EvalReport {
    std::string method;
    std::string reference;
    int K = 0;
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t m_tilde = 0;
    double alpha_lo = 0;
    double alpha_hi = 0;
    std::uint64_t seed = 0;
    std::uint64_t sim_seed = 0;
    double rmse_mean = 0;
    double rmse_cov = 0;
    double duplicate_rate = 0;
    double seconds = 0;
    std::string error;  // non-empty when the run failed
};

/// Column names / cells of the deterministic report CSV. Wall-clock time is
/// kept out of it so reruns are byte-identical; see timing_row.
std::vector<std::string> report_columns();
std::vector<std::string> report_row(const EvalReport& r);
nlohmann::json to_json(const EvalReport& r);

/// Stage-labelled failure inside a pipeline run.
class PipelineError : public Error {
public:
    PipelineError(const std::string& stage, const std::string& what)
        : Error("stage '" + stage + "': " + what), stage_(stage) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct PipelineResult {
    Hypergraph observed;
    Hypergraph generated;
    EvalReport report;
    std::optional<GroundTruth> truth;
    std::optional<MleFit> fit;             // DDE only
    std::optional<ScoreNet> net;           // DDE / Gau-Diff
    std::optional<EmbeddingSet> sampled;   // DDE latent samples
    std::vector<double> loss_trace;
    std::vector<std::pair<std::string, double>> timings;  // per stage, seconds
};

/// Fit → train → sample → decode → evaluate, for the configured method.
PipelineResult run_pipeline(const PipelineConfig& cfg);
/// run_pipeline with method forced to DDE.
PipelineResult run_dde_pipeline(PipelineConfig cfg);

/// Writes generated.txt, observed.txt, report.csv, timings.csv, meta.json
/// (and the fit / score network for DDE) into `dir`.
void write_pipeline_outputs(const PipelineResult& res, const PipelineConfig& cfg, const std::filesystem::path& dir);

struct GridSpec {
    std::vector<Method> methods{Method::dde};
    std::vector<int> Ks{2};
    std::vector<std::size_t> ms{200};
    std::vector<std::size_t> ns{200};
    std::vector<std::pair<double, double>> alpha_ranges{{-1.0, 0.0}};
    int repetitions = 5;
    std::uint64_t base_seed = 0;
    int workers = 1;
    PipelineConfig base;  // everything except the grid axes
};

GridSpec grid_spec_from_json(const nlohmann::json& j);

/// Every (method, K, m, n, alpha range, repetition) cell in grid order.
/// Failed cells are reported with `error` set; the grid continues.
std::vector<EvalReport> run_experiment_grid(const GridSpec& spec);

/// Median rmse_mean / rmse_cov / duplicate_rate per (method, K, m, n, alpha).
std::vector<EvalReport> median_reports(const std::vector<EvalReport>& reports);

void write_reports_csv(const std::vector<EvalReport>& reports, const std::filesystem::path& path);

}  // namespace hypergen
