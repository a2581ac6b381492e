#include "hypergen/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "hypergen/csv.hpp"
#include "hypergen/error.hpp"
#include "hypergen/linmodel.hpp"
#include "hypergen/metrics.hpp"
#include "hypergen/version.hpp"

namespace hypergen {

namespace {

constexpr std::uint64_t kNetSalt = 0x6e6574;
constexpr std::uint64_t kTrainSalt = 0x747261;
constexpr std::uint64_t kSampleSalt = 0x73616d;
constexpr std::uint64_t kDecodeSalt = 0x646563;
constexpr std::uint64_t kOracleSalt = 0x6f7263;
constexpr std::uint64_t kBaselineSalt = 0x62736c;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Runs `fn`, rethrowing library errors with the stage name attached.
template <typename Fn>
auto staged(const char* stage, std::vector<std::pair<std::string, double>>& timings, Fn&& fn) {
    const auto t0 = Clock::now();
    try {
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            timings.emplace_back(stage, seconds_since(t0));
        } else {
            auto out = fn();
            timings.emplace_back(stage, seconds_since(t0));
            return out;
        }
    } catch (const PipelineError&) {
        throw;
    } catch (const std::exception& e) {
        throw PipelineError(stage, e.what());
    }
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::dde: return "dde";
        case Method::gau_diff: return "gau-diff";
        case Method::ber_diff: return "ber-diff";
    }
    return "unknown";
}

Method parse_method(const std::string& name) {
    if (name == "dde" || name == "DDE") return Method::dde;
    if (name == "gau-diff" || name == "Gau-Diff") return Method::gau_diff;
    if (name == "ber-diff" || name == "Ber-Diff") return Method::ber_diff;
    throw ConfigError("unknown method '" + name + "'");
}

std::string to_string(ReferenceMode r) { return r == ReferenceMode::train_sample ? "train-sample" : "oracle-sample"; }

ReferenceMode parse_reference(const std::string& name) {
    if (name == "train-sample") return ReferenceMode::train_sample;
    if (name == "oracle-sample") return ReferenceMode::oracle_sample;
    throw ConfigError("unknown reference mode '" + name + "'");
}

void PipelineConfig::validate() const {
    if (m_tilde_multiplier < 1) throw ConfigError("m_tilde multiplier must be >= 1");
    if (sim.has_value() == input.has_value()) throw ConfigError("exactly one of 'sim' and 'input' must be given");
    if (reference == ReferenceMode::oracle_sample && !sim) {
        throw ConfigError("oracle-sample reference needs a simulated input");
    }
    if (hidden_width < 1) throw ConfigError("hidden_width must be positive");
    if (sim) sim->validate();
    mle.validate();
    schedule.validate();
    train.validate();
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    if (j.contains("sim")) c.sim = sim_config_from_json(j.at("sim"));
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    if (j.contains("format")) c.format = parse_format(j.at("format").get<std::string>());
    if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
    nlohmann::json mle = j.value("mle", nlohmann::json::object());
    if (c.sim && !mle.contains("K")) mle["K"] = c.sim->K;
    c.mle = mle_config_from_json(mle);
    if (j.contains("schedule")) c.schedule = schedule_from_json(j.at("schedule"));
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    c.ber.steps = j.value("ber_steps", c.ber.steps);
    c.hidden_width = j.value("hidden_width", c.hidden_width);
    c.ber.hidden_width = c.hidden_width;
    c.m_tilde_multiplier = j.value("m_tilde_multiplier", c.m_tilde_multiplier);
    if (j.contains("reference")) c.reference = parse_reference(j.at("reference").get<std::string>());
    if (j.contains("stepper")) c.stepper = parse_stepper(j.at("stepper").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

nlohmann::json to_json(const PipelineConfig& c) {
    nlohmann::json j = {{"method", to_string(c.method)},
                        {"format", c.format == FileFormat::lines ? "lines" : "jsonl"},
                        {"mle", to_json(c.mle)},
                        {"schedule", to_json(c.schedule)},
                        {"train", to_json(c.train)},
                        {"ber_steps", c.ber.steps},
                        {"hidden_width", c.hidden_width},
                        {"m_tilde_multiplier", c.m_tilde_multiplier},
                        {"reference", to_string(c.reference)},
                        {"stepper", c.stepper == Stepper::exponential ? "exponential" : "euler"},
                        {"seed", c.seed}};
    if (c.sim) j["sim"] = to_json(*c.sim);
    if (c.input) j["input"] = c.input->string();
    return j;
}

std::vector<std::string> report_columns() {
    return {"method", "reference", "K",  "m",         "n",        "m_tilde",        "alpha_lo",
            "alpha_hi", "seed",    "sim_seed", "rmse_mean", "rmse_cov", "duplicate_rate", "error"};
}

std::vector<std::string> report_row(const EvalReport& r) {
    return {r.method,
            r.reference,
            std::to_string(r.K),
            std::to_string(r.m),
            std::to_string(r.n),
            std::to_string(r.m_tilde),
            format_double(r.alpha_lo),
            format_double(r.alpha_hi),
            std::to_string(r.seed),
            std::to_string(r.sim_seed),
            format_double(r.rmse_mean),
            format_double(r.rmse_cov),
            format_double(r.duplicate_rate),
            r.error};
}

nlohmann::json to_json(const EvalReport& r) {
    return {{"method", r.method},     {"reference", r.reference},     {"K", r.K},
            {"m", r.m},               {"n", r.n},                     {"m_tilde", r.m_tilde},
            {"alpha_lo", r.alpha_lo}, {"alpha_hi", r.alpha_hi},       {"seed", r.seed},
            {"sim_seed", r.sim_seed}, {"rmse_mean", r.rmse_mean},     {"rmse_cov", r.rmse_cov},
            {"duplicate_rate", r.duplicate_rate}, {"seconds", r.seconds}, {"error", r.error}};
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    const auto start = Clock::now();
    PipelineResult res;
    auto& tm = res.timings;

    staged("input", tm, [&] {
        if (cfg.sim) {
            res.truth = generate_ground_truth(*cfg.sim);
            res.observed = res.truth->hypergraph;
        } else {
            res.observed = load_hypergraph(*cfg.input, cfg.format);
        }
    });
    const Hypergraph& h = res.observed;
    if (h.num_links() == 0) throw PipelineError("input", "observed hypergraph has no hyperlinks");
    const std::size_t m_tilde = static_cast<std::size_t>(cfg.m_tilde_multiplier) * h.num_links();

    TrainConfig tc = cfg.train;
    tc.seed = splitmix64(cfg.seed ^ cfg.train.seed ^ kTrainSalt);

    switch (cfg.method) {
        case Method::dde: {
            res.fit = staged("mle", tm, [&] { return fit(h, cfg.mle); });
            auto trained = staged("train", tm, [&] {
                ScoreNet net = make_score_net(cfg.mle.K, splitmix64(cfg.seed ^ kNetSalt), cfg.hidden_width);
                return train_score(res.fit->x_hat, std::move(net), cfg.schedule, tc);
            });
            res.loss_trace = std::move(trained.loss_trace);
            res.net = std::move(trained.net);
            res.sampled = staged("sample", tm, [&] {
                return sample(*res.net, cfg.schedule, m_tilde, splitmix64(cfg.seed ^ kSampleSalt), cfg.stepper);
            });
            res.generated = staged("decode", tm, [&] {
                return sample_hypergraph(*res.sampled, res.fit->params_hat, splitmix64(cfg.seed ^ kDecodeSalt));
            });
            break;
        }
        case Method::gau_diff: {
            auto out = staged("gau-diff", tm, [&] {
                return gau_diff_fit_sample(h, cfg.schedule, tc, m_tilde, splitmix64(cfg.seed ^ kBaselineSalt),
                                           cfg.hidden_width);
            });
            res.generated = std::move(out.generated);
            res.loss_trace = std::move(out.loss_trace);
            res.net = std::move(out.model.net);
            break;
        }
        case Method::ber_diff: {
            auto out = staged("ber-diff", tm, [&] {
                return ber_diff_fit_sample(h, cfg.ber, tc, m_tilde, splitmix64(cfg.seed ^ kBaselineSalt));
            });
            res.generated = std::move(out.generated);
            res.loss_trace = std::move(out.loss_trace);
            break;
        }
    }

    staged("evaluate", tm, [&] {
        Hypergraph reference;
        if (cfg.reference == ReferenceMode::oracle_sample) {
            reference = resample_from_truth(*cfg.sim, res.truth->params, m_tilde,
                                            splitmix64(cfg.sim->seed ^ kOracleSalt));
        }
        const Hypergraph& ref = cfg.reference == ReferenceMode::oracle_sample ? reference : h;
        const auto gen_stats = cooccurrence_stats(res.generated);
        const auto ref_stats = cooccurrence_stats(ref);
        auto& r = res.report;
        r.method = to_string(cfg.method);
        r.reference = to_string(cfg.reference);
        r.K = cfg.mle.K;
        r.m = h.num_links();
        r.n = h.num_nodes();
        r.m_tilde = m_tilde;
        if (cfg.sim) {
            r.alpha_lo = cfg.sim->alpha_lo;
            r.alpha_hi = cfg.sim->alpha_hi;
            r.sim_seed = cfg.sim->seed;
        }
        r.seed = cfg.seed;
        r.rmse_mean = rmse_means(gen_stats, ref_stats);
        r.rmse_cov = rmse_covs(gen_stats, ref_stats);
        r.duplicate_rate = duplicate_rate(res.generated, h);
    });
    res.report.seconds = seconds_since(start);
    return res;
}

PipelineResult run_dde_pipeline(PipelineConfig cfg) {
    cfg.method = Method::dde;
    return run_pipeline(cfg);
}

void write_pipeline_outputs(const PipelineResult& res, const PipelineConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    save_hypergraph(res.observed, dir / "observed.txt");
    save_hypergraph(res.generated, dir / "generated.txt");
    write_table_csv(dir / "report.csv", report_columns(), {report_row(res.report)});
    std::vector<std::vector<std::string>> trows;
    for (const auto& [stage, s] : res.timings) trows.push_back({stage, format_double(s)});
    trows.push_back({"total", format_double(res.report.seconds)});
    write_table_csv(dir / "timings.csv", {"stage", "seconds"}, trows);
    if (!res.loss_trace.empty()) {
        Eigen::VectorXd lt = Eigen::Map<const Eigen::VectorXd>(res.loss_trace.data(),
                                                               static_cast<Eigen::Index>(res.loss_trace.size()));
        write_matrix_csv(dir / "loss.csv", lt, "train_loss epochs=" + std::to_string(lt.size()));
    }
    if (res.truth) {
        std::filesystem::create_directories(dir / "truth");
        save_embeddings(res.truth->embeddings, dir / "truth" / "X.csv");
        save_node_params(res.truth->params, dir / "truth");
    }
    if (res.fit) save_fit(*res.fit, cfg.mle, dir / "fit");
    if (res.net && cfg.method == Method::dde) save_score_net(*res.net, cfg.schedule, dir / "model");
    if (res.sampled) save_embeddings(*res.sampled, dir / "sampled_embeddings.csv");

    nlohmann::json timing = nlohmann::json::object();
    for (const auto& [stage, s] : res.timings) timing[stage] = s;
    nlohmann::json meta = {{"config", to_json(cfg)},
                           {"report", to_json(res.report)},
                           {"timings", timing},
                           {"versions", version_info()}};
    write_text(dir / "meta.json", meta.dump(2) + "\n");
}

GridSpec grid_spec_from_json(const nlohmann::json& j) {
    GridSpec g;
    if (j.contains("methods")) {
        g.methods.clear();
        for (const auto& m : j.at("methods")) g.methods.push_back(parse_method(m.get<std::string>()));
    }
    if (j.contains("K")) g.Ks = j.at("K").get<std::vector<int>>();
    if (j.contains("m")) g.ms = j.at("m").get<std::vector<std::size_t>>();
    if (j.contains("n")) g.ns = j.at("n").get<std::vector<std::size_t>>();
    if (j.contains("alpha_ranges")) {
        g.alpha_ranges.clear();
        for (const auto& r : j.at("alpha_ranges")) g.alpha_ranges.emplace_back(r.at(0).get<double>(), r.at(1).get<double>());
    }
    g.repetitions = j.value("repetitions", g.repetitions);
    g.base_seed = j.value("seed", g.base_seed);
    g.workers = j.value("workers", g.workers);
    nlohmann::json base = j.value("base", nlohmann::json::object());
    if (!base.contains("sim") && !base.contains("input")) base["sim"] = nlohmann::json::object();
    if (!base.contains("reference")) base["reference"] = "oracle-sample";
    g.base = pipeline_config_from_json(base);
    if (g.repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (g.workers < 1) throw ConfigError("workers must be >= 1");
    return g;
}

std::vector<EvalReport> run_experiment_grid(const GridSpec& spec) {
    struct Cell {
        PipelineConfig cfg;
    };
    std::vector<Cell> cells;
    for (Method method : spec.methods) {
        for (int K : spec.Ks) {
            for (auto m : spec.ms) {
                for (auto n : spec.ns) {
                    for (const auto& [lo, hi] : spec.alpha_ranges) {
                        for (int rep = 0; rep < spec.repetitions; ++rep) {
                            PipelineConfig c = spec.base;
                            SimConfig s;
                            s.K = K;
                            s.m = m;
                            s.n = n;
                            s.alpha_lo = lo;
                            s.alpha_hi = hi;
                            s.seed = spec.base_seed + static_cast<std::uint64_t>(rep);
                            c.sim = s;
                            c.input.reset();
                            c.method = method;
                            c.mle.K = K;
                            c.seed = spec.base_seed + static_cast<std::uint64_t>(rep);
                            cells.push_back({c});
                        }
                    }
                }
            }
        }
    }
    std::vector<EvalReport> out(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const auto& c = cells[i].cfg;
            try {
                out[i] = run_pipeline(c).report;
            } catch (const std::exception& e) {
                EvalReport r;
                r.method = to_string(c.method);
                r.reference = to_string(c.reference);
                r.K = c.mle.K;
                r.m = c.sim->m;
                r.n = c.sim->n;
                r.alpha_lo = c.sim->alpha_lo;
                r.alpha_hi = c.sim->alpha_hi;
                r.seed = c.seed;
                r.sim_seed = c.sim->seed;
                r.rmse_mean = r.rmse_cov = r.duplicate_rate = std::nan("");
                r.error = e.what();
                std::replace(r.error.begin(), r.error.end(), ',', ';');
                std::replace(r.error.begin(), r.error.end(), '\n', ' ');
                out[i] = r;
            }
        }
    };
    const int nthreads = std::max(1, std::min<int>(spec.workers, static_cast<int>(cells.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    }
    return out;
}

std::vector<EvalReport> median_reports(const std::vector<EvalReport>& reports) {
    using Key = std::tuple<std::string, int, std::size_t, std::size_t, double, double>;
    std::vector<Key> order;
    std::map<Key, std::vector<const EvalReport*>> groups;
    for (const auto& r : reports) {
        Key k{r.method, r.K, r.m, r.n, r.alpha_lo, r.alpha_hi};
        if (!groups.count(k)) order.push_back(k);
        groups[k].push_back(&r);
    }
    std::vector<EvalReport> out;
    for (const auto& k : order) {
        const auto& g = groups[k];
        EvalReport med = *g.front();
        std::vector<double> a, b, c;
        std::size_t failures = 0;
        for (const auto* r : g) {
            if (!r->error.empty()) {
                ++failures;
                continue;
            }
            a.push_back(r->rmse_mean);
            b.push_back(r->rmse_cov);
            c.push_back(r->duplicate_rate);
        }
        med.seed = 0;
        med.sim_seed = 0;
        med.rmse_mean = median(a);
        med.rmse_cov = median(b);
        med.duplicate_rate = median(c);
        med.error = failures ? std::to_string(failures) + " failed repetitions" : "";
        out.push_back(med);
    }
    return out;
}

void write_reports_csv(const std::vector<EvalReport>& reports, const std::filesystem::path& path) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : reports) rows.push_back(report_row(r));
    write_table_csv(path, report_columns(), rows);
}

}  // namespace hypergen
