#include "ledgerad/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ledgerad/eval.hpp"
#include "ledgerad/features.hpp"
#include "ledgerad/gaussian.hpp"
#include "ledgerad/graphs.hpp"
#include "ledgerad/kmeans.hpp"
#include "ledgerad/ledger.hpp"
#include "ledgerad/ocsvm.hpp"
#include "ledgerad/scatter.hpp"
#include "ledgerad/tuning.hpp"

namespace ledgerad {

namespace {

using nlohmann::json;

struct SvmFit {
    OcSvmModel<double> model;
    AnomalyRanking ranking;
};

struct GraphRun {
    GraphKind kind;
    std::string name;
    std::size_t total_rows = 0;
    FeatureMatrix raw;
    FeatureMatrix features;
    KSelection<double> selection{};
    KMeansModel<double> kmeans{};
    std::optional<AnomalyRanking> gaussian{};
    std::optional<SvmFit> svm{};
    double gamma = 0;
};

class Outputs {
public:
    explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) {}

    template <typename Writer>
    void write(const std::string& name, Writer&& writer) {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
        written_.push_back(path);
        writer(out);
        if (!out) throw std::runtime_error("failed writing " + path.string());
    }

    void remove_all() noexcept {
        for (const auto& p : written_) {
            std::error_code ec;
            std::filesystem::remove(p, ec);
        }
        written_.clear();
    }

    const std::vector<std::filesystem::path>& written() const { return written_; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
};

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::vector<std::size_t> sample_rows(std::size_t rows, std::size_t limit, std::uint64_t seed) {
    std::vector<std::size_t> idx(rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (rows <= limit) return idx;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < limit; ++i) {
        const auto j = std::uniform_int_distribution<std::size_t>(i, rows - 1)(rng);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(limit);
    std::sort(idx.begin(), idx.end());
    return idx;
}

json dual_json(const DualEvalResult& r) {
    return {{"A1", r.A1}, {"A2", r.A2}, {"m_DE", r.m_DE}, {"N", r.N}, {"M", r.M}, {"X_N_size", r.x_n_size},
            {"Y_M_size", r.y_m_size}, {"warnings", r.warnings}};
}

json hits_json(const HitReport& report) {
    json hits = json::array();
    for (const auto& h : report.hits) hits.push_back({{"id", h.id}, {"label", h.label}, {"rank", h.rank}});
    return {{"top_n", report.top_n}, {"truth_size", report.truth_size}, {"hit_count", report.hit_count}, {"hits", hits}};
}

void write_curve(std::ostream& out, const KSelection<double>& selection) {
    out << "k,entropy,criterion\n";
    char buf[96];
    for (const auto& p : selection.curve) {
        std::snprintf(buf, sizeof buf, "%td,%.17g,%.17g\n", static_cast<std::ptrdiff_t>(p.k), p.entropy, p.criterion);
        out << buf;
    }
}

class Pipeline {
public:
    explicit Pipeline(const PipelineConfig& config) : cfg_(config), outputs_(config.out_dir) {}

    PipelineReport run() {
        try {
            execute();
        } catch (const PipelineError&) {
            outputs_.remove_all();
            throw;
        } catch (const std::exception& e) {
            outputs_.remove_all();
            throw PipelineError(stage_, e.what());
        }
        return {outputs_.written(), warnings_};
    }

private:
    void execute() {
        stage_ = "config";
        validate_config();
        std::filesystem::create_directories(cfg_.out_dir);

        stage_ = "parse";
        auto ledger_in = open_input(cfg_.ledger);
        records_ = parse_ledger(ledger_in);
        const auto report = validate_ledger(records_);
        if (report.error_count)
            throw std::runtime_error("ledger record " + std::to_string(report.errors.front().line) + ": " +
                                     report.errors.front().reason);
        if (cfg_.user_map) {
            auto in = open_input(*cfg_.user_map);
            users_ = load_user_map(in, records_);
        } else {
            complete_user_map(users_, records_);
        }
        if (cfg_.truth) {
            auto in = open_input(*cfg_.truth);
            truth_ = read_ground_truth(in);
        }

        stage_ = "graphs";
        std::optional<UserGraph> user_graph;
        std::optional<TransactionGraph> tx_graph;
        if (cfg_.user_graph) user_graph = build_user_graph(records_, users_);
        if (cfg_.tx_graph) {
            tx_graph = build_transaction_graph(records_);
            if (!tx_graph->dangling.empty())
                warnings_.push_back(std::to_string(tx_graph->dangling.size()) + " inputs had no prior unspent output");
        }

        stage_ = "features";
        if (user_graph) add_run(GraphKind::user, extract_user_features(*user_graph, default_schema(GraphKind::user)));
        if (tx_graph)
            add_run(GraphKind::transaction,
                    extract_transaction_features(*tx_graph, records_, default_schema(GraphKind::transaction)));

        stage_ = "kmeans";
        fit_baselines();

        if (cfg_.gaussian) {
            stage_ = "gaussian";
            for (auto& run : runs_) {
                const auto model = fit_gaussian(run.features.values);
                const ThresholdSpec threshold =
                    cfg_.epsilon ? ThresholdSpec{EpsilonThreshold{*cfg_.epsilon}} : ThresholdSpec{QuantileThreshold{cfg_.quantile}};
                run.gaussian = flag_anomalies(model, run.features.values, run.features.entity_ids, threshold);
            }
        }

        if (cfg_.ocsvm) {
            stage_ = "ocsvm";
            fit_svms();
        }

        stage_ = "eval";
        evaluate();

        stage_ = "output";
        write_outputs();
    }

    void validate_config() {
        if (cfg_.sample_limit == 0) throw std::invalid_argument("sample_limit must be positive");
        if (!cfg_.user_graph && !cfg_.tx_graph) throw std::invalid_argument("no graph selected");
        if (!std::filesystem::exists(cfg_.ledger)) throw std::invalid_argument("ledger " + cfg_.ledger.string() + " not found");
        for (const auto& p : {cfg_.user_map, cfg_.truth})
            if (p && !std::filesystem::exists(*p)) throw std::invalid_argument(p->string() + " not found");
        if (cfg_.k_min < 1 || cfg_.k_min > cfg_.k_max) throw std::invalid_argument("need 1 <= k_min <= k_max");
        if (!(cfg_.nu > 0.0 && cfg_.nu <= 1.0)) throw std::invalid_argument("nu must lie in (0, 1]");
        for (const auto nu : cfg_.nu_candidates)
            if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("nu candidates must lie in (0, 1]");
        if (cfg_.gamma && !(*cfg_.gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    }

    void add_run(GraphKind kind, FeatureMatrix raw) {
        const auto total = static_cast<std::size_t>(raw.rows());
        GraphRun run{kind, std::string(to_string(kind)), total, raw, std::move(raw)};
        const auto rows = sample_rows(run.total_rows, cfg_.sample_limit, cfg_.seed + (kind == GraphKind::user ? 1 : 2));
        if (rows.size() < run.total_rows) {
            run.raw = run.raw.select_rows(rows);
            warnings_.push_back(run.name + " graph sampled to " + std::to_string(rows.size()) + " of " +
                                std::to_string(run.total_rows) + " nodes");
        }
        if (run.raw.rows() < 2) throw std::runtime_error(run.name + " graph has fewer than 2 nodes");
        run.features = normalize(run.raw);
        runs_.push_back(std::move(run));
    }

    KMeansOptions kmeans_options() const { return {cfg_.seed, 300, 1e-6}; }

    void fit_baselines() {
        const auto opts = kmeans_options();
        for (auto& run : runs_) {
            const auto m = static_cast<Eigen::Index>(run.features.rows());
            const auto k_max = std::min<Eigen::Index>(static_cast<Eigen::Index>(cfg_.k_max), m);
            const auto k_min = std::min<Eigen::Index>(static_cast<Eigen::Index>(cfg_.k_min), k_max);
            run.selection = select_k(run.features.values, k_min, k_max, opts);
        }
        std::optional<std::size_t> shared = cfg_.k;
        if (!shared && cfg_.shared_k) shared = static_cast<std::size_t>(runs_.front().selection.best_k);
        for (auto& run : runs_) {
            auto k = shared;
            if (!cfg_.shared_k || cfg_.k) {
                if (run.kind == GraphKind::user && cfg_.k_user) k = cfg_.k_user;
                if (run.kind == GraphKind::transaction && cfg_.k_tx) k = cfg_.k_tx;
            }
            const auto m = static_cast<std::size_t>(run.features.rows());
            const auto chosen = static_cast<Eigen::Index>(std::min(k.value_or(static_cast<std::size_t>(run.selection.best_k)), m));
            run.kmeans = chosen == run.selection.best_k ? run.selection.best_model : fit_kmeans(run.features.values, chosen, opts);
        }
    }

    SvmFit fit_svm(GraphRun& run, double nu) {
        const auto m = static_cast<double>(run.features.rows());
        double effective = nu;
        if (nu * m < 1.0) {
            effective = 1.0 / m;
            warnings_.push_back(run.name + " graph: nu " + std::to_string(nu) + " raised to 1/m = " + std::to_string(effective));
        }
        SmoConfig smo;
        smo.tol = cfg_.smo_tol;
        smo.seed = cfg_.seed;
        smo.cache_bytes = cfg_.cache_mb << 20;
        smo.full_kernel_limit = static_cast<Eigen::Index>(cfg_.full_kernel_limit);
        auto model = fit_ocsvm(run.features.values, effective, run.gamma, smo);
        if (!model.converged) warnings_.push_back(run.name + " graph: SMO stopped before reaching tolerance");
        auto ranking = flag_anomalies(model, run.features.values, run.features.entity_ids);
        return {std::move(model), std::move(ranking)};
    }

    void fit_svms() {
        for (auto& run : runs_) run.gamma = cfg_.gamma.value_or(default_gamma(run.features.cols()));
        double nu = cfg_.nu;
        if (!cfg_.nu_candidates.empty() && runs_.size() == 2) {
            std::map<std::pair<int, double>, SvmFit> fits;
            const auto ranker = [&](int which) {
                return [&, which](double candidate) {
                    auto fit = fit_svm(runs_[static_cast<std::size_t>(which)], candidate);
                    auto ranking = fit.ranking;
                    fits.insert_or_assign({which, candidate}, std::move(fit));
                    return ranking;
                };
            };
            sweep_ = tune_nu(ranker(0), ranker(1), cfg_.nu_candidates, ownership(), cfg_.dual_n, cfg_.dual_m);
            nu = sweep_->best_nu;
            for (int which = 0; which < 2; ++which)
                runs_[static_cast<std::size_t>(which)].svm = std::move(fits.at({which, nu}));
            return;
        }
        if (!cfg_.nu_candidates.empty()) warnings_.push_back("nu sweep needs both graphs; using nu directly");
        for (auto& run : runs_) run.svm = fit_svm(run, nu);
    }

    const OwnershipIndex& ownership() {
        if (!ownership_) ownership_ = build_ownership(records_, users_);
        return *ownership_;
    }

    void evaluate() {
        metrics_ = json::object();
        json graphs = json::object();
        for (const auto& run : runs_) {
            json curve = json::array();
            for (const auto& p : run.selection.curve)
                curve.push_back({{"k", p.k}, {"entropy", p.entropy}, {"criterion", p.criterion}});
            graphs[run.name] = {{"nodes", run.total_rows},
                                {"rows", run.features.rows()},
                                {"sampled", static_cast<std::size_t>(run.features.rows()) < run.total_rows},
                                {"features", run.features.schema.names()},
                                {"selected_k", run.selection.best_k},
                                {"k", run.kmeans.k},
                                {"kmeans_objective", run.kmeans.objective},
                                {"entropy_curve", curve}};
        }
        metrics_["graphs"] = graphs;

        const auto detector = [&](const char* name, auto ranking_of) {
            json section = json::object();
            for (auto& run : runs_) {
                const AnomalyRanking* ranking = ranking_of(run);
                if (!ranking) continue;
                const auto top = std::min(cfg_.top_n, ranking->size());
                json g = {{"flagged", ranking->flagged_count},
                          {"centroid_distance_ratio", centroid_distance_ratios(run.kmeans, run.features.values, *ranking, top)}};
                if (truth_) g["ground_truth"] = hits_json(ground_truth_hits(*ranking, truth_->of_kind(run.kind), top));
                section[run.name] = g;
            }
            if (runs_.size() == 2) {
                const auto* users = ranking_of(runs_[0]);
                const auto* txs = ranking_of(runs_[1]);
                section["dual_evaluation"] = dual_json(dual_evaluation(
                    *users, *txs, ownership(), std::min(cfg_.dual_n, users->size()), std::min(cfg_.dual_m, txs->size())));
            }
            metrics_[name] = section;
        };
        if (cfg_.gaussian) {
            detector("gaussian", [](GraphRun& r) -> const AnomalyRanking* { return r.gaussian ? &*r.gaussian : nullptr; });
            metrics_["gaussian"]["threshold"] = cfg_.epsilon ? json{{"epsilon", *cfg_.epsilon}} : json{{"quantile", cfg_.quantile}};
        }
        if (cfg_.ocsvm) {
            detector("ocsvm", [](GraphRun& r) -> const AnomalyRanking* { return r.svm ? &r.svm->ranking : nullptr; });
            for (const auto& run : runs_) {
                const auto& model = run.svm->model;
                metrics_["ocsvm"][run.name].update({{"nu", model.nu},
                                                    {"gamma", model.gamma},
                                                    {"rho", model.rho},
                                                    {"rho_fallback", model.rho_fallback},
                                                    {"support_vectors", model.alpha.size()},
                                                    {"dual_objective", model.dual_objective},
                                                    {"converged", model.converged},
                                                    {"kernel_materialized", model.kernel_materialized},
                                                    {"iterations", model.iterations}});
            }
            if (sweep_) {
                json curve = json::array();
                for (const auto& p : sweep_->curve)
                    curve.push_back({{"nu", p.nu}, {"A1", p.eval.A1}, {"A2", p.eval.A2}, {"m_DE", p.eval.m_DE}});
                metrics_["nu_sweep"] = {{"best_nu", sweep_->best_nu}, {"curve", curve}};
            }
        }
        metrics_["warnings"] = warnings_;
    }

    void write_outputs() {
        for (const auto& run : runs_) {
            const std::string prefix = run.name;
            outputs_.write(prefix + "_features.csv", [&](std::ostream& o) { write_feature_csv(o, run.raw); });
            const AnomalyRanking* primary = run.svm ? &run.svm->ranking : &*run.gaussian;
            outputs_.write(prefix + "_ranking.csv", [&](std::ostream& o) { write_ranking_csv(o, *primary); });
            std::vector<std::pair<std::string, const AnomalyRanking*>> rankings;
            if (run.gaussian) rankings.emplace_back("gaussian", &*run.gaussian);
            if (run.svm) rankings.emplace_back("ocsvm", &run.svm->ranking);
            for (const auto& [det, ranking] : rankings) {
                outputs_.write(prefix + "_ranking_" + det + ".csv", [&](std::ostream& o) { write_ranking_csv(o, *ranking); });
                if (!cfg_.svg) continue;
                try {
                    std::ostringstream svg;
                    render_scatter(svg, run.features, *ranking, det + " anomalies: " + prefix + " graph");
                    outputs_.write(prefix + "_" + det + ".svg", [&](std::ostream& o) { o << svg.str(); });
                } catch (const DegenerateProjectionError& e) {
                    warnings_.push_back(prefix + " " + det + " scatter skipped: " + e.what());
                    metrics_["warnings"] = warnings_;
                }
            }
            if (run.svm) outputs_.write(prefix + "_ocsvm.model", [&](std::ostream& o) { write_ocsvm_model(o, run.svm->model); });
        }
        outputs_.write("entropy_curve.csv", [&](std::ostream& o) { write_curve(o, runs_.front().selection); });
        if (runs_.size() == 2)
            outputs_.write("entropy_curve_tx.csv", [&](std::ostream& o) { write_curve(o, runs_[1].selection); });
        if (sweep_) outputs_.write("nu_sweep.csv", [&](std::ostream& o) { write_nu_sweep_csv(o, *sweep_); });
        outputs_.write("metrics.json", [&](std::ostream& o) { o << metrics_.dump(2) << '\n'; });
    }

    const PipelineConfig& cfg_;
    Outputs outputs_;
    std::string stage_ = "config";
    Ledger records_;
    UserMap users_;
    std::optional<GroundTruth> truth_;
    std::vector<GraphRun> runs_;
    std::optional<OwnershipIndex> ownership_;
    std::optional<NuSweep> sweep_;
    std::vector<std::string> warnings_;
    json metrics_;
};

}  // namespace

PipelineReport run_pipeline(const PipelineConfig& config) { return Pipeline(config).run(); }

}  // namespace ledgerad
