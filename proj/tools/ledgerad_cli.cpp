#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ledgerad/eval.hpp"
#include "ledgerad/ledger.hpp"
#include "ledgerad/pipeline.hpp"
#include "ledgerad/ranking.hpp"
#include "ledgerad/synth.hpp"

namespace {

using namespace ledgerad;

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
        if (!item.empty()) items.push_back(item);
    return items;
}

std::ifstream open(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return in;
}

// Flat key=value files: keys outside any section belong to the subcommand
// being run, and '_' is accepted in place of '-'.
class SubcommandConfig : public CLI::ConfigINI {
public:
    explicit SubcommandConfig(const CLI::App& app) : app_(app) {}

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        auto items = CLI::ConfigINI::from_config(input);
        const auto used = app_.get_subcommands();
        for (auto& item : items) {
            std::replace(item.name.begin(), item.name.end(), '_', '-');
            if (item.parents.empty() && !used.empty()) item.parents = {used.front()->get_name()};
        }
        return items;
    }

private:
    const CLI::App& app_;
};

struct RunArgs {
    PipelineConfig config;
    std::vector<std::string> graphs{"user", "tx"};
    std::vector<std::string> detectors{"gaussian", "ocsvm"};
    std::vector<double> nu;
    std::string k = "auto";
    std::string user_map;
    std::string truth;
    double gamma = 0;
    double epsilon = -1;
    std::size_t k_user = 0;
    std::size_t k_tx = 0;
    bool per_graph_k = false;
    bool no_svg = false;
};

void add_run(CLI::App& app, RunArgs& args) {
    auto* run = app.add_subcommand("run", "Run the detection pipeline on a ledger");
    auto& c = args.config;
    run->add_option("--ledger", c.ledger, "Ledger CSV")->required();
    run->add_option("--user-map", args.user_map, "address,user_id CSV");
    run->add_option("--truth", args.truth, "Ground truth CSV kind,id,label");
    run->add_option("--out", c.out_dir, "Output directory");
    run->add_option("--seed", c.seed, "Seed for sampling, k-means and SMO tie-breaking");
    run->add_option("--graphs", args.graphs, "Comma list of user,tx")->delimiter(',')->check(CLI::IsMember({"user", "tx"}));
    run->add_option("--detectors", args.detectors, "Comma list of gaussian,ocsvm")
        ->delimiter(',')
        ->check(CLI::IsMember({"gaussian", "ocsvm"}));
    run->add_option("--nu", args.nu, "nu, or a comma list of candidates to sweep")->delimiter(',');
    run->add_option("--gamma", args.gamma, "RBF gamma (default 1/n)");
    run->add_option("--k", args.k, "Shared k, or 'auto' to select by entropy");
    run->add_option("--k-user", args.k_user, "k for the user graph (with --per-graph-k)");
    run->add_option("--k-tx", args.k_tx, "k for the transaction graph (with --per-graph-k)");
    run->add_flag("--per-graph-k", args.per_graph_k, "Select k separately for each graph");
    run->add_option("--k-min", c.k_min, "Smallest k tried");
    run->add_option("--k-max", c.k_max, "Largest k tried");
    run->add_option("--quantile", c.quantile, "Gaussian: flag the lowest-density fraction");
    run->add_option("--epsilon", args.epsilon, "Gaussian: flag density below epsilon (overrides quantile)");
    run->add_option("--sample-limit", c.sample_limit, "Max rows per graph");
    run->add_option("--top-n", c.top_n, "Outliers used for centroid ratios and ground-truth hits");
    run->add_option("--dual-n", c.dual_n, "Top users for dual evaluation");
    run->add_option("--dual-m", c.dual_m, "Top transactions for dual evaluation");
    run->add_option("--smo-tol", c.smo_tol, "SMO KKT tolerance");
    run->add_option("--cache-mb", c.cache_mb, "Kernel row cache budget (MiB)");
    run->add_option("--full-kernel-limit", c.full_kernel_limit, "Largest m for a materialized kernel matrix");
    run->add_flag("--no-svg", args.no_svg, "Skip scatter plots");
    run->callback([&args] {
        auto& cfg = args.config;
        if (!args.user_map.empty()) cfg.user_map = args.user_map;
        if (!args.truth.empty()) cfg.truth = args.truth;
        const auto& graphs = args.graphs;
        cfg.user_graph = std::find(graphs.begin(), graphs.end(), "user") != graphs.end();
        cfg.tx_graph = std::find(graphs.begin(), graphs.end(), "tx") != graphs.end();
        const auto& detectors = args.detectors;
        cfg.gaussian = std::find(detectors.begin(), detectors.end(), "gaussian") != detectors.end();
        cfg.ocsvm = std::find(detectors.begin(), detectors.end(), "ocsvm") != detectors.end();
        if (!cfg.gaussian && !cfg.ocsvm) throw CLI::ValidationError("--detectors", "no detector selected");
        if (args.nu.size() == 1) cfg.nu = args.nu.front();
        else if (args.nu.size() > 1) cfg.nu_candidates = args.nu;
        if (args.gamma > 0) cfg.gamma = args.gamma;
        if (args.epsilon >= 0) cfg.epsilon = args.epsilon;
        if (args.k != "auto") cfg.k = static_cast<std::size_t>(std::stoul(args.k));
        cfg.shared_k = !args.per_graph_k;
        if (args.k_user) cfg.k_user = args.k_user;
        if (args.k_tx) cfg.k_tx = args.k_tx;
        cfg.svg = !args.no_svg;

        const auto report = run_pipeline(cfg);
        for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
        for (const auto& p : report.outputs) std::cout << p.string() << '\n';
    });
}

void add_synth(CLI::App& app, SynthConfig& cfg, std::string& out_dir) {
    auto* synth = app.add_subcommand("synth", "Generate a synthetic ledger with planted anomalies");
    synth->add_option("--out", out_dir, "Output directory")->required();
    synth->add_option("--user-count", cfg.user_count);
    synth->add_option("--tx-count", cfg.tx_count);
    synth->add_option("--seed", cfg.seed);
    synth->add_option("--funnel-count", cfg.funnel_count);
    synth->add_option("--funnel-fan-in", cfg.funnel_fan_in);
    synth->add_option("--burst-count", cfg.burst_count);
    synth->add_option("--burst-fan-out", cfg.burst_fan_out);
    synth->add_option("--dormant-count", cfg.dormant_count);
    synth->add_option("--dormant-burst", cfg.dormant_burst);
    synth->add_option("--max-addresses-per-user", cfg.max_addresses_per_user);
    synth->add_option("--amount-log-mean", cfg.amount_log_mean);
    synth->add_option("--amount-log-sigma", cfg.amount_log_sigma);
    synth->add_option("--mean-inter-arrival", cfg.mean_inter_arrival);
    synth->add_option("--coinbase-fraction", cfg.coinbase_fraction);
    synth->add_option("--start-time", cfg.start_time);
    synth->callback([&cfg, &out_dir] {
        const auto data = generate(cfg);
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        std::ofstream ledger(dir / "ledger.csv", std::ios::binary);
        write_ledger(ledger, data.records);
        std::ofstream users(dir / "users.csv", std::ios::binary);
        write_user_map(users, data.users);
        std::ofstream truth(dir / "truth.csv", std::ios::binary);
        write_ground_truth(truth, data.truth);
        std::cout << data.records.size() << " transactions, " << data.truth.entries.size() << " ground-truth entries\n";
    });
}

struct EvalArgs {
    std::string rankings;
    std::string truth;
    std::string ledger;
    std::string user_map;
    std::string out;
    std::size_t top_n = 100;
    std::size_t dual_n = 100;
    std::size_t dual_m = 100;
};

void add_eval(CLI::App& app, EvalArgs& args) {
    auto* eval = app.add_subcommand("eval", "Evaluate saved rankings");
    eval->add_option("--rankings", args.rankings, "user_ranking.csv[,tx_ranking.csv]")->required();
    eval->add_option("--truth", args.truth, "Ground truth CSV");
    eval->add_option("--ledger", args.ledger, "Ledger CSV (enables dual evaluation)");
    eval->add_option("--user-map", args.user_map, "address,user_id CSV");
    eval->add_option("--top-n", args.top_n);
    eval->add_option("--dual-n", args.dual_n);
    eval->add_option("--dual-m", args.dual_m);
    eval->add_option("--out", args.out, "Write the JSON report here instead of stdout");
    eval->callback([&args] {
        using nlohmann::json;
        const auto paths = split_list(args.rankings);
        if (paths.empty() || paths.size() > 2) throw CLI::ValidationError("--rankings", "expected one or two files");
        std::vector<AnomalyRanking> rankings;
        for (const auto& p : paths) {
            auto in = open(p);
            rankings.push_back(read_ranking_csv(in));
        }
        json report = json::object();
        if (!args.truth.empty()) {
            auto in = open(args.truth);
            const auto truth = read_ground_truth(in);
            const GraphKind kinds[] = {GraphKind::user, GraphKind::transaction};
            // one file alone is matched against every truth entry
            for (std::size_t i = 0; i < rankings.size(); ++i) {
                const auto entries = rankings.size() == 2 ? truth.of_kind(kinds[i]) : truth.entries;
                const auto hits = ground_truth_hits(rankings[i], entries, std::min(args.top_n, rankings[i].size()));
                json list = json::array();
                for (const auto& h : hits.hits) list.push_back({{"id", h.id}, {"label", h.label}, {"rank", h.rank}});
                report["ground_truth"][paths[i]] = {{"top_n", hits.top_n}, {"truth_size", hits.truth_size},
                                                     {"hit_count", hits.hit_count}, {"hits", list}};
            }
        }
        if (!args.ledger.empty() && rankings.size() == 2) {
            auto ledger_in = open(args.ledger);
            const auto records = parse_ledger(ledger_in);
            UserMap users;
            if (!args.user_map.empty()) {
                auto in = open(args.user_map);
                users = load_user_map(in, records);
            } else {
                complete_user_map(users, records);
            }
            const auto r = dual_evaluation(rankings[0], rankings[1], build_ownership(records, users),
                                           std::min(args.dual_n, rankings[0].size()), std::min(args.dual_m, rankings[1].size()));
            report["dual_evaluation"] = {{"A1", r.A1}, {"A2", r.A2}, {"m_DE", r.m_DE}, {"N", r.N}, {"M", r.M},
                                         {"X_N_size", r.x_n_size}, {"Y_M_size", r.y_m_size}};
        }
        if (args.out.empty()) {
            std::cout << report.dump(2) << '\n';
        } else {
            std::ofstream out(args.out, std::ios::binary);
            out << report.dump(2) << '\n';
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anomaly detection over transaction ledgers"};
    app.require_subcommand(1);
    // Flags given on the command line override values from the file.
    app.set_config("--config", "", "key=value configuration file");
    app.config_formatter(std::make_shared<SubcommandConfig>(app));
    app.fallthrough();
    app.allow_config_extras(CLI::config_extras_mode::error);
    RunArgs run_args;
    SynthConfig synth_cfg;
    std::string synth_out;
    EvalArgs eval_args;
    add_run(app, run_args);
    add_synth(app, synth_cfg, synth_out);
    add_eval(app, eval_args);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const PipelineError& e) {
        std::cerr << "error " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
