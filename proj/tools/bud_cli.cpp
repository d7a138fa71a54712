#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>

#include "bud/config.hpp"
#include "bud/sa_diagnostics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
};

bud::RunConfig load_with_overrides(const GlobalOpts& g) {
    bud::RunConfig cfg = bud::load_config(g.config_path);
    if (g.seed) cfg.design.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    if (g.out_dir) cfg.out_dir = *g.out_dir;
    return cfg;
}

void write_standardized_csv(const bud::RunConfig& cfg, const bud::ReplicationSummary& rs) {
    for (const auto& cs : rs.checkpoints) {
        if (cs.std_phat.empty()) continue;
        std::ostringstream os;
        os.precision(17);
        os << "std_phat,std_p\n";
        for (std::size_t i = 0; i < cs.std_phat.size(); ++i) {
            os << cs.std_phat[i] << "," << cs.std_p[i] << "\n";
        }
        bud::write_file_atomic(fs::path(cfg.out_dir) / ("standardized_t" + std::to_string(cs.t) + ".csv"),
                               os.str());
    }
}

int cmd_simulate(const GlobalOpts& g) {
    const bud::RunConfig cfg = load_with_overrides(g);
    const bud::Scenario sc(cfg.design);
    auto [st, rec] = bud::run_trial(sc);
    std::ostringstream traj;
    bud::write_trajectory_csv(rec, traj);
    const auto rs = bud::run_replications(cfg.design, cfg.replications, cfg.checkpoints, cfg.threads);
    bud::write_file_atomic(fs::path(cfg.out_dir) / "trajectory.csv", traj.str());
    bud::write_file_atomic(fs::path(cfg.out_dir) / "summary.json", bud::summary_json(cfg, rs));
    write_standardized_csv(cfg, rs);
    return 0;
}

int cmd_asymptotics(const GlobalOpts& g) {
    const bud::RunConfig cfg = load_with_overrides(g);
    bud::write_file_atomic(fs::path(cfg.out_dir) / "asymptotics.json", bud::asymptotics_json(cfg));
    return 0;
}

int cmd_power(const GlobalOpts& g) {
    const bud::RunConfig cfg = load_with_overrides(g);
    if (cfg.design.K != 2) throw std::runtime_error("power: two-arm designs only");
    const auto asym = bud::summarize(cfg.design);
    const double th0 = bud::true_mean(cfg.design.truth[0]);
    const double th1 = bud::true_mean(cfg.design.truth[1]);
    const double eta0 = asym.eta[0];
    const double eta1 = asym.eta[1];

    std::vector<std::int64_t> grid = cfg.power_t_grid;
    if (grid.empty()) grid = {cfg.design.n};

    json j;
    j["seed"] = cfg.design.seed;
    j["alpha"] = cfg.test.alpha;
    j["beta"] = cfg.test.beta;
    j["eta"] = asym.eta;
    if (th1 > th0) {
        j["sample_size"] = bud::sample_size(th0, th1, eta0, eta1, cfg.test.alpha, cfg.test.beta);
    }

    std::ostringstream csv;
    csv.precision(12);
    const bool mc = cfg.power_simulate > 0;
    bud::ErrorRateReport rates;
    if (mc) {
        bud::DesignConfig d = cfg.design;
        d.n = *std::max_element(grid.begin(), grid.end());
        rates = bud::error_rates(d, cfg.power_simulate, grid, cfg.test.alpha, cfg.threads);
    }
    csv << (mc ? "t,power_asymptotic,power_mc,mc_se\n" : "t,power_asymptotic\n");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double pa = th1 > th0 ? bud::power_approx(th0, th1, eta0, eta1,
                                                        static_cast<double>(grid[i]), cfg.test.alpha)
                                    : bud::kNaN;
        csv << grid[i] << "," << pa;
        if (mc) csv << "," << rates.points[i].rate << "," << rates.points[i].se;
        csv << "\n";
    }
    bud::write_file_atomic(fs::path(cfg.out_dir) / "power_curve.csv", csv.str());
    bud::write_file_atomic(fs::path(cfg.out_dir) / "power.json", j.dump(2) + "\n");
    return 0;
}

int cmd_diagnose(const GlobalOpts& g) {
    const bud::RunConfig cfg = load_with_overrides(g);
    if (cfg.design.K != 2) throw std::runtime_error("diagnose: two-arm designs only");
    const auto* m0 = std::get_if<bud::NefModel>(&cfg.design.truth[0]);
    const auto* m1 = std::get_if<bud::NefModel>(&cfg.design.truth[1]);
    if (!m0 || !m1 || m0->kind != m1->kind) {
        throw std::runtime_error("diagnose: needs a two-arm QVF (NEF) design");
    }
    const bud::QvfPair pair{*m0, *m1, cfg.design.h};
    const bud::SAState w = bud::stationary_point(pair);

    json j;
    j["seed"] = cfg.design.seed;
    j["stationary_point"] = {w.p1, w.y1, w.y0};
    const auto d = bud::drift(pair, w);
    j["drift_at_stationary"] = d;

    const auto J = bud::jacobian_at(pair, w, cfg.diagnose_fd_step);
    j["jacobian"] = json::array();
    for (const auto& row : J) j["jacobian"].push_back(row);

    const auto gt = bud::gamma_tilde(*m0, *m1, cfg.design.h);
    const auto mc = bud::noise_mc_moments(pair, w, cfg.diagnose_draws, cfg.design.seed, cfg.threads);
    json cov_rows = json::array(), gt_rows = json::array(), se_rows = json::array();
    for (int r = 0; r < 3; ++r) {
        cov_rows.push_back(mc.cov[r]);
        gt_rows.push_back(gt[r]);
        se_rows.push_back(mc.cov_se[r]);
    }
    j["noise_covariance_mc"] = cov_rows;
    j["gamma_tilde"] = gt_rows;
    j["noise_covariance_se"] = se_rows;
    j["martingale_mean"] = mc.mean;
    j["martingale_mean_se"] = mc.mean_se;
    j["mc_draws"] = mc.draws;

    bud::DesignConfig path_cfg = cfg.design;
    path_cfg.n = cfg.diagnose_path_n;
    path_cfg.record_every = 1;
    const bud::Scenario sc(path_cfg);
    auto [st, rec] = bud::run_trial(sc);
    const auto windows = bud::residual_decay(pair, rec);
    json win = json::array();
    for (std::size_t i = 0; i < windows.k.size(); ++i) {
        win.push_back({{"k", windows.k[i]},
                       {"count", windows.count[i]},
                       {"median_abs_residual_times_t", windows.median_abs_t[i]}});
    }
    j["residual_windows"] = win;
    j["residual_no_upward_trend"] = windows.no_upward_trend();

    bud::write_file_atomic(fs::path(cfg.out_dir) / "diagnostics.json", j.dump(2) + "\n");
    return 0;
}

int cmd_compare(const GlobalOpts& g) {
    const bud::RunConfig cfg = load_with_overrides(g);
    const auto rs = bud::run_replications(cfg.design, cfg.replications, cfg.checkpoints, cfg.threads);
    json j;
    j["seed"] = cfg.design.seed;
    j["R"] = rs.R;
    j["effective_R"] = rs.effective_R;
    if (rs.asym.rho.size() >= 2) j["rho1"] = rs.asym.rho[1];
    json rows = json::array();
    for (const auto& cs : rs.checkpoints) {
        json row;
        row["t"] = cs.t;
        row["phat1_mean"] = cs.phat_mv.mean;
        row["p1_mean"] = cs.p_mv.mean;
        if (cs.std_phat_mv.n >= 2) {
            row["empirical_var_std_phat"] = cs.std_phat_mv.var;
            row["empirical_var_std_p"] = cs.std_p_mv.var;
        }
        if (rs.asym.var_allocation) {
            row["asymptotic_var_phat"] = *rs.asym.var_allocation;
            if (cs.std_phat_mv.n >= 2) {
                row["ratio_phat"] = cs.std_phat_mv.var / *rs.asym.var_allocation;
            }
        }
        if (rs.asym.var_randprob) {
            row["asymptotic_var_p"] = *rs.asym.var_randprob;
            if (cs.std_p_mv.n >= 2) row["ratio_p"] = cs.std_p_mv.var / *rs.asym.var_randprob;
        }
        if (std::isfinite(cs.ks_phat)) row["ks_phat"] = cs.ks_phat;
        if (std::isfinite(cs.ks_p)) row["ks_p"] = cs.ks_p;
        rows.push_back(row);
    }
    j["checkpoints"] = rows;
    bud::write_file_atomic(fs::path(cfg.out_dir) / "compare.json", j.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BUD trial simulator and large-sample operating characteristics"};
    app.require_subcommand(1);

    GlobalOpts g;
    std::uint64_t seed_val = 0;
    int threads_val = 0;
    std::string out_val;

    const std::map<std::string, std::pair<std::string, int (*)(const GlobalOpts&)>> subs = {
        {"simulate",
         {"run replicated trials; write summary.json, trajectory.csv, standardized CSVs",
          cmd_simulate}},
        {"asymptotics",
         {"emit the asymptotic summary (rho, Gamma, variances, Sigma~, eta)", cmd_asymptotics}},
        {"power", {"asymptotic power curve, sample size, optional Monte Carlo power", cmd_power}},
        {"diagnose",
         {"stochastic-approximation diagnostics: drift, Jacobian, noise covariance, residuals",
          cmd_diagnose}},
        {"compare", {"asymptotic vs Monte Carlo comparison tables", cmd_compare}},
    };

    int (*handler)(const GlobalOpts&) = nullptr;
    for (const auto& [name, desc_fn] : subs) {
        CLI::App* sub = app.add_subcommand(name, desc_fn.first);
        sub->add_option("config", g.config_path, "path to the JSON run config")->required();
        CLI::Option* so = sub->add_option("--seed", seed_val, "override the config seed");
        CLI::Option* to = sub->add_option("--threads", threads_val, "cap worker threads");
        CLI::Option* oo = sub->add_option("--out", out_val, "output directory");
        sub->callback([&, so, to, oo, fn = desc_fn.second] {
            if (so->count() > 0) g.seed = seed_val;
            if (to->count() > 0) g.threads = threads_val;
            if (oo->count() > 0) g.out_dir = out_val;
            handler = fn;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        return handler(g);
    } catch (const bud::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
