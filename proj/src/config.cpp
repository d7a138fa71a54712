#include "bud/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace bud {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

void require_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) fail(path + "." + it.key(), "unknown key");
    }
}

double get_number(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) fail(path + "." + key, "missing");
    if (!j[key].is_number()) fail(path + "." + key, "expected a number");
    return j[key].get<double>();
}

std::int64_t get_int(const json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) fail(path + "." + key, "missing");
    if (!j[key].is_number_integer()) fail(path + "." + key, "expected an integer");
    return j[key].get<std::int64_t>();
}

OutcomeModel parse_model(const json& j, const std::string& path) {
    require_keys(j, path, {"arm", "family", "params"});
    if (!j.contains("family") || !j["family"].is_string()) fail(path + ".family", "missing family");
    const std::string fam = j["family"].get<std::string>();
    if (!j.contains("params")) fail(path + ".params", "missing");
    const json& p = j["params"];
    try {
        if (fam == "bernoulli") {
            require_keys(p, path + ".params", {"theta"});
            return NefModel::bernoulli(get_number(p, path + ".params", "theta"));
        }
        if (fam == "exp_mean") {
            require_keys(p, path + ".params", {"theta"});
            return NefModel::exponential_mean(get_number(p, path + ".params", "theta"));
        }
        if (fam == "normal") {
            require_keys(p, path + ".params", {"theta", "sigma2"});
            return NefModel::normal_known_var(get_number(p, path + ".params", "theta"),
                                              get_number(p, path + ".params", "sigma2"));
        }
        if (fam == "trunc_weibull") {
            require_keys(p, path + ".params", {"rate", "shape", "t0", "theta_lo", "theta_hi"});
            const double rate = get_number(p, path + ".params", "rate");
            const double shape = get_number(p, path + ".params", "shape");
            const double t0 = p.contains("t0") ? get_number(p, path + ".params", "t0") : 3.0;
            const double lo =
                p.contains("theta_lo") ? get_number(p, path + ".params", "theta_lo") : 0.2;
            const double hi =
                p.contains("theta_hi") ? get_number(p, path + ".params", "theta_hi") : 5.0;
            return TruncatedWeibullModel::make(rate, shape, t0, lo, hi);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(path + ".params", e.what());
    }
    fail(path + ".family", "unknown family '" + fam + "'");
}

PriorSpec parse_prior(const json& j, const std::string& path, const OutcomeModel& model) {
    require_keys(j, path, {"arm", "prior"});
    if (!j.contains("prior")) fail(path + ".prior", "missing");
    const json& p = j["prior"];
    const std::string ppath = path + ".prior";
    require_keys(p, ppath, {"n0", "y0", "beta", "gamma", "normal", "grid"});
    try {
        if (p.contains("grid")) {
            require_keys(p["grid"], ppath + ".grid", {"G", "quad_nodes"});
            GridPriorSpec gs;
            if (p["grid"].contains("G")) {
                gs.G = static_cast<int>(get_int(p["grid"], ppath + ".grid", "G"));
            }
            if (p["grid"].contains("quad_nodes")) {
                gs.quad_nodes = static_cast<int>(get_int(p["grid"], ppath + ".grid", "quad_nodes"));
            }
            return gs;
        }
        const Family fam = family_of(model);
        if (p.contains("beta")) {
            const auto& arr = p["beta"];
            if (!arr.is_array() || arr.size() != 2) fail(ppath + ".beta", "expected [a, b]");
            return beta_prior(arr[0].get<double>(), arr[1].get<double>());
        }
        if (p.contains("gamma")) {
            const auto& arr = p["gamma"];
            if (!arr.is_array() || arr.size() != 2) fail(ppath + ".gamma", "expected [a, b]");
            return gamma_rate_prior(arr[0].get<double>(), arr[1].get<double>());
        }
        if (p.contains("normal")) {
            const auto& arr = p["normal"];
            if (!arr.is_array() || arr.size() != 2) fail(ppath + ".normal", "expected [mu0, v0sq]");
            const auto& m = std::get<NefModel>(model);
            return normal_prior(arr[0].get<double>(), arr[1].get<double>(), m.sigma2);
        }
        if (p.contains("n0") || p.contains("y0")) {
            const double n0 = get_number(p, ppath, "n0");
            const double y0 = get_number(p, ppath, "y0");
            double sigma2 = 1.0;
            if (fam == Family::NormalKnownVar) sigma2 = std::get<NefModel>(model).sigma2;
            return conjugate_prior(fam, n0, y0, sigma2);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(ppath, e.what());
    }
    fail(ppath, "expected one of {n0,y0}, beta, gamma, normal, grid");
}

std::vector<std::int64_t> parse_int_array(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of integers");
    std::vector<std::int64_t> out;
    for (const auto& x : j) {
        if (!x.is_number_integer()) fail(path, "expected integers");
        out.push_back(x.get<std::int64_t>());
    }
    return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    require_keys(j, "config",
                 {"design", "replications", "checkpoints", "test", "power", "diagnose", "threads",
                  "out"});
    if (!j.contains("design")) fail("design", "missing");

    RunConfig cfg;
    const json& d = j["design"];
    require_keys(d, "design", {"K", "h", "n", "seed", "record_every", "keep_history", "models",
                               "priors"});
    cfg.design.K = static_cast<int>(get_int(d, "design", "K"));
    if (cfg.design.K < 2) fail("design.K", "need at least 2 arms");
    cfg.design.h = get_number(d, "design", "h");
    cfg.design.n = get_int(d, "design", "n");
    if (d.contains("seed")) {
        if (!d["seed"].is_number_integer()) fail("design.seed", "expected an integer");
        cfg.design.seed = d["seed"].get<std::uint64_t>();
    }
    if (d.contains("record_every")) cfg.design.record_every = get_int(d, "design", "record_every");
    if (d.contains("keep_history")) {
        if (!d["keep_history"].is_boolean()) fail("design.keep_history", "expected a boolean");
        cfg.design.keep_history = d["keep_history"].get<bool>();
    }
    if (!d.contains("models")) fail("design.models", "missing");
    if (!d["models"].is_array()) fail("design.models", "expected an array");
    if (static_cast<int>(d["models"].size()) != cfg.design.K) {
        fail("design.models", "expected exactly K entries");
    }
    cfg.design.truth.resize(cfg.design.K);
    std::vector<bool> seen(cfg.design.K, false);
    for (std::size_t i = 0; i < d["models"].size(); ++i) {
        const std::string path = "design.models[" + std::to_string(i) + "]";
        const json& mj = d["models"][i];
        const auto arm = static_cast<int>(get_int(mj, path, "arm"));
        if (arm < 0 || arm >= cfg.design.K) fail(path + ".arm", "arm index out of range");
        if (seen[arm]) fail(path + ".arm", "duplicate arm");
        seen[arm] = true;
        cfg.design.truth[arm] = parse_model(mj, path);
    }
    if (!d.contains("priors")) fail("design.priors", "missing");
    if (!d["priors"].is_array() || static_cast<int>(d["priors"].size()) != cfg.design.K) {
        fail("design.priors", "expected exactly K entries");
    }
    cfg.design.priors.resize(cfg.design.K);
    std::fill(seen.begin(), seen.end(), false);
    for (std::size_t i = 0; i < d["priors"].size(); ++i) {
        const std::string path = "design.priors[" + std::to_string(i) + "]";
        const json& pj = d["priors"][i];
        const auto arm = static_cast<int>(get_int(pj, path, "arm"));
        if (arm < 0 || arm >= cfg.design.K) fail(path + ".arm", "arm index out of range");
        if (seen[arm]) fail(path + ".arm", "duplicate arm");
        seen[arm] = true;
        cfg.design.priors[arm] = parse_prior(pj, path, cfg.design.truth[arm]);
    }
    try {
        cfg.design.validate();
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    if (j.contains("replications")) {
        cfg.replications = static_cast<int>(get_int(j, "config", "replications"));
        if (cfg.replications < 1) fail("replications", "must be >= 1");
    }
    if (j.contains("checkpoints")) cfg.checkpoints = parse_int_array(j["checkpoints"], "checkpoints");
    if (cfg.checkpoints.empty()) cfg.checkpoints = {cfg.design.n};
    for (auto t : cfg.checkpoints) {
        if (t < 1 || t > cfg.design.n) fail("checkpoints", "values must lie in [1, n]");
    }
    if (j.contains("test")) {
        require_keys(j["test"], "test", {"alpha", "beta"});
        if (j["test"].contains("alpha")) cfg.test.alpha = get_number(j["test"], "test", "alpha");
        if (j["test"].contains("beta")) cfg.test.beta = get_number(j["test"], "test", "beta");
        try {
            cfg.test.validate();
        } catch (const std::exception& e) {
            throw ConfigError(e.what());
        }
    }
    if (j.contains("power")) {
        require_keys(j["power"], "power", {"t_grid", "simulate"});
        if (j["power"].contains("t_grid")) {
            cfg.power_t_grid = parse_int_array(j["power"]["t_grid"], "power.t_grid");
        }
        if (j["power"].contains("simulate")) {
            cfg.power_simulate = static_cast<int>(get_int(j["power"], "power", "simulate"));
            if (cfg.power_simulate < 0) fail("power.simulate", "must be >= 0");
        }
    }
    if (j.contains("diagnose")) {
        require_keys(j["diagnose"], "diagnose", {"draws", "fd_step", "path_n"});
        if (j["diagnose"].contains("draws")) {
            const auto v = get_int(j["diagnose"], "diagnose", "draws");
            if (v < 2) fail("diagnose.draws", "must be >= 2");
            cfg.diagnose_draws = static_cast<std::size_t>(v);
        }
        if (j["diagnose"].contains("fd_step")) {
            cfg.diagnose_fd_step = get_number(j["diagnose"], "diagnose", "fd_step");
        }
        if (j["diagnose"].contains("path_n")) {
            cfg.diagnose_path_n = get_int(j["diagnose"], "diagnose", "path_n");
            if (cfg.diagnose_path_n < 4) fail("diagnose.path_n", "must be >= 4");
        }
    }
    if (j.contains("threads")) {
        cfg.threads = static_cast<int>(get_int(j, "config", "threads"));
        if (cfg.threads < 0) fail("threads", "must be >= 0");
    }
    if (j.contains("out")) {
        if (!j["out"].is_string()) fail("out", "expected a string");
        cfg.out_dir = j["out"].get<std::string>();
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

json model_json(const OutcomeModel& m) {
    json j;
    j["family"] = family_name(family_of(m));
    if (const auto* nef = std::get_if<NefModel>(&m)) {
        j["theta"] = nef->theta;
        if (nef->kind == Family::NormalKnownVar) j["sigma2"] = nef->sigma2;
    } else {
        const auto& w = std::get<TruncatedWeibullModel>(m);
        j["rate"] = w.rate;
        j["shape"] = w.shape;
        j["t0"] = w.t0;
        j["theta_lo"] = w.theta_lo;
        j["theta_hi"] = w.theta_hi;
    }
    return j;
}

json asym_json(const RunConfig& cfg, const AsymptoticSummary& a) {
    json j;
    j["h"] = cfg.design.h;
    j["seed"] = cfg.design.seed;
    j["models"] = json::array();
    for (const auto& m : cfg.design.truth) j["models"].push_back(model_json(m));
    j["rho"] = a.rho;
    j["eta"] = a.eta;
    if (a.gamma) j["gamma"] = *a.gamma;
    if (a.var_randprob) j["var_randprob"] = *a.var_randprob;
    if (a.var_allocation) j["var_allocation"] = *a.var_allocation;
    if (a.sigma_tilde) {
        j["sigma_tilde"] = json::array();
        for (const auto& row : *a.sigma_tilde) j["sigma_tilde"].push_back(row);
    }
    return j;
}

}  // namespace

std::string asymptotics_json(const RunConfig& cfg) {
    const AsymptoticSummary a = summarize(cfg.design);
    json j = asym_json(cfg, a);
    if (a.rho.size() >= 2) j["rho1"] = a.rho[1];
    return j.dump(2) + "\n";
}

std::string summary_json(const RunConfig& cfg, const ReplicationSummary& rs) {
    json j;
    j["seed"] = cfg.design.seed;
    j["R"] = rs.R;
    j["effective_R"] = rs.effective_R;
    j["n"] = cfg.design.n;
    j["asymptotics"] = asym_json(cfg, rs.asym);
    if (rs.asym.rho.size() >= 2) j["rho"] = rs.asym.rho[1];
    j["checkpoints"] = json::array();
    for (const auto& cs : rs.checkpoints) {
        json c;
        c["t"] = cs.t;
        c["p1_mean"] = cs.p_mv.mean;
        c["phat1_mean"] = cs.phat_mv.mean;
        if (cs.p_mv.n >= 2) {
            c["p1_var"] = cs.p_mv.var;
            c["phat1_var"] = cs.phat_mv.var;
            c["p1_quantiles"] = cs.p_quantiles;
            c["phat1_quantiles"] = cs.phat_quantiles;
            c["std_p_var"] = cs.std_p_mv.var;
            c["std_phat_var"] = cs.std_phat_mv.var;
        }
        if (std::isfinite(cs.ks_p)) c["ks_p"] = cs.ks_p;
        if (std::isfinite(cs.ks_phat)) c["ks_phat"] = cs.ks_phat;
        j["checkpoints"].push_back(c);
    }
    j["failures"] = json::array();
    for (const auto& f : rs.failures) {
        j["failures"].push_back({{"replicate", f.replicate}, {"reason", f.reason}});
    }
    return j.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    fs::create_directories(dir);
    const fs::path tmp = dir / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << contents;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

}  // namespace bud
