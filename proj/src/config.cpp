#include <kbl/config.hpp>

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace kbl {

KillingFunction ModelConfig::make_zeta() const {
    if (zeta == "constant") return KillingFunction::constant(zeta_param);
    if (zeta == "abs_power") return KillingFunction::abs_power(zeta_param);
    throw config_error("model.zeta: unknown kind '" + zeta +
                       "' (custom rates are API-only; use constant or abs_power)");
}

ControlSpec ControlConfig::make_control(int d, int m) const {
    ControlSpec spec;
    if (!u.empty()) {
        if (static_cast<int>(u.size()) != d)
            throw config_error("control.u: need exactly d entries");
        spec.drift = DriftPolicy::constant(u, m);
    } else {
        spec.drift = DriftPolicy::zero(d);
    }
    if (lambda && (!piecewise_bounds.empty() || !piecewise_rates.empty()))
        throw config_error("control: lambda and piecewise_* are mutually exclusive");
    if (!piecewise_rates.empty() || !piecewise_bounds.empty())
        spec.threshold = ThresholdLaw::piecewise(piecewise_bounds, piecewise_rates);
    else if (lambda)
        spec.threshold = ThresholdLaw::exponential(*lambda);
    spec.name = "";
    return spec;
}

namespace {

struct RawConfig {
    // section -> key -> value, discovery order not needed
    std::map<std::string, std::map<std::string, std::string>> sections;
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

RawConfig parse_raw(std::istream& in, const std::string& origin) {
    RawConfig raw;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto where = [&] { return origin + ":" + std::to_string(lineno); };
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw config_error(where() + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw config_error(where() + ": empty section name");
            raw.sections[section]; // a section may legitimately be empty
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos) throw config_error(where() + ": expected key = value");
        if (section.empty()) throw config_error(where() + ": key outside any [section]");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw config_error(where() + ": empty key");
        auto& sec = raw.sections[section];
        if (sec.count(key)) throw config_error(where() + ": duplicate key " + section + "." + key);
        sec[key] = val;
    }
    return raw;
}

double parse_double(const std::string& path, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        throw config_error(path + ": expected a number, got '" + v + "'");
    return x;
}

long long parse_int(const std::string& path, const std::string& v) {
    errno = 0;
    char* end = nullptr;
    long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
        throw config_error(path + ": expected an integer, got '" + v + "'");
    return x;
}

bool parse_bool(const std::string& path, const std::string& v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw config_error(path + ": expected a boolean, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& path, const std::string& v) {
    std::string s = v;
    for (auto& ch : s)
        if (ch == ',') ch = ' ';
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_double(path, tok));
    if (out.empty()) throw config_error(path + ": expected a list of numbers");
    return out;
}

std::vector<int> parse_int_list(const std::string& path, const std::string& v) {
    auto d = parse_list(path, v);
    std::vector<int> out;
    for (double x : d) {
        int i = static_cast<int>(x);
        if (static_cast<double>(i) != x) throw config_error(path + ": expected integers");
        out.push_back(i);
    }
    return out;
}

// Pulls values out of one section while tracking which keys were consumed;
// anything left over is an unknown key.
class SectionReader {
public:
    SectionReader(const RawConfig& raw, const std::string& name) : name_(name) {
        auto it = raw.sections.find(name);
        if (it != raw.sections.end()) pending_ = it->second;
    }

    template <class F> void take(const std::string& key, F&& apply) {
        auto it = pending_.find(key);
        if (it == pending_.end()) return;
        apply(name_ + "." + key, it->second);
        pending_.erase(it);
    }

    void finish() const {
        if (!pending_.empty())
            throw config_error("unknown key '" + name_ + "." + pending_.begin()->first + "'");
    }

private:
    std::string name_;
    std::map<std::string, std::string> pending_;
};

ExperimentConfig apply_schema(const RawConfig& raw, const std::string& origin) {
    static const char* known[] = {"model", "run",      "lln",      "control", "sim",
                                  "fixed-point", "frontier", "laplace",  "varrep"};
    for (const auto& [name, _] : raw.sections) {
        bool ok = false;
        for (const char* k : known) ok = ok || name == k;
        if (!ok) throw config_error(origin + ": unknown section '[" + name + "]'");
    }

    ExperimentConfig cfg;

    SectionReader model(raw, "model");
    model.take("zeta", [&](const std::string& p, const std::string& v) {
        if (v != "constant" && v != "abs_power")
            throw config_error(p + ": must be 'constant' or 'abs_power'");
        cfg.model.zeta = v;
    });
    model.take("zeta_param",
               [&](const std::string& p, const std::string& v) { cfg.model.zeta_param = parse_double(p, v); });
    model.take("d", [&](const std::string& p, const std::string& v) {
        cfg.model.d = static_cast<int>(parse_int(p, v));
        if (cfg.model.d < 1) throw config_error(p + ": dimension must be >= 1");
    });
    model.take("T", [&](const std::string& p, const std::string& v) {
        cfg.model.T = parse_double(p, v);
        if (!(cfg.model.T > 0)) throw config_error(p + ": horizon must be positive");
    });
    model.take("m", [&](const std::string& p, const std::string& v) {
        cfg.model.m = static_cast<int>(parse_int(p, v));
        if (cfg.model.m < 1) throw config_error(p + ": need at least one step");
    });
    model.finish();

    SectionReader run(raw, "run");
    run.take("n", [&](const std::string& p, const std::string& v) {
        cfg.run.n = static_cast<int>(parse_int(p, v));
        if (cfg.run.n < 1) throw config_error(p + ": need at least one particle");
    });
    run.take("replicas", [&](const std::string& p, const std::string& v) {
        cfg.run.replicas = static_cast<int>(parse_int(p, v));
        if (cfg.run.replicas < 1) throw config_error(p + ": need at least one replica");
    });
    run.take("seed", [&](const std::string& p, const std::string& v) {
        long long s = parse_int(p, v);
        if (s < 0) throw config_error(p + ": seed must be >= 0");
        cfg.run.seed = static_cast<uint64_t>(s);
    });
    run.take("workers", [&](const std::string& p, const std::string& v) {
        cfg.run.workers = static_cast<int>(parse_int(p, v));
        if (cfg.run.workers < 1) throw config_error(p + ": need at least one worker");
    });
    run.finish();

    SectionReader lln(raw, "lln");
    lln.take("tolerance", [&](const std::string& p, const std::string& v) {
        cfg.lln.tolerance = parse_double(p, v);
        if (!(cfg.lln.tolerance > 0)) throw config_error(p + ": tolerance must be positive");
    });
    lln.take("dict_count", [&](const std::string& p, const std::string& v) {
        cfg.lln.dict_count = static_cast<int>(parse_int(p, v));
        if (cfg.lln.dict_count < 1) throw config_error(p + ": need at least one function");
    });
    lln.take("checkpoints",
             [&](const std::string& p, const std::string& v) { cfg.lln.checkpoints = parse_list(p, v); });
    lln.finish();

    SectionReader control(raw, "control");
    control.take("u", [&](const std::string& p, const std::string& v) { cfg.control.u = parse_list(p, v); });
    control.take("lambda", [&](const std::string& p, const std::string& v) {
        cfg.control.lambda = parse_double(p, v);
    });
    control.take("piecewise_bounds", [&](const std::string& p, const std::string& v) {
        cfg.control.piecewise_bounds = parse_list(p, v);
    });
    control.take("piecewise_rates", [&](const std::string& p, const std::string& v) {
        cfg.control.piecewise_rates = parse_list(p, v);
    });
    control.finish();

    SectionReader sim(raw, "sim");
    sim.take("kill_times",
             [&](const std::string& p, const std::string& v) { cfg.sim.kill_times = parse_bool(p, v); });
    sim.finish();

    SectionReader fp(raw, "fixed-point");
    fp.take("M", [&](const std::string& p, const std::string& v) {
        cfg.fixed_point.M = static_cast<int>(parse_int(p, v));
        if (cfg.fixed_point.M < 1) throw config_error(p + ": need at least one sample");
    });
    fp.take("tol", [&](const std::string& p, const std::string& v) {
        cfg.fixed_point.tol = parse_double(p, v);
        if (!(cfg.fixed_point.tol > 0)) throw config_error(p + ": tolerance must be positive");
    });
    fp.take("max_iter", [&](const std::string& p, const std::string& v) {
        cfg.fixed_point.max_iter = static_cast<int>(parse_int(p, v));
        if (cfg.fixed_point.max_iter < 1) throw config_error(p + ": need at least one iteration");
    });
    fp.take("damping", [&](const std::string& p, const std::string& v) {
        cfg.fixed_point.damping = parse_double(p, v);
        if (!(cfg.fixed_point.damping > 0 && cfg.fixed_point.damping <= 1))
            throw config_error(p + ": damping must lie in (0,1]");
    });
    fp.take("mass_tol", [&](const std::string& p, const std::string& v) {
        cfg.fixed_point.mass_tol = parse_double(p, v);
        if (!(cfg.fixed_point.mass_tol > 0)) throw config_error(p + ": tolerance must be positive");
    });
    fp.finish();

    SectionReader frontier(raw, "frontier");
    frontier.take("M", [&](const std::string& p, const std::string& v) {
        cfg.frontier.M = static_cast<int>(parse_int(p, v));
        if (cfg.frontier.M < 1) throw config_error(p + ": need at least one sample");
    });
    frontier.take("lambda_grid", [&](const std::string& p, const std::string& v) {
        cfg.frontier.lambda_grid = parse_list(p, v);
    });
    frontier.take("u_grid",
                  [&](const std::string& p, const std::string& v) { cfg.frontier.u_grid = parse_list(p, v); });
    frontier.take("bin_width", [&](const std::string& p, const std::string& v) {
        cfg.frontier.bin_width = parse_double(p, v);
        if (!(cfg.frontier.bin_width > 0)) throw config_error(p + ": bin width must be positive");
    });
    frontier.take("zero_observable", [&](const std::string& p, const std::string& v) {
        cfg.frontier.zero_observable = parse_double(p, v);
    });
    frontier.take("zero_tolerance", [&](const std::string& p, const std::string& v) {
        cfg.frontier.zero_tolerance = parse_double(p, v);
        if (!(cfg.frontier.zero_tolerance > 0)) throw config_error(p + ": tolerance must be positive");
    });
    frontier.finish();

    SectionReader laplace(raw, "laplace");
    laplace.take("alpha_values", [&](const std::string& p, const std::string& v) {
        cfg.laplace.alpha_values = parse_list(p, v);
    });
    laplace.take("beta",
                 [&](const std::string& p, const std::string& v) { cfg.laplace.beta = parse_double(p, v); });
    laplace.take("clip_lo",
                 [&](const std::string& p, const std::string& v) { cfg.laplace.clip_lo = parse_double(p, v); });
    laplace.take("clip_hi",
                 [&](const std::string& p, const std::string& v) { cfg.laplace.clip_hi = parse_double(p, v); });
    laplace.take("n_values", [&](const std::string& p, const std::string& v) {
        cfg.laplace.n_values = parse_int_list(p, v);
        for (int n : cfg.laplace.n_values)
            if (n < 2) throw config_error(p + ": particle counts must be >= 2");
    });
    laplace.take("lambda_grid", [&](const std::string& p, const std::string& v) {
        cfg.laplace.lambda_grid = parse_list(p, v);
    });
    laplace.take("u_grid",
                 [&](const std::string& p, const std::string& v) { cfg.laplace.u_grid = parse_list(p, v); });
    laplace.take("refine",
                 [&](const std::string& p, const std::string& v) { cfg.laplace.refine = parse_bool(p, v); });
    laplace.finish();

    SectionReader varrep(raw, "varrep");
    varrep.take("gh_nodes", [&](const std::string& p, const std::string& v) {
        cfg.varrep.gh_nodes = static_cast<int>(parse_int(p, v));
        if (cfg.varrep.gh_nodes < 8) throw config_error(p + ": need at least 8 nodes");
    });
    varrep.take("gl_nodes", [&](const std::string& p, const std::string& v) {
        cfg.varrep.gl_nodes = static_cast<int>(parse_int(p, v));
        if (cfg.varrep.gl_nodes < 8) throw config_error(p + ": need at least 8 nodes");
    });
    varrep.take("random_cases", [&](const std::string& p, const std::string& v) {
        cfg.varrep.random_cases = static_cast<int>(parse_int(p, v));
        if (cfg.varrep.random_cases < 0) throw config_error(p + ": count must be >= 0");
    });
    varrep.take("alphas",
                [&](const std::string& p, const std::string& v) { cfg.varrep.alphas = parse_list(p, v); });
    varrep.finish();

    return cfg;
}

} // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    RawConfig raw = parse_raw(in, origin);
    return apply_schema(raw, origin);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    RawConfig raw = parse_raw(in, path);
    return apply_schema(raw, path);
}

} // namespace kbl
