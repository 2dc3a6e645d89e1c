#include "wavelab/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "wavelab/weight.hpp"

namespace wavelab {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_doubles(const std::string& value, int line_no) {
    std::vector<double> out;
    std::istringstream iss(value);
    std::string tok;
    while (iss >> tok) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("line " + std::to_string(line_no) + ": not a number: '" + tok +
                              "'");
        }
    }
    return out;
}

double parse_double(const std::string& value, int line_no) {
    const std::vector<double> v = parse_doubles(value, line_no);
    if (v.size() != 1)
        throw ConfigError("line " + std::to_string(line_no) + ": expected one number");
    return v[0];
}

int parse_int(const std::string& value, int line_no) {
    const double d = parse_double(value, line_no);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d)
        throw ConfigError("line " + std::to_string(line_no) + ": expected an integer");
    return i;
}

std::uint64_t parse_u64(const std::string& value, int line_no) {
    try {
        std::size_t pos = 0;
        const std::uint64_t v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line_no) + ": not an unsigned integer: '" +
                          value + "'");
    }
}

}  // namespace

RunConfig parse_config_string(const std::string& text) {
    RunConfig cfg;
    // Distinguish "params omitted" from "params set empty".
    bool metric_params_set = false, weight_params_set = false, noise_set = false;

    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(line_no) + ": unterminated section");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "metric" && section != "weight" && section != "mesh" &&
                section != "time" && section != "carleman" && section != "family" &&
                section != "inverse" && section != "run")
                throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" +
                                  section + "]");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                              "' outside any section");

        auto unknown = [&]() -> ConfigError {
            return ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key +
                               "' in section [" + section + "]");
        };

        if (section == "metric") {
            if (key == "name")
                cfg.metric_name = value;
            else if (key == "params") {
                cfg.metric_params = parse_doubles(value, line_no);
                metric_params_set = true;
            } else
                throw unknown();
        } else if (section == "weight") {
            if (key == "name")
                cfg.weight_name = value;
            else if (key == "params") {
                cfg.weight_params = parse_doubles(value, line_no);
                weight_params_set = true;
            } else
                throw unknown();
        } else if (section == "mesh") {
            if (key == "r0")
                cfg.r0 = parse_double(value, line_no);
            else if (key == "R")
                cfg.R = parse_double(value, line_no);
            else if (key == "n_r")
                cfg.n_r = parse_int(value, line_no);
            else if (key == "n_theta")
                cfg.n_theta = parse_int(value, line_no);
            else
                throw unknown();
        } else if (section == "time") {
            if (key == "T")
                cfg.T = parse_double(value, line_no);
            else if (key == "n_t")
                cfg.n_t = parse_int(value, line_no);
            else if (key == "tau")
                cfg.tau = parse_double(value, line_no);
            else
                throw unknown();
        } else if (section == "carleman") {
            if (key == "gamma_rule")
                cfg.gamma_rule = value;
            else if (key == "gamma")
                cfg.gamma_explicit = parse_double(value, line_no);
            else if (key == "s_count")
                cfg.s_count = parse_int(value, line_no);
            else if (key == "corpus_size")
                cfg.corpus_size = parse_int(value, line_no);
            else
                throw unknown();
        } else if (section == "family") {
            if (key == "count")
                cfg.family_count = parse_int(value, line_no);
            else
                throw unknown();
        } else if (section == "inverse") {
            if (key == "reg_lambda")
                cfg.reg_lambda = parse_double(value, line_no);
            else if (key == "max_iter")
                cfg.max_iter = parse_int(value, line_no);
            else if (key == "noise_levels") {
                cfg.noise_levels = parse_doubles(value, line_no);
                noise_set = true;
            } else if (key == "refine")
                cfg.refine = parse_int(value, line_no);
            else
                throw unknown();
        } else if (section == "run") {
            if (key == "seed")
                cfg.seed = parse_u64(value, line_no);
            else if (key == "out_dir")
                cfg.out_dir = value;
            else
                throw unknown();
        }
    }
    (void)metric_params_set;
    (void)weight_params_set;
    (void)noise_set;
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_string(ss.str());
}

std::string config_echo(const RunConfig& cfg) {
    std::ostringstream os;
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    auto list = [&](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + num(v[i]);
        return s;
    };
    os << "[metric]\nname = " << cfg.metric_name << "\nparams = " << list(cfg.metric_params)
       << "\n[weight]\nname = " << cfg.weight_name << "\nparams = " << list(cfg.weight_params)
       << "\n[mesh]\nr0 = " << num(cfg.r0) << "\nR = " << num(cfg.R) << "\nn_r = " << cfg.n_r
       << "\nn_theta = " << cfg.n_theta << "\n[time]\nT = " << num(cfg.T)
       << "\nn_t = " << cfg.n_t << "\ntau = " << num(cfg.tau)
       << "\n[carleman]\ngamma_rule = " << cfg.gamma_rule
       << "\ngamma = " << num(cfg.gamma_explicit) << "\ns_count = " << cfg.s_count
       << "\ncorpus_size = " << cfg.corpus_size << "\n[family]\ncount = " << cfg.family_count
       << "\n[inverse]\nreg_lambda = " << num(cfg.reg_lambda)
       << "\nmax_iter = " << cfg.max_iter << "\nnoise_levels = " << list(cfg.noise_levels)
       << "\nrefine = " << cfg.refine << "\n[run]\nseed = " << cfg.seed
       << "\nout_dir = " << cfg.out_dir << "\n";
    return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
    const std::string echo = config_echo(cfg);
    std::uint64_t h = 1469598103934665603ull;
    for (const char c : echo) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

void validate_config(const RunConfig& cfg) {
    if (cfg.n_r < 8 || cfg.n_theta < 8)
        throw ConfigError("mesh resolution too coarse: n_r and n_theta must be >= 8");
    if (cfg.n_t < 2) throw ConfigError("n_t must be >= 2");
    if (!(cfg.r0 > 0.0) || !(cfg.R > cfg.r0))
        throw ConfigError("mesh radii must satisfy 0 < r0 < R");
    if (cfg.s_count < 2) throw ConfigError("s_count must be >= 2");
    if (cfg.corpus_size < 1) throw ConfigError("corpus_size must be >= 1");
    if (cfg.family_count < 5) throw ConfigError("family count must be >= 5");
    if (cfg.reg_lambda < 0.0) throw ConfigError("reg_lambda must be nonnegative");
    if (cfg.max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (cfg.refine < 1) throw ConfigError("refine must be >= 1");
    for (const double nl : cfg.noise_levels)
        if (nl < 0.0) throw ConfigError("noise levels must be nonnegative");

    const WeightFunction phi = make_weight(cfg.weight_name, cfg.weight_params);
    const MetricField metric = make_metric(cfg.metric_name, cfg.metric_params);
    const AnnularMesh mesh = build_annulus_mesh(cfg.r0, cfg.R, cfg.n_r, cfg.n_theta);
    const GeometricConstants gc = geometric_constants(phi, metric, mesh);
    GammaRule rule;
    if (cfg.gamma_rule == "midpoint")
        rule = GammaRule::Midpoint;
    else if (cfg.gamma_rule == "near-delta")
        rule = GammaRule::NearDelta;
    else if (cfg.gamma_rule == "explicit")
        rule = GammaRule::Explicit;
    else
        throw ConfigError("unknown gamma_rule '" + cfg.gamma_rule + "'");
    carleman_params(gc, cfg.T, cfg.tau, rule, cfg.gamma_explicit);
}

}  // namespace wavelab
