#include "wavelab/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "wavelab/carleman.hpp"
#include "wavelab/inverse.hpp"

namespace wavelab {

namespace {

using nlohmann::json;

struct Lab {
    WeightFunction phi;
    MetricField metric;
    AnnularMesh mesh;
    TimeGrid tgrid;
    CarlemanParams params;
};

Lab build_lab(const RunConfig& cfg) {
    Lab lab;
    lab.phi = make_weight(cfg.weight_name, cfg.weight_params);
    lab.metric = make_metric(cfg.metric_name, cfg.metric_params);
    lab.mesh = build_annulus_mesh(cfg.r0, cfg.R, cfg.n_r, cfg.n_theta);
    lab.tgrid = build_time_grid(cfg.T, cfg.n_t);
    GammaRule rule = GammaRule::Midpoint;
    if (cfg.gamma_rule == "near-delta") rule = GammaRule::NearDelta;
    if (cfg.gamma_rule == "explicit") rule = GammaRule::Explicit;
    lab.params = carleman_params(geometric_constants(lab.phi, lab.metric, lab.mesh), cfg.T,
                                 cfg.tau, rule, cfg.gamma_explicit);
    return lab;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << header << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt(row[i]);
        out << "\n";
    }
}

json report_skeleton(const std::string& command, const RunConfig& cfg) {
    json j;
    j["schema"] = "wavelab-report-v1";
    j["command"] = command;
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    j["config_hash"] = hash;
    j["config"] = config_echo(cfg);
    return j;
}

void write_report(const json& j, const std::string& out_dir, const std::string& command) {
    std::ofstream out(out_dir + "/" + command + ".json", std::ios::binary);
    out << j.dump(2) << "\n";
}

// Deterministic catalog of admissible family members.
std::vector<AdmissibleSource> make_family(int count, const Lab& lab) {
    std::vector<AdmissibleSource> fam;
    for (int m = 0; m < count; ++m) {
        const std::vector<double> a_params = {2.0 + 0.25 * m, 0.6, -0.3 * (m % 2),
                                              0.15, 0.1 * ((m + 1) % 2)};
        std::string b_name;
        std::vector<double> b_params;
        switch (m % 3) {
            case 0:
                b_name = "t2-smoothstep";
                b_params = {1.0, 0.3 * lab.tgrid.T + 0.05 * m};
                break;
            case 1:
                b_name = "t3";
                b_params = {0.5 + 0.1 * m};
                break;
            default:
                b_name = "sin-ramp";
                b_params = {0.8, 1.0 + 0.25 * m};
                break;
        }
        fam.push_back(make_admissible_source("trig", a_params, b_name, b_params, lab.mesh,
                                             lab.tgrid, lab.metric));
    }
    return fam;
}

// Carleman corpus: t^2-ramped bumps vanishing on both rings, coefficients
// drawn from the named corpus stream.
std::vector<SpaceTimeField> make_corpus(int count, std::uint64_t seed, const Lab& lab) {
    std::mt19937_64 rng(stream_seed(seed, "corpus"));
    std::uniform_real_distribution<double> coef(-0.4, 0.4);
    std::vector<SpaceTimeField> corpus;
    for (int m = 0; m < count; ++m) {
        const double c1 = coef(rng), s1 = coef(rng), c2 = coef(rng);
        SpaceTimeField z = make_space_time_field(lab.mesh, lab.tgrid);
        for (int k = 0; k <= lab.tgrid.n_t; ++k) {
            const double t2 = sqr(lab.tgrid.t(k));
            for (int i = 0; i < lab.mesh.n_r; ++i) {
                for (int j = 0; j < lab.mesh.n_theta; ++j) {
                    const double r = lab.mesh.r[i];
                    const double th = lab.mesh.theta[j];
                    z.at(k, lab.mesh.idx(i, j)) =
                        t2 * sqr((r - lab.mesh.r0) * (lab.mesh.R - r)) *
                        (1.0 + c1 * std::cos(th) + s1 * std::sin(th) +
                         c2 * std::cos(2.0 * th));
                }
            }
        }
        corpus.push_back(std::move(z));
    }
    return corpus;
}

SpaceTimeField ibp_probe(const AnnularMesh& mesh, const TimeGrid& tgrid) {
    SpaceTimeField z = make_space_time_field(mesh, tgrid);
    for (int k = 0; k <= tgrid.n_t; ++k) {
        const double t2 = sqr(tgrid.t(k));
        for (int i = 0; i < mesh.n_r; ++i)
            for (int j = 0; j < mesh.n_theta; ++j) {
                const double r = mesh.r[i];
                z.at(k, mesh.idx(i, j)) = t2 * sqr((r - mesh.r0) * (mesh.R - r)) *
                                          (1.0 + 0.3 * mesh.cos_t[j]);
            }
    }
    return z;
}

bool run_check_weight(const RunConfig& cfg, const Lab& lab, const std::string& out_dir,
                      json& j) {
    const AdmissibilityReport rep = check_admissible(lab.phi, lab.metric);
    const GeometricConstants gc = geometric_constants(lab.phi, lab.metric, lab.mesh);
    j["admissibility"] = {{"grad_inf", rep.grad_inf},
                          {"hess_inf", rep.hess_inf},
                          {"sublevel_bounded", rep.sublevel_bounded},
                          {"certified", rep.certified},
                          {"admissible", rep.admissible},
                          {"sample_count", rep.sample_count}};
    j["constants"] = {{"m_frak", gc.m_frak},
                      {"delta", gc.delta},
                      {"t_star", gc.t_star},
                      {"gamma", lab.params.gamma},
                      {"mu", lab.params.mu}};
    write_csv(out_dir + "/constants.csv", "m_frak,delta,t_star,gamma,mu,grad_inf,hess_inf",
              {{gc.m_frak, gc.delta, gc.t_star, lab.params.gamma, lab.params.mu, rep.grad_inf,
                rep.hess_inf}});
    return rep.admissible;
}

bool run_solve_forward(const RunConfig& cfg, const Lab& lab, const std::string& out_dir,
                       json& j) {
    const AdmissibleSource src = make_family(1, lab)[0];
    const ForwardSolution sol =
        solve_forward(boundary_data(src, lab.tgrid), lab.metric, lab.mesh, lab.tgrid);
    const DiscreteOperators ops(lab.metric, lab.mesh);
    std::vector<std::vector<double>> rows;
    for (int k = 0; k <= lab.tgrid.n_t; ++k)
        rows.push_back({lab.tgrid.t(k), energy(ops, sol.u, k)});
    write_csv(out_dir + "/energy.csv", "t,energy", rows);
    j["stats"] = {{"cfl_ratio", sol.stats.cfl_ratio},
                  {"max_abs", sol.stats.max_abs},
                  {"residual_norm", sol.stats.residual_norm},
                  {"r_trunc", sol.stats.r_trunc},
                  {"r_trunc_required", sol.stats.r_trunc_required},
                  {"c_max", sol.stats.c_max},
                  {"certified", sol.stats.truncation_certificate}};
    return sol.stats.truncation_certificate && std::isfinite(sol.stats.max_abs);
}

bool run_verify_energy(const RunConfig& cfg, const Lab& lab, const std::string& out_dir,
                       json& j) {
    const std::vector<AdmissibleSource> fam = make_family(10, lab);
    std::vector<std::vector<double>> rows;
    bool ok = true;
    for (std::size_t m = 0; m < fam.size(); ++m) {
        const ForwardSolution sol =
            solve_forward(boundary_data(fam[m], lab.tgrid), lab.metric, lab.mesh, lab.tgrid);
        const EnergyReport rep = verify_energy_estimate(sol, lab.metric);
        double min_margin = rep.margins.empty() ? 0.0 : rep.margins[0];
        for (const double v : rep.margins) min_margin = std::min(min_margin, v);
        rows.push_back({static_cast<double>(m), min_margin, rep.tolerance, rep.max_energy});
        ok = ok && rep.ok;
    }
    write_csv(out_dir + "/energy_margins.csv", "member,min_margin,tolerance,max_energy", rows);
    j["ok"] = ok;
    j["members"] = fam.size();
    return ok;
}

bool run_verify_carleman(const RunConfig& cfg, const Lab& lab, const std::string& out_dir,
                         json& j) {
    const std::vector<SpaceTimeField> corpus = make_corpus(cfg.corpus_size, cfg.seed, lab);
    const std::vector<double> sweep = default_s_sweep(lab.params, cfg.s_count);
    const CarlemanReport rep = verify_carleman(corpus, lab.phi, lab.params, sweep, lab.metric);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < rep.s_values.size(); ++i)
        rows.push_back({rep.s_values[i], rep.ratios[i]});
    write_csv(out_dir + "/carleman_ratios.csv", "s,min_ratio", rows);
    j["fitted_C"] = rep.fitted_C;
    j["empirical_s_star"] = rep.empirical_s_star;
    j["slope_gradient"] = rep.slope_gradient;
    j["slope_zeroth"] = rep.slope_zeroth;
    j["corpus_size"] = rep.corpus_size;
    j["excluded"] = rep.excluded;
    return rep.fitted_C > 0.0 && std::abs(rep.slope_gradient - 1.0) <= 0.1 &&
           std::abs(rep.slope_zeroth - 3.0) <= 0.1;
}

bool run_verify_ibp(const RunConfig& cfg, const Lab& lab, const std::string& out_dir,
                    json& j) {
    std::vector<std::vector<double>> rows;
    bool ok = true;
    for (const double s : {0.5, 2.0}) {
        double prev_rel = 0.0;
        for (int level = 0; level < 2; ++level) {
            const int factor = 1 << level;
            const AnnularMesh mesh = build_annulus_mesh(
                cfg.r0, cfg.R, (cfg.n_r - 1) * factor + 1, cfg.n_theta * factor);
            const TimeGrid tg = build_time_grid(cfg.T, cfg.n_t * factor);
            const IbpLedger led =
                verify_ibp_identity(ibp_probe(mesh, tg), lab.phi, lab.params, s, lab.metric);
            const double scale = std::abs(led.inner_product) + std::abs(led.volume_total());
            const double rel = std::abs(led.residual) / std::max(1e-300, scale);
            rows.push_back({s, static_cast<double>(factor), led.inner_product,
                            led.boundary_total(), led.volume_total(), led.residual, rel,
                            led.i_sum_residual});
            if (level == 0)
                ok = ok && rel <= 0.05 &&
                     std::abs(led.i_sum_residual) <= 1e-10 * std::max(1.0, scale);
            else
                ok = ok && rel < prev_rel;
            prev_rel = rel;
        }
    }
    write_csv(out_dir + "/ibp_ledger.csv",
              "s,refine,inner_product,boundary,volume,residual,rel_residual,i_sum_residual",
              rows);
    j["ok"] = ok;
    return ok;
}

bool run_stability_sweep(const RunConfig& cfg, const Lab& lab, const std::string& out_dir,
                         json& j) {
    const std::vector<AdmissibleSource> fam = make_family(cfg.family_count, lab);
    const StabilityReport rep = verify_theorem(fam, lab.params, default_theta_grid(),
                                               lab.metric, lab.mesh, lab.tgrid);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < rep.theta_grid.size(); ++i)
        rows.push_back({rep.theta_grid[i], rep.fitted_C[i], rep.spread[i]});
    write_csv(out_dir + "/stability_sweep.csv", "theta,fitted_C,spread", rows);
    std::vector<std::vector<double>> mrows;
    for (const auto& m : rep.family)
        mrows.push_back({m.norms.D_full, m.norms.D_outer, m.norms.f_norm, m.norms.a_norm,
                         m.norms.b_norm});
    write_csv(out_dir + "/stability_members.csv", "D_full,D_outer,f_norm,a_norm,b_norm",
              mrows);
    j["best_theta"] = rep.best_theta;
    j["best_C"] = rep.best_C;
    j["best_spread"] = rep.best_spread;
    j["implied_c"] = rep.implied_c;
    j["corollary_C"] = rep.corollary_C;
    j["tangential_margin"] = rep.tangential_margin;
    j["anomaly"] = rep.anomaly;
    j["success"] = rep.success;
    double scale = 1.0;
    for (const auto& m : rep.family) scale = std::max(scale, m.norms.D_full);
    return rep.success && rep.tangential_margin <= 1e-8 * scale;
}

bool run_reconstruct(const RunConfig& cfg, const Lab& lab, const std::string& out_dir,
                     json& j) {
    const std::vector<double> a_params = {2.0, 1.0};
    const std::vector<double> b_params = {1.0, 0.4 * cfg.T};
    const OuterData data =
        synthesize_outer_data("trig", a_params, "t2-smoothstep", b_params, lab.metric,
                              lab.mesh, lab.tgrid, cfg.refine);
    const AdmissibleSource truth = make_admissible_source("trig", a_params, "t2-smoothstep",
                                                          b_params, lab.mesh, lab.tgrid,
                                                          lab.metric);
    const ReconstructionResult rec = reconstruct(data, truth.b, cfg.reg_lambda, cfg.max_iter,
                                                 lab.metric, lab.mesh, lab.tgrid, &truth.a);
    std::vector<std::vector<double>> rows;
    for (int jn = 0; jn < lab.mesh.n_theta; ++jn)
        rows.push_back({lab.mesh.theta[jn], truth.a[jn], rec.a_hat[jn]});
    write_csv(out_dir + "/reconstruction.csv", "theta,a_true,a_hat", rows);
    std::vector<std::vector<double>> hist;
    for (std::size_t i = 0; i < rec.objective_history.size(); ++i)
        hist.push_back({static_cast<double>(i), rec.objective_history[i]});
    write_csv(out_dir + "/objective_history.csv", "iteration,objective", hist);

    bool monotone = true;
    for (std::size_t i = 1; i < rec.objective_history.size(); ++i)
        monotone = monotone && rec.objective_history[i] <= rec.objective_history[i - 1];
    bool ok = monotone && rec.rel_error >= 0.0 && rec.rel_error <= 0.05;

    j["rel_error"] = rec.rel_error;
    j["iterations"] = rec.iterations;
    j["min_abs_a"] = rec.min_abs_a;
    j["max_tangential"] = rec.max_tangential;
    j["monotone"] = monotone;

    if (cfg.noise_levels.size() >= 2) {
        const NoiseSweep sweep =
            noise_sweep(cfg.noise_levels, cfg.seed, "trig", a_params, "t2-smoothstep",
                        b_params, cfg.reg_lambda, cfg.max_iter, lab.metric, lab.mesh,
                        lab.tgrid);
        std::vector<std::vector<double>> nrows;
        for (std::size_t i = 0; i < sweep.levels.size(); ++i)
            nrows.push_back({sweep.levels[i], sweep.rel_errors[i]});
        write_csv(out_dir + "/noise_sweep.csv", "noise_level,rel_error", nrows);
        j["noise_slope"] = sweep.slope;
        ok = ok && sweep.slope > 0.0;
    }
    return ok;
}

}  // namespace

int run_command(const std::string& command, const RunConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const Lab lab = build_lab(cfg);

    const std::vector<std::string> stages =
        command == "all" ? std::vector<std::string>{"check-weight", "solve-forward",
                                                    "verify-energy", "verify-carleman",
                                                    "verify-ibp", "stability-sweep",
                                                    "reconstruct"}
                         : std::vector<std::string>{command};

    json all = report_skeleton(command, cfg);
    bool all_ok = true;
    for (const std::string& stage : stages) {
        json j = report_skeleton(stage, cfg);
        const auto t0 = std::chrono::steady_clock::now();
        bool ok;
        if (stage == "check-weight")
            ok = run_check_weight(cfg, lab, out_dir, j);
        else if (stage == "solve-forward")
            ok = run_solve_forward(cfg, lab, out_dir, j);
        else if (stage == "verify-energy")
            ok = run_verify_energy(cfg, lab, out_dir, j);
        else if (stage == "verify-carleman")
            ok = run_verify_carleman(cfg, lab, out_dir, j);
        else if (stage == "verify-ibp")
            ok = run_verify_ibp(cfg, lab, out_dir, j);
        else if (stage == "stability-sweep")
            ok = run_stability_sweep(cfg, lab, out_dir, j);
        else if (stage == "reconstruct")
            ok = run_reconstruct(cfg, lab, out_dir, j);
        else
            throw ConfigError("unknown command '" + stage + "'");
        const auto t1 = std::chrono::steady_clock::now();
        j["passed"] = ok;
        j["wall_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
        write_report(j, out_dir, stage);
        if (command == "all") {
            all["stages"][stage] = {{"passed", ok}, {"wall_ms", j["wall_ms"]}};
        }
        all_ok = all_ok && ok;
    }
    if (command == "all") {
        all["passed"] = all_ok;
        write_report(all, out_dir, "all");
    }
    return all_ok ? 0 : 1;
}

int cli_main(const std::vector<std::string>& args) {
    std::string command, config_path, out_override;
    bool have_seed = false;
    std::uint64_t seed_override = 0;

    try {
        for (std::size_t i = 0; i < args.size(); ++i) {
            const std::string& a = args[i];
            auto next = [&]() -> const std::string& {
                if (i + 1 >= args.size()) throw ConfigError("missing value after " + a);
                return args[++i];
            };
            if (a == "--config")
                config_path = next();
            else if (a == "--out")
                out_override = next();
            else if (a == "--seed") {
                seed_override = std::stoull(next());
                have_seed = true;
            } else if (a == "--help" || a == "-h") {
                std::fprintf(stdout,
                             "usage: wavelab_cli <command> --config <path> [--out <dir>] "
                             "[--seed <u64>]\ncommands: check-weight solve-forward "
                             "verify-carleman verify-ibp verify-energy stability-sweep "
                             "reconstruct all\n");
                return 0;
            } else if (!a.empty() && a[0] == '-')
                throw ConfigError("unknown option " + a);
            else if (command.empty())
                command = a;
            else
                throw ConfigError("unexpected argument " + a);
        }
        if (command.empty()) throw ConfigError("missing command");
        if (config_path.empty()) throw ConfigError("missing --config");

        RunConfig cfg = parse_config_file(config_path);
        if (have_seed) cfg.seed = seed_override;
        if (!out_override.empty()) cfg.out_dir = out_override;
        validate_config(cfg);
        return run_command(command, cfg, cfg.out_dir);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const FeasibilityError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}

}  // namespace wavelab
