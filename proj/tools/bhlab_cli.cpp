#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bhlab/model_io.hpp"
#include "bhlab/volterra.hpp"

using namespace bhlab;

namespace {

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::fputs(content.c_str(), stdout);
    else
        write_text_file(out_path, content);
}

void print_mat(const char* name, const Mat2& m) {
    std::printf("%-6s [[%.12g, %.12g], [%.12g, %.12g]]\n", name, m(0, 0), m(0, 1), m(1, 0), m(1, 1));
}

void print_vec(const char* name, const Vec2& v) {
    std::printf("%-6s (%.12g, %.12g)\n", name, v[0], v[1]);
}

int cmd_model_check(const std::string& path) {
    const ValidationReport rep = validate_model(load_model(path));
    for (const Condition& c : rep.conditions)
        std::printf("%-16s %-4s %.12g  %s\n", c.name.c_str(), c.pass ? "ok" : "FAIL", c.measured,
                    c.detail.c_str());
    if (!rep.pass()) {
        std::fflush(stdout);
        std::fputs("model check failed\n", stderr);
        return 1;
    }
    return 0;
}

int cmd_constants(const std::string& path) {
    const DerivedConstants c = derive_constants(load_model(path));
    print_mat("M", c.M);
    print_vec("u", c.u);
    print_vec("v", c.v);
    std::printf("%-6s %.12g\n", "B", c.B);
    print_mat("D", c.D);
    std::printf("%-6s %.12g\n", "beta", c.beta);
    std::printf("%-6s %.12g\n", "gamma", c.gamma);
    std::printf("%-6s %.12g\n", "mu1", c.mu1);
    return 0;
}

int cmd_volterra(const std::string& path, double horizon, double step, double s1, double s2,
                 const std::string& out) {
    const BranchingModel model = load_model(path);
    const auto n = static_cast<std::size_t>(std::llround(horizon / step));
    if (n < 1) throw std::invalid_argument("horizon shorter than one step");
    const TimeGrid grid{step, n + 1};
    const GeneratingSolution gen = solve_generating_system(model, {s1, s2}, grid);
    std::string csv = "t,F1,F2,Q1,Q2\n";
    char line[256];
    for (std::size_t k = 0; k < grid.n_points; ++k) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", grid.point(k),
                      gen.F.values[k][0], gen.F.values[k][1], gen.Q.values[k][0],
                      gen.Q.values[k][1]);
        csv += line;
    }
    emit(out, csv);
    return 0;
}

int cmd_limits_theta(const std::string& path, double Lambda, const std::vector<double>& lams,
                     bool as_omega) {
    const BranchingModel model = load_model(path);
    const DerivedConstants c = derive_constants(model);
    const QuadraticForm q(model);
    ThetaOptions opt;
    opt.Lambda = Lambda;
    if (as_omega) // Omega(lam) reads Theta at lam^{1/beta}
        for (double l : lams) opt.Lambda = std::fmax(opt.Lambda, std::pow(l, 1.0 / c.beta));
    const ThetaSolution th = solve_theta(c, q, opt);
    std::printf("Lambda %.12g  certified prefix %.12g  kappa %.6g  residual %.6g\n", th.Lambda,
                th.Lambda_contract, th.kappa, th.residual);
    for (double l : lams) {
        const Vec2 val = as_omega ? omega(th, l) : th.eval(l);
        std::printf("%s(%.12g) = (%.12g, %.12g)\n", as_omega ? "Omega" : "Theta", l, val[0], val[1]);
    }
    return 0;
}

int cmd_limits_h(const std::string& path, double Theta, double Lambda, std::vector<double> thetas,
                 std::vector<double> lams) {
    const BranchingModel model = load_model(path);
    const DerivedConstants c = derive_constants(model);
    const QuadraticForm q(model);
    if (thetas.size() == 1 && lams.size() > 1) thetas.assign(lams.size(), thetas[0]);
    if (lams.size() == 1 && thetas.size() > 1) lams.assign(thetas.size(), lams[0]);
    if (thetas.size() != lams.size())
        throw std::invalid_argument("--theta and --lambda must pair up");
    HOptions opt;
    opt.Theta = Theta;
    opt.Lambda = Lambda;
    for (double t : thetas) opt.Theta = std::fmax(opt.Theta, t);
    for (double l : lams) opt.Lambda = std::fmax(opt.Lambda, l);
    const HSolution h = solve_H(c, q, opt);
    std::printf("Theta %.12g  Lambda %.12g  certified prefix %.12g  kappa %.6g  residual %.6g\n",
                opt.Theta, opt.Lambda, h.Theta_contract, h.kappa, h.residual);
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        const Vec2 val = h.eval(thetas[i], lams[i]);
        std::printf("H(%.12g, %.12g) = (%.12g, %.12g)\n", thetas[i], lams[i], val[0], val[1]);
    }
    return 0;
}

int cmd_limits_ofun(const std::string& path, const std::vector<double>& svals, double h,
                    double horizon) {
    const BranchingModel model = load_model(path);
    for (double s : svals) {
        const OFunctional o = o_functional(model, h, s, horizon);
        std::printf("O(%.12g) = (%.12g, %.12g)  tail share (%.3g, %.3g)  horizon %.12g\n", s,
                    o.value[0], o.value[1],
                    o.value[0] != 0.0 ? o.tail_part[0] / o.value[0] : 0.0,
                    o.value[1] != 0.0 ? o.tail_part[1] / o.value[1] : 0.0, o.horizon);
    }
    return 0;
}

int cmd_regimes_map(const std::string& path, double nmin, double nmax, double tmin, double tmax,
                    std::size_t n_steps, std::size_t t_steps, const std::string& out) {
    if (!(nmin >= 1.0) || !(nmax >= nmin) || !(tmin > 0.0) || !(tmax >= tmin))
        throw std::invalid_argument("need 1 <= nmin <= nmax and 0 < tmin <= tmax");
    if (n_steps < 1 || t_steps < 1) throw std::invalid_argument("lattice needs at least one step");
    const DerivedConstants c = derive_constants(load_model(path));
    std::string csv = "N,t,stage,theorem,type1_open,r_over_N,mu2_over_N,tail_mass,z12_r\n";
    char line[320];
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double fn = n_steps == 1 ? 0.0 : static_cast<double>(i) / (n_steps - 1.0);
        const double N = nmin * std::pow(nmax / nmin, fn);
        for (std::size_t j = 0; j < t_steps; ++j) {
            const double ft = t_steps == 1 ? 0.0 : static_cast<double>(j) / (t_steps - 1.0);
            const double t = tmin * std::pow(tmax / tmin, ft);
            const RegimeLabel lb = classify_regime(c, N, t);
            std::snprintf(line, sizeof line, "%.17g,%.17g,%s,%s,%d,%.17g,%.17g,%.17g,%.17g\n", N, t,
                          to_string(lb.stage), to_string(lb.theorem), lb.type1_open ? 1 : 0,
                          lb.r_over_N, lb.mu2_over_N, lb.tail_mass, lb.z12_r);
            csv += line;
        }
    }
    emit(out, csv);
    return 0;
}

int cmd_experiment_run(const std::string& config_path, const std::string& out_dir) {
    const LoadedExperiment exp = load_experiment(config_path);
    const ValidationReport check = validate_model(exp.model);
    if (!check.pass()) {
        for (const Condition& c : check.conditions)
            if (!c.pass) std::fprintf(stderr, "model violates %s (%.12g)\n", c.name.c_str(), c.measured);
        return 1;
    }
    const Report rep = run_experiment(exp.model, exp.config);
    std::filesystem::create_directories(out_dir);
    const auto base = std::filesystem::path(out_dir);
    write_text_file((base / "report.json").string(), report_to_json(rep).dump(2) + "\n");
    write_text_file((base / "report.csv").string(), report_to_csv(rep));
    std::printf("%s  beta %.12g  hash %s  %zu rows  %.2fs\n", to_string(rep.theorem), rep.beta,
                rep.config_hash.c_str(), rep.rows.size(), rep.runtime_seconds);
    for (const std::string& w : rep.warnings) std::printf("warning: %s\n", w.c_str());
    std::printf("%s\n", rep.pass ? "PASS" : "FAIL");
    return rep.pass ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for a two-type critical branching process"};
    app.require_subcommand(1);
    int rc = 0;

    auto* model_cmd = app.add_subcommand("model", "model file operations");
    model_cmd->require_subcommand(1);
    auto* check_cmd = model_cmd->add_subcommand("check", "validate criticality and tail conditions");
    std::string check_path;
    check_cmd->add_option("file", check_path, "model JSON")->required();
    check_cmd->callback([&] { rc = cmd_model_check(check_path); });

    auto* const_cmd = app.add_subcommand("constants", "print derived constants");
    std::string const_path;
    const_cmd->add_option("file", const_path, "model JSON")->required();
    const_cmd->callback([&] { rc = cmd_constants(const_path); });

    auto* vol_cmd = app.add_subcommand("volterra", "solve the generating system at fixed s");
    std::string vol_path, vol_out;
    double vol_horizon = 100.0, vol_step = 0.1, vol_s1 = 0.0, vol_s2 = 0.0;
    vol_cmd->add_option("file", vol_path, "model JSON")->required();
    vol_cmd->add_option("--horizon", vol_horizon, "last time point");
    vol_cmd->add_option("--step", vol_step, "lattice step");
    vol_cmd->add_option("--s1", vol_s1, "pgf argument, type 1");
    vol_cmd->add_option("--s2", vol_s2, "pgf argument, type 2");
    vol_cmd->add_option("--out", vol_out, "CSV path (stdout when omitted)");
    vol_cmd->callback([&] { rc = cmd_volterra(vol_path, vol_horizon, vol_step, vol_s1, vol_s2, vol_out); });

    auto* lim_cmd = app.add_subcommand("limits", "limit-law ingredients");
    lim_cmd->require_subcommand(1);

    std::string th_path;
    double th_Lambda = 1.0;
    std::vector<double> th_lams{1.0};
    auto* theta_cmd = lim_cmd->add_subcommand("theta", "intermediate-stage fixed point");
    theta_cmd->add_option("file", th_path, "model JSON")->required();
    theta_cmd->add_option("--Lambda", th_Lambda, "domain end");
    theta_cmd->add_option("--lambda", th_lams, "evaluation points");
    theta_cmd->callback([&] { rc = cmd_limits_theta(th_path, th_Lambda, th_lams, false); });

    std::string om_path;
    double om_Lambda = 1.0;
    std::vector<double> om_lams{1.0};
    auto* omega_cmd = lim_cmd->add_subcommand("omega", "rescaled transform of the fixed point");
    omega_cmd->add_option("file", om_path, "model JSON")->required();
    omega_cmd->add_option("--Lambda", om_Lambda, "domain end for Theta");
    omega_cmd->add_option("--lambda", om_lams, "evaluation points");
    omega_cmd->callback([&] { rc = cmd_limits_theta(om_path, om_Lambda, om_lams, true); });

    std::string h_path;
    double h_Theta = 1.0, h_Lambda = 1.0;
    std::vector<double> h_thetas{1.0}, h_lams{1.0};
    auto* h_cmd = lim_cmd->add_subcommand("h", "two-argument fixed point (beta > 1/2)");
    h_cmd->add_option("file", h_path, "model JSON")->required();
    h_cmd->add_option("--Theta", h_Theta, "theta domain end");
    h_cmd->add_option("--Lambda", h_Lambda, "lambda domain end");
    h_cmd->add_option("--theta", h_thetas, "theta evaluation points");
    h_cmd->add_option("--lambda", h_lams, "lambda evaluation points, paired with --theta");
    h_cmd->callback([&] { rc = cmd_limits_h(h_path, h_Theta, h_Lambda, h_thetas, h_lams); });

    std::string of_path;
    std::vector<double> of_s{0.0};
    double of_h = 0.25, of_horizon = 512.0;
    auto* of_cmd = lim_cmd->add_subcommand("ofun", "early-stage pgf correction (beta <= 1/2)");
    of_cmd->add_option("file", of_path, "model JSON")->required();
    of_cmd->add_option("--s", of_s, "pgf arguments");
    of_cmd->add_option("--step", of_h, "lattice step");
    of_cmd->add_option("--horizon", of_horizon, "one-sided integration horizon");
    of_cmd->callback([&] { rc = cmd_limits_ofun(of_path, of_s, of_h, of_horizon); });

    auto* reg_cmd = app.add_subcommand("regimes", "stage classification");
    reg_cmd->require_subcommand(1);
    auto* map_cmd = reg_cmd->add_subcommand("map", "classify a log-log (N, t) lattice");
    std::string map_path, map_out;
    double map_nmin = 10.0, map_nmax = 1e6, map_tmin = 1.0, map_tmax = 1e12;
    std::size_t map_nsteps = 25, map_tsteps = 25;
    map_cmd->add_option("file", map_path, "model JSON")->required();
    map_cmd->add_option("--nmin", map_nmin, "smallest population");
    map_cmd->add_option("--nmax", map_nmax, "largest population");
    map_cmd->add_option("--tmin", map_tmin, "earliest time");
    map_cmd->add_option("--tmax", map_tmax, "latest time");
    map_cmd->add_option("--n-steps", map_nsteps, "lattice points in N");
    map_cmd->add_option("--t-steps", map_tsteps, "lattice points in t");
    map_cmd->add_option("--out", map_out, "CSV path (stdout when omitted)");
    map_cmd->callback([&] {
        rc = cmd_regimes_map(map_path, map_nmin, map_nmax, map_tmin, map_tmax, map_nsteps,
                             map_tsteps, map_out);
    });

    auto* exp_cmd = app.add_subcommand("experiment", "Monte Carlo verification runs");
    exp_cmd->require_subcommand(1);
    auto* run_cmd = exp_cmd->add_subcommand("run", "run a config and write reports");
    std::string run_config, run_out = ".";
    run_cmd->add_option("config", run_config, "experiment JSON")->required();
    run_cmd->add_option("--out-dir", run_out, "directory for report.json / report.csv");
    run_cmd->callback([&] { rc = cmd_experiment_run(run_config, run_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "invalid input: %s\n", e.what());
        return 1;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return rc;
}
