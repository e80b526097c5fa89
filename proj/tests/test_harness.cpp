#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "bhlab/harness.hpp"
#include "bhlab/model_io.hpp"
#include "helpers.hpp"

using namespace bhlab;
using Catch::Approx;

namespace {

std::vector<PopulationSample> make_samples(std::initializer_list<std::pair<int, int>> zs) {
    std::vector<PopulationSample> out;
    for (const auto& [z1, z2] : zs) {
        PopulationSample p;
        p.z1 = z1;
        p.z2 = z2;
        out.push_back(p);
    }
    return out;
}

} // namespace

TEST_CASE("empirical transform on tiny samples") {
    SECTION("all-extinct samples give exactly one") {
        const auto est = empirical_laplace(make_samples({{0, 0}, {0, 0}, {0, 0}}), 1.0, 1.0, 2.0, 3.0);
        CHECK(est.value == 1.0);
        CHECK(est.se == 0.0);
        CHECK(est.used == 3);
    }

    SECTION("zero rates give exactly one whatever the counts") {
        const auto est = empirical_laplace(make_samples({{5, 17}, {0, 2}, {3, 0}}), 0.25, 0.5, 0.0, 0.0);
        CHECK(est.value == 1.0);
        CHECK(est.se == 0.0);
    }

    SECTION("single sample matches the scaled exponent") {
        const auto est = empirical_laplace(make_samples({{0, 7}}), 1.0, 1.0 / 7.0, 0.0, 1.0);
        CHECK(est.value == Approx(std::exp(-1.0)).epsilon(1e-15));
        CHECK(est.se == 0.0);
        CHECK(est.used == 1);
    }

    SECTION("two samples pin the population-variance stderr") {
        const auto est = empirical_laplace(make_samples({{0, 0}, {0, 7}}), 1.0, 1.0 / 7.0, 0.0, 1.0);
        const double lo = std::exp(-1.0);
        CHECK(est.value == Approx(0.5 * (1.0 + lo)).epsilon(1e-15));
        CHECK(est.se == Approx((1.0 - lo) / (2.0 * std::sqrt(2.0))).epsilon(1e-14));
    }

    SECTION("an infinite rate turns the transform into a mass at zero") {
        const double inf = std::numeric_limits<double>::infinity();
        const auto est = empirical_laplace(make_samples({{0, 0}, {0, 3}}), 1.0, 1.0, 0.0, inf);
        CHECK(est.value == Approx(0.5).epsilon(1e-15));
        CHECK(est.se == Approx(std::sqrt(0.25 / 2.0)).epsilon(1e-14));
    }

    SECTION("truncated replicates are excluded") {
        auto samples = make_samples({{0, 0}, {0, 7}});
        samples[1].truncated = true;
        const auto est = empirical_laplace(samples, 1.0, 1.0, 1.0, 1.0);
        CHECK(est.value == 1.0);
        CHECK(est.used == 1);
        samples[0].truncated = true;
        CHECK_THROWS_AS(empirical_laplace(samples, 1.0, 1.0, 1.0, 1.0), EmptyRun);
    }

    SECTION("guards") {
        const auto s = make_samples({{0, 0}});
        CHECK_THROWS_AS(empirical_laplace(s, 0.0, 1.0, 1.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(empirical_laplace(s, 1.0, -1.0, 1.0, 1.0), std::invalid_argument);
        CHECK_THROWS_AS(empirical_laplace(s, 1.0, 1.0, -0.5, 1.0), std::invalid_argument);
    }
}

TEST_CASE("per-theorem scalings") {
    const DerivedConstants c = derive_constants(reference_model(0.5));
    const double N = 200.0;
    const double t = 25.0;

    SECTION("early-stage normalizations") {
        const auto t1 = theorem_scaling(TheoremId::T1, c, N, t, 0.25);
        CHECK(t1.a1 * N == Approx(1.0 + 2.0 * (std::sqrt(t) - 1.0)).epsilon(1e-12));
        CHECK(t1.a2 == Approx(1.0 / N));
        CHECK(t1.r == 1.0);
        const auto c1 = theorem_scaling(TheoremId::C1, c, N, t, 0.25);
        CHECK(c1.a1 == 1.0);
        CHECK(c1.a2 == Approx(1.0 / N));
        const auto t2 = theorem_scaling(TheoremId::T2, c, N, t, 0.25);
        CHECK(t2.r == Approx(N / c.mu2(t)).epsilon(1e-12));
        CHECK(t2.a1 == 1.0);
    }

    SECTION("intermediate-stage normalizations divide by R") {
        const auto t4 = theorem_scaling(TheoremId::T4, c, N, t, 0.25);
        CHECK(t4.a2 * c.R(t) == Approx(1.0).epsilon(1e-12));
        CHECK(t4.r * c.R(t) == Approx(N).epsilon(1e-12));
        const auto t5 = theorem_scaling(TheoremId::T5, c, N, t, 0.25);
        CHECK(t5.a1 * c.mu1 * c.R(t) == Approx(c.mu2(t)).epsilon(1e-12));
        CHECK(t5.a2 == t4.a2);
        CHECK(t5.r == t4.r);
    }

    SECTION("final-stage rates agree with the classifier") {
        const RegimeLabel label = classify_regime(c, N, t);
        const auto z = theorem_scaling(TheoremId::Z12, c, N, t, 0.25);
        CHECK(z.r == Approx(label.z12_r).epsilon(1e-12));
        CHECK(z.a1 == 1.0);
        CHECK(z.a2 == 1.0);
        const double g = 0.2;
        const auto t6 = theorem_scaling(TheoremId::T6, c, N, t, g);
        CHECK(t6.a2 == Approx(c.u[1] * std::pow(t, -g)).epsilon(1e-12));
        CHECK(t6.r == Approx(label.z12_r * std::pow(t, -0.5 * g)).epsilon(1e-12));
    }

    SECTION("the type-2 weight exponent must sit inside (0, beta)") {
        CHECK_THROWS_AS(theorem_scaling(TheoremId::T6, c, N, t, 0.5), std::invalid_argument);
        CHECK_THROWS_AS(theorem_scaling(TheoremId::T6, c, N, t, 0.0), std::invalid_argument);
    }
}

TEST_CASE("schedule solvers hit their targets") {
    const DerivedConstants ch = derive_constants(reference_model(0.5));
    const DerivedConstants cq = derive_constants(reference_model(0.25));

    SECTION("mu2 ratio") {
        CHECK(time_at_mu2_ratio(ch, 90.0, 0.1) == Approx(25.0).epsilon(1e-9));
        CHECK(time_at_mu2_ratio(ch, 1.0, 0.5) == Approx(0.5).epsilon(1e-9));
        const double t = time_at_mu2_ratio(cq, 433.0, 0.1);
        CHECK(cq.mu2(t) == Approx(43.3).epsilon(1e-9));
        CHECK_THROWS_AS(time_at_mu2_ratio(ch, 90.0, 0.0), std::invalid_argument);
    }

    SECTION("R ratio") {
        const double t = time_at_R_ratio(cq, 12.0, 1.0);
        CHECK(cq.R(t) == Approx(12.0).epsilon(1e-9));
        const double t2 = time_at_R_ratio(ch, 40.0, 0.5);
        CHECK(ch.R(t2) == Approx(20.0).epsilon(1e-9));
        CHECK_THROWS_AS(time_at_R_ratio(ch, 2.0, 0.5), std::invalid_argument);
    }

    SECTION("z12 rate") {
        CHECK(time_at_z12_rate(cq, 100.0, 2.0) == Approx(1e16).epsilon(1e-9));
        const double t = time_at_z12_rate(ch, 64.0, 1.0);
        CHECK(classify_regime(ch, 64.0, t).z12_r == Approx(1.0).epsilon(1e-9));
        CHECK_THROWS_AS(time_at_z12_rate(ch, 64.0, -1.0), std::invalid_argument);
    }
}

TEST_CASE("experiment run against the early-stage limit") {
    const BranchingModel model = reference_model(0.5);
    ExperimentConfig cfg;
    cfg.theorem = TheoremId::T1;
    cfg.schedule = {{90.0, 20.0}, {433.0, 49.0}};
    cfg.points = {{0.5, 1.0, 1.0, 1.0}, {1.0, 1.0, 1.0, 1.0}};
    cfg.replicates = 2000;
    cfg.seed = 20240401;

    const Report rep = run_experiment(model, cfg);
    REQUIRE(rep.rows.size() == 4);
    REQUIRE(rep.points.size() == 2);
    CHECK(rep.theorem == TheoremId::T1);
    CHECK(rep.beta == 0.5);
    CHECK(rep.warnings.empty());
    CHECK(rep.trend_ok);
    CHECK(rep.pass);
    CHECK(rep.runtime_seconds > 0.0);

    for (const ReportRow& r : rep.rows) {
        CHECK(r.empirical > 0.0);
        CHECK(r.empirical <= 1.0);
        CHECK(r.se > 0.0);
        CHECK(r.gap == Approx(std::fabs(r.empirical - r.predicted)).margin(1e-15));
    }
    // the limit in this regime is exp(-lambda1 / pi - lambda2)
    CHECK(rep.rows[0].predicted == Approx(std::exp(-0.5 / M_PI - 1.0)).epsilon(1e-12));
    CHECK(rep.rows[1].predicted == Approx(std::exp(-1.0 / M_PI - 1.0)).epsilon(1e-12));
    CHECK(rep.rows[2].pass);
    CHECK(rep.rows[3].pass);

    for (const PointDiagnostics& d : rep.points) {
        CHECK(d.trunc_fraction == 0.0);
        CHECK(d.stage == Stage::Early);
        CHECK(d.mapped == RegimeTheorem::T1);
        CHECK(d.type1_fraction == -1.0); // this limit keeps the type-1 count
    }

    SECTION("report serialization carries the rows") {
        const nlohmann::json j = report_to_json(rep);
        CHECK(j["theorem"] == "T1");
        CHECK(j["rows"].size() == 4);
        CHECK(j["points"][0]["stage"] == "Early");
        CHECK(j["points"][0]["mapped"] == "T1");
        CHECK(j["rows"][1]["lambda1"] == 1.0);
        CHECK(j["pass"] == rep.pass);
    }
}

TEST_CASE("experiment reruns are bit-identical") {
    const BranchingModel model = reference_model(0.5);
    ExperimentConfig cfg;
    cfg.theorem = TheoremId::T1;
    cfg.schedule = {{50.0, 8.0}};
    cfg.points = {{0.5, 1.0, 1.0, 1.0}};
    cfg.replicates = 400;
    cfg.seed = 123;
    cfg.hash = "deadbeefdeadbeef";

    const Report a = run_experiment(model, cfg);
    const Report b = run_experiment(model, cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    CHECK(a.rows[0].empirical == b.rows[0].empirical);
    CHECK(a.rows[0].se == b.rows[0].se);
    CHECK(a.config_hash == "deadbeefdeadbeef");
    CHECK(report_to_csv(a) == report_to_csv(b));
}

TEST_CASE("experiment run with a pgf scenario and the O functional") {
    const BranchingModel model = reference_model(0.25);
    ExperimentConfig cfg;
    cfg.theorem = TheoremId::T2;
    cfg.schedule = {{1333.0, 1e4}};
    LimitScenario p1;
    p1.s = 0.6;
    p1.lambda2 = 0.5;
    LimitScenario p2;
    p2.s = 1.0;
    p2.lambda2 = 1.0;
    cfg.points = {p1, p2};
    cfg.replicates = 300;
    cfg.seed = 5;
    cfg.tol.bias = 0.06;

    const Report rep = run_experiment(model, cfg);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.warnings.empty());
    CHECK(rep.pass);
    CHECK(rep.rows[0].lambda1 == Approx(-std::log(0.6)).epsilon(1e-15));
    CHECK(rep.rows[1].lambda1 == 0.0);
    // at s = 1 the type-1 factor and the O term drop out
    CHECK(rep.rows[1].predicted == Approx(std::exp(-1.0)).epsilon(1e-9));

    const DerivedConstants c = derive_constants(model);
    const OFunctional o = o_functional(model, cfg.ofun_h, 0.6, cfg.ofun_horizon);
    const double r = rep.rows[0].r;
    const double expected =
        std::exp(-r * c.beta * c.gamma * c.mu1 * c.D(1, 0) * 0.4 + r * o.value[1] - c.D(1, 1) * 0.5);
    CHECK(rep.rows[0].predicted == Approx(expected).epsilon(1e-12));
}

TEST_CASE("experiment run against the intermediate fixed point") {
    const BranchingModel model = reference_model(0.25);
    const DerivedConstants c = derive_constants(model);
    ExperimentConfig cfg;
    cfg.theorem = TheoremId::T4;
    cfg.schedule = {{64.0, time_at_R_ratio(c, 64.0, 1.0)}};
    LimitScenario p1;
    p1.lambda2 = 0.25;
    LimitScenario p2;
    p2.lambda2 = 1.0;
    cfg.points = {p1, p2};
    cfg.replicates = 1500;
    cfg.seed = 11;
    cfg.tol.bias = 0.06;

    const Report rep = run_experiment(model, cfg);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.warnings.empty());
    CHECK(rep.pass);
    CHECK(rep.rows[0].r == Approx(1.0).epsilon(1e-9));
    CHECK(rep.rows[0].predicted == Approx(std::exp(-rep.rows[0].r * 0.233485)).epsilon(2e-4));
    CHECK(rep.rows[1].predicted == Approx(std::exp(-rep.rows[1].r * 0.801755)).epsilon(2e-4));

    // the limit drops the type-1 count, so its survival fraction is audited
    REQUIRE(rep.points.size() == 1);
    CHECK(rep.points[0].type1_fraction >= 0.0);
    CHECK(rep.points[0].type1_bound > 0.0);
    CHECK(rep.points[0].type1_bound < 0.01);
    CHECK(rep.points[0].type1_fraction <= rep.points[0].type1_bound);
}

TEST_CASE("experiment run against the two-argument fixed point") {
    const BranchingModel model = reference_model(0.75);
    const DerivedConstants c = derive_constants(model);
    ExperimentConfig cfg;
    cfg.theorem = TheoremId::T5;
    cfg.schedule = {{200.0, time_at_R_ratio(c, 200.0, 0.5)}};
    LimitScenario p1;
    p1.lambda2 = 0.5; // lambda1 = 0 takes the boundary shortcut
    LimitScenario p2;
    p2.lambda1 = 1.0;
    p2.lambda2 = 1.0;
    cfg.points = {p1, p2};
    cfg.replicates = 400;
    cfg.seed = 17;
    cfg.tol.bias = 0.06;

    const Report rep = run_experiment(model, cfg);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.warnings.empty());
    CHECK(rep.pass);
    CHECK(rep.rows[0].predicted == Approx(std::exp(-rep.rows[0].r * 0.5)).epsilon(1e-9));
    CHECK(rep.rows[1].predicted == Approx(std::exp(-rep.rows[1].r * 0.987230)).epsilon(5e-4));
    CHECK(rep.points[0].stage == Stage::Intermediate);
    CHECK(rep.points[0].type1_fraction == -1.0);
}

TEST_CASE("experiment run deep in the extinction zone") {
    const BranchingModel model = reference_model(0.25);
    ExperimentConfig cfg;
    cfg.theorem = TheoremId::Z12;
    cfg.schedule = {{4.0, 1e30}};
    LimitScenario p1;
    p1.s = 0.25;
    LimitScenario p2;
    p2.s = 0.75;
    cfg.points = {p1, p2};
    cfg.replicates = 400;
    cfg.seed = 31;

    const Report rep = run_experiment(model, cfg);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.points[0].stage == Stage::Extinction);
    CHECK(rep.pass);
    CHECK(rep.rows[0].lambda2 == Approx(-std::log(0.25)).epsilon(1e-15));
    CHECK(rep.rows[0].r < 0.01); // essentially sure extinction
    CHECK(rep.rows[0].predicted > 0.99);

    SECTION("the same point under any other statement is refused") {
        cfg.theorem = TheoremId::T1;
        cfg.points = {{0.5, 1.0, 1.0, 1.0}};
        CHECK_THROWS_AS(run_experiment(model, cfg), RegimeMismatch);
    }
}

TEST_CASE("experiment warnings and failure paths") {
    const BranchingModel model = reference_model(0.5);

    SECTION("schedule point outside the claimed regime is flagged") {
        ExperimentConfig cfg;
        cfg.theorem = TheoremId::T1;
        cfg.schedule = {{30.0, 1e4}};
        cfg.points = {{0.5, 1.0, 1.0, 1.0}};
        cfg.replicates = 50;
        cfg.seed = 3;
        const Report rep = run_experiment(reference_model(0.25), cfg);
        REQUIRE_FALSE(rep.warnings.empty());
        CHECK(rep.warnings[0].find("classifies") != std::string::npos);
    }

    SECTION("heavy truncation voids the point") {
        ExperimentConfig cfg;
        cfg.theorem = TheoremId::T1;
        cfg.schedule = {{10.0, 100.0}};
        cfg.points = {{0.5, 1.0, 1.0, 1.0}};
        cfg.replicates = 200;
        cfg.seed = 99;
        cfg.event_budget = 150;
        const Report rep = run_experiment(model, cfg);
        CHECK(rep.points[0].trunc_fraction > 0.01);
        CHECK(rep.points[0].trunc_fraction < 1.0);
        CHECK_FALSE(rep.rows[0].pass);
        CHECK_FALSE(rep.pass);
        bool voided = false;
        for (const std::string& w : rep.warnings) voided = voided || w.find("voided") != std::string::npos;
        CHECK(voided);
    }

    SECTION("a budget nothing fits in leaves no usable samples") {
        ExperimentConfig cfg;
        cfg.theorem = TheoremId::T1;
        cfg.schedule = {{10.0, 100.0}};
        cfg.points = {{0.5, 1.0, 1.0, 1.0}};
        cfg.replicates = 50;
        cfg.seed = 99;
        cfg.event_budget = 0;
        CHECK_THROWS_AS(run_experiment(model, cfg), EmptyRun);
    }

    SECTION("an impossible tolerance fails the report, not the run") {
        ExperimentConfig cfg;
        cfg.theorem = TheoremId::T1;
        cfg.schedule = {{50.0, 8.0}};
        cfg.points = {{0.5, 1.0, 1.0, 1.0}};
        cfg.replicates = 200;
        cfg.seed = 1;
        cfg.tol.z = 0.0;
        cfg.tol.bias = 1e-12;
        const Report rep = run_experiment(model, cfg);
        CHECK_FALSE(rep.rows.back().pass);
        CHECK_FALSE(rep.pass);
    }

    SECTION("config validation") {
        ExperimentConfig cfg;
        cfg.theorem = TheoremId::T1;
        cfg.points = {{0.5, 1.0, 1.0, 1.0}};
        CHECK_THROWS_AS(run_experiment(model, cfg), std::invalid_argument); // no schedule
        cfg.schedule = {{50.0, 8.0}};
        cfg.points.clear();
        CHECK_THROWS_AS(run_experiment(model, cfg), std::invalid_argument); // no points
        cfg.points = {{-0.5, 1.0, 1.0, 1.0}};
        CHECK_THROWS_AS(run_experiment(model, cfg), std::invalid_argument);
        cfg.theorem = TheoremId::Z12;
        cfg.points = {{0.0, 1.0, 1.0, 0.5}};
        CHECK_THROWS_AS(run_experiment(model, cfg), std::invalid_argument);
        cfg.theorem = TheoremId::T2;
        cfg.points = {{1.0, 0.0, 1.0, 0.5}};
        CHECK_THROWS_AS(run_experiment(model, cfg), std::invalid_argument);
    }
}

TEST_CASE("scaled transform agrees with the generating system") {
    // with N ancestors the empirical transform estimates F2(t; s1, s2)^N for
    // s_i = exp(-lambda_i a_i), whatever the scalings are
    const BranchingModel model = reference_model(0.5);
    const double t = 6.0;
    const std::int64_t N = 20;

    SimConfig sim;
    sim.N = N;
    sim.t = t;
    sim.replicates = 20000;
    sim.seed = 424242;
    const BatchResult batch = simulate_batch(model, sim);
    REQUIRE(batch.truncated == 0);

    const double a1 = 1.0 / 7.0;
    const double a2 = 1.0 / 3.0;
    const double l1 = 2.1;
    const double l2 = 2.1;
    const auto est = empirical_laplace(batch.samples, a1, a2, l1, l2);

    const TimeGrid grid{0.005, 1201};
    const GeneratingSolution gen =
        solve_generating_system(model, {std::exp(-l1 * a1), std::exp(-l2 * a2)}, grid);
    const double exact = std::pow(gen.F.values.back()[1], static_cast<double>(N));
    CHECK(est.value == Approx(exact).margin(4.0 * est.se + 0.005));
}

TEST_CASE("model files round-trip") {
    SECTION("reference model") {
        const BranchingModel m = reference_model(0.75);
        const BranchingModel back = model_from_json(model_to_json(m));
        CHECK(mean_offspring_matrix(back)(0, 1) == 1.0);
        CHECK(mean_offspring_matrix(back)(1, 0) == 0.5);
        CHECK(back.offspring2.pgf(0.3, 0.7) == Approx(m.offspring2.pgf(0.3, 0.7)).epsilon(1e-15));
        CHECK(std::get<Exponential>(back.life1).rate == 1.0);
        CHECK(back.life2.beta == 0.75);
        CHECK(back.life2.t0 == 1.0);
        CHECK(std::get<ConstantSV>(back.life2.ell).c == 1.0);
    }

    SECTION("uniform lifetime and log-power tail factor") {
        BranchingModel m = reference_model(0.6);
        m.life1 = Uniform{0.5, 2.0};
        m.life2 = ParetoTail{0.6, 2.0, LogPowerSV{1.5, -0.5}};
        const BranchingModel back = model_from_json(model_to_json(m));
        CHECK(std::get<Uniform>(back.life1).a == 0.5);
        CHECK(std::get<Uniform>(back.life1).b == 2.0);
        const auto& lp = std::get<LogPowerSV>(back.life2.ell);
        CHECK(lp.c == 1.5);
        CHECK(lp.p == -0.5);
        CHECK(tail(back.life2, 100.0) == Approx(tail(m.life2, 100.0)).epsilon(1e-15));
    }

    SECTION("schema violations") {
        nlohmann::json j = model_to_json(reference_model(0.5));
        j.erase("life2");
        CHECK_THROWS_AS(model_from_json(j), std::invalid_argument);
        nlohmann::json k = model_to_json(reference_model(0.5));
        k["life1"]["family"] = "weibull";
        CHECK_THROWS_AS(model_from_json(k), std::invalid_argument);
        nlohmann::json e = model_to_json(reference_model(0.5));
        e["offspring1"] = nlohmann::json::array();
        CHECK_THROWS_AS(model_from_json(e), std::invalid_argument);
    }
}

TEST_CASE("experiment files load and fingerprint") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path("harness_io_tmp");
    fs::remove_all(dir);
    fs::create_directories(dir);

    write_text_file((dir / "model.json").string(), model_to_json(reference_model(0.5)).dump(2));

    nlohmann::json cj;
    cj["model"] = "model.json";
    cj["theorem"] = "T1";
    nlohmann::json curve;
    curve["target"] = "mu2_over_N";
    curve["value"] = 0.1;
    curve["N"] = {90.0, 433.0};
    cj["schedule"] = curve;
    nlohmann::json pts = nlohmann::json::array();
    nlohmann::json p1;
    p1["lambda1"] = 0.5;
    p1["lambda2"] = 1.0;
    pts.push_back(p1);
    nlohmann::json p2;
    p2["s"] = 0.5;
    pts.push_back(p2);
    cj["points"] = pts;
    cj["replicates"] = 2000;
    cj["seed"] = 7;
    write_text_file((dir / "exp.json").string(), cj.dump(2));

    SECTION("curve schedules are resolved against the model") {
        const LoadedExperiment exp = load_experiment((dir / "exp.json").string());
        const DerivedConstants c = derive_constants(exp.model);
        REQUIRE(exp.config.schedule.size() == 2);
        CHECK(exp.config.schedule[0].N == 90.0);
        CHECK(exp.config.schedule[0].t == Approx(25.0).epsilon(1e-9));
        CHECK(c.mu2(exp.config.schedule[1].t) == Approx(43.3).epsilon(1e-9));
        CHECK(exp.config.theorem == TheoremId::T1);
        CHECK(exp.config.replicates == 2000);
        CHECK(exp.config.seed == 7);
        REQUIRE(exp.config.points.size() == 2);
        CHECK(exp.config.points[0].lambda1 == 0.5);
        CHECK(exp.config.points[0].s == 1.0);
        CHECK(exp.config.points[1].s == 0.5);
        CHECK(exp.config.points[1].lambda1 == 0.0);
        CHECK(exp.config.tol.z == 4.0);
        CHECK(exp.config.tol.bias == 0.03);
    }

    SECTION("fingerprints are stable and sensitive") {
        const std::string h1 = load_experiment((dir / "exp.json").string()).config.hash;
        const std::string h2 = load_experiment((dir / "exp.json").string()).config.hash;
        CHECK(h1 == h2);
        CHECK(h1.size() == 16);
        CHECK(h1.find_first_not_of("0123456789abcdef") == std::string::npos);
        nlohmann::json other = cj;
        other["seed"] = 8;
        write_text_file((dir / "exp2.json").string(), other.dump(2));
        CHECK(load_experiment((dir / "exp2.json").string()).config.hash != h1);
    }

    SECTION("explicit schedules, overrides, and the beta cross-check") {
        nlohmann::json full = cj;
        full["schedule"] = nlohmann::json::array();
        nlohmann::json sp;
        sp["N"] = 50.0;
        sp["t"] = 8.0;
        full["schedule"].push_back(sp);
        full["beta"] = 0.5;
        full["tolerance"] = {{"z", 3.0}, {"bias", 0.05}};
        full["event_budget"] = 1000;
        full["psi_gamma"] = 0.2;
        full["ofun"] = {{"h", 0.5}, {"horizon", 256.0}};
        full["thresholds"] = {{"lo", 0.2}, {"hi", 5.0}};
        write_text_file((dir / "exp3.json").string(), full.dump(2));
        const ExperimentConfig got = load_experiment((dir / "exp3.json").string()).config;
        CHECK(got.schedule.size() == 1);
        CHECK(got.schedule[0].t == 8.0);
        CHECK(got.tol.z == 3.0);
        CHECK(got.tol.bias == 0.05);
        CHECK(got.event_budget == 1000);
        CHECK(got.psi_gamma == 0.2);
        CHECK(got.ofun_h == 0.5);
        CHECK(got.ofun_horizon == 256.0);
        CHECK(got.thresholds.lo == 0.2);
        CHECK(got.thresholds.hi == 5.0);

        full["beta"] = 0.6;
        write_text_file((dir / "exp4.json").string(), full.dump(2));
        CHECK_THROWS_AS(load_experiment((dir / "exp4.json").string()), std::invalid_argument);
    }

    SECTION("error taxonomy") {
        CHECK_THROWS_AS(load_experiment((dir / "missing.json").string()), IoError);
        write_text_file((dir / "broken.json").string(), "{ not json");
        CHECK_THROWS_AS(load_experiment((dir / "broken.json").string()), IoError);
        nlohmann::json noreps = cj;
        noreps.erase("replicates");
        write_text_file((dir / "noreps.json").string(), noreps.dump(2));
        CHECK_THROWS_AS(load_experiment((dir / "noreps.json").string()), std::invalid_argument);
        nlohmann::json badth = cj;
        badth["theorem"] = "T9";
        write_text_file((dir / "badth.json").string(), badth.dump(2));
        CHECK_THROWS_AS(load_experiment((dir / "badth.json").string()), std::invalid_argument);
        nlohmann::json badtarget = cj;
        badtarget["schedule"]["target"] = "population";
        write_text_file((dir / "badtarget.json").string(), badtarget.dump(2));
        CHECK_THROWS_AS(load_experiment((dir / "badtarget.json").string()), std::invalid_argument);
        nlohmann::json nomodel = cj;
        nomodel["model"] = "absent.json";
        write_text_file((dir / "nomodel.json").string(), nomodel.dump(2));
        CHECK_THROWS_AS(load_experiment((dir / "nomodel.json").string()), IoError);
    }
}

TEST_CASE("report csv format is pinned") {
    Report rep;
    rep.theorem = TheoremId::T1;
    rep.beta = 0.5;
    ReportRow r;
    r.N = 90.0;
    r.t = 25.0;
    r.lambda1 = 0.5;
    r.lambda2 = 1.0;
    r.empirical = 0.875;
    r.se = 0.0009765625;
    r.predicted = 0.90625;
    r.gap = 0.03125;
    r.pass = true;
    rep.rows.push_back(r);
    r.lambda1 = 1.0;
    r.pass = false;
    rep.rows.push_back(r);

    const std::string expected =
        "theorem,beta,N,t,lambda1,lambda2,empirical,stderr,predicted,gap,pass\n"
        "T1,0.5,90,25,0.5,1,0.875,0.0009765625,0.90625,0.03125,1\n"
        "T1,0.5,90,25,1,1,0.875,0.0009765625,0.90625,0.03125,0\n";
    CHECK(report_to_csv(rep) == expected);

    const nlohmann::json j = report_to_json(rep);
    CHECK(j["rows"][0]["stderr"] == 0.0009765625);
    CHECK(j["rows"][0]["pass"] == true);
    CHECK(j["rows"][1]["pass"] == false);
    CHECK(j["config_hash"] == "");
}
