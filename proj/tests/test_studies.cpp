#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "porosplit/error.hpp"
#include "porosplit/fem2d.hpp"
#include "porosplit/studies.hpp"

using namespace porosplit;
using namespace porosplit::studies;

namespace {

SplitConfig toy_base(double gamma) {
    SplitConfig cfg;
    cfg.gamma_target = gamma;
    return cfg;
}

ConvergenceOptions toy_convergence(int k) {
    ConvergenceOptions opt;
    opt.k = k;
    opt.taus = halving_taus(3, 6);
    opt.tol = TolRule::exponent(k + 1.5);
    opt.reference = ReferenceKind::Analytic;
    opt.base = toy_base(0.5);
    return opt;
}

}  // namespace

TEST(TolRule, Kinds) {
    EXPECT_DOUBLE_EQ(TolRule::exponent(2.0).tol(0.5, 1), 0.25);
    EXPECT_DOUBLE_EQ(TolRule::fixed(1e-4).tol(0.5, 3), 1e-4);
    EXPECT_NEAR(TolRule::order_fixed().tol(0.1, 1), 1e-6, 1e-20);
    EXPECT_NEAR(TolRule::order_fixed().tol(0.1, 2), 1e-9, 1e-23);
}

TEST(EocTable, PairwiseAndFitted) {
    EocTable t{{0.5, 0.25, 0.125}, {4.0, 1.0, 0.25}};
    for (double r : t.pairwise()) EXPECT_NEAR(r, 2.0, 1e-12);
    EXPECT_NEAR(t.fitted(), 2.0, 1e-12);
}

TEST(HalvingTaus, Values) {
    EXPECT_EQ(halving_taus(3, 5), (std::vector<double>{0.125, 0.0625, 0.03125}));
}

TEST(Reference, AnalyticNeedsExactSolution) {
    CoupledSystem sys = make_toy(2.0);
    EXPECT_NO_THROW((void)analytic_reference(sys));
    sys.exact_u = nullptr;
    try {
        (void)analytic_reference(sys);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotFound);
    }
}

TEST(Reference, FineImplicitRejectsOffGridTimes) {
    const CoupledSystem sys = make_toy(2.0);
    const Reference ref = fine_implicit_reference(sys, 1, 0.125, 1.0, 4);
    EXPECT_NO_THROW((void)ref(0.5));
    EXPECT_THROW((void)ref(0.3), Error);
}

TEST(Convergence, ToyFirstAndSecondOrder) {
    const CoupledSystem sys = make_toy(2.0);
    const auto r1 = convergence_study(sys, toy_convergence(1));
    EXPECT_GE(r1.split_eoc.fitted(), 0.85);
    EXPECT_LE(r1.split_eoc.fitted(), 1.15);
    const auto r2 = convergence_study(sys, toy_convergence(2));
    EXPECT_GE(r2.split_eoc.fitted(), 1.8);
    EXPECT_LE(r2.split_eoc.fitted(), 2.2);
    EXPECT_TRUE(r2.audit.sound());
    EXPECT_EQ(r2.records.size(), 8u);
}

TEST(Convergence, LooseToleranceDegradesError) {
    const CoupledSystem sys = make_toy(2.0);
    ConvergenceOptions tight = toy_convergence(2);
    ConvergenceOptions loose = tight;
    loose.tol = TolRule::fixed(1e6);
    loose.include_implicit = false;
    const double e_tight = convergence_study(sys, tight).split_eoc.errors.back();
    const double e_loose = convergence_study(sys, loose).split_eoc.errors.back();
    EXPECT_GT(e_loose, 10.0 * e_tight);
}

TEST(Convergence, ThreadCountDoesNotChangeResults) {
    const CoupledSystem sys = make_toy(2.0);
    ConvergenceOptions a = toy_convergence(1);
    ConvergenceOptions b = a;
    b.threads = 4;
    const auto ra = convergence_study(sys, a);
    const auto rb = convergence_study(sys, b);
    EXPECT_EQ(ra.split_eoc.errors, rb.split_eoc.errors);
    EXPECT_EQ(ra.implicit_eoc.errors, rb.implicit_eoc.errors);
}

TEST(Balancing, ErrorShrinksWithTighterTolerance) {
    const auto prm = fem2d::BiotParameters::defaults();
    const CoupledSystem sys = fem2d::make_manufactured_biot(6, prm);
    BalancingOptions opt;
    opt.k = 1;
    opt.taus = halving_taus(3, 5);
    opt.exponents = {1.0, 2.5, 4.0};
    opt.base.L = fem2d::fixed_stress_L(prm);
    const auto r = balancing_study(sys, opt);
    EXPECT_GT(r.worst_ratio(1.0), r.worst_ratio(2.5));
    EXPECT_LE(r.worst_ratio(2.5), 2.0);
    EXPECT_NEAR(r.worst_ratio(4.0), 1.0, 0.05);
    ASSERT_EQ(r.balanced.size(), 3u);
    for (bool b : r.balanced) EXPECT_TRUE(b);
    // The implicit baseline is shared by every exponent at a given τ.
    for (const auto& a : r.records)
        for (const auto& b : r.records)
            if (a.tau == b.tau) EXPECT_EQ(a.implicit_error, b.implicit_error);
}

TEST(Iterations, TrendsOnToy) {
    IterationOptions opt;
    opt.k = 1;
    opt.taus = halving_taus(3, 6);
    const auto r = iteration_study(opt);
    EXPECT_EQ(r.records.size(), 16u);
    EXPECT_LE(r.max_ratio_deviation, 1e-10);
    EXPECT_TRUE(r.audit.sound());
    auto mean = [&](double w, double g, double tau) {
        for (const auto& rec : r.records)
            if (rec.omega == w && rec.gamma == g && rec.tau == tau) return rec.mean_iterations;
        ADD_FAILURE();
        return 0.0;
    };
    for (double w : opt.omegas)
        for (double tau : opt.taus) EXPECT_GT(mean(w, 0.5, tau), mean(w, 0.1, tau));
    for (double w : opt.omegas)
        for (double g : opt.gammas) EXPECT_GE(mean(w, g, opt.taus.back()), mean(w, g, opt.taus.front()));
}

TEST(AverageIterations, TighterOffsetsCostMore) {
    const auto prm = fem2d::BiotParameters::defaults();
    const CoupledSystem sys = fem2d::make_manufactured_biot(6, prm);
    AverageIterationOptions opt;
    opt.k = 1;
    opt.taus = halving_taus(3, 4);
    opt.base.L = fem2d::fixed_stress_L(prm);
    const auto r = average_iteration_table(sys, opt);
    ASSERT_EQ(r.records.size(), 6u);
    for (double tau : opt.taus) {
        double prev = 0.0;
        for (const auto& rec : r.records)
            if (rec.tau == tau) {
                EXPECT_GE(rec.mean_iterations, prev);
                prev = rec.mean_iterations;
            }
    }
    EXPECT_TRUE(r.audit.sound());
}

TEST(Tables, Headers) {
    EXPECT_EQ(convergence_table({}).header(),
              (std::vector<std::string>{"k", "tau", "tol", "err_u_V", "err_p_H", "mode"}));
    EXPECT_EQ(balancing_table({}).header(), (std::vector<std::string>{"k", "tau", "s", "error", "implicit_error"}));
    EXPECT_EQ(iteration_table({}).header(), (std::vector<std::string>{"k", "omega", "gamma", "tau", "L", "mean_Jn"}));
    EXPECT_EQ(average_iteration_csv({}).header(), (std::vector<std::string>{"k", "s", "tau", "mean_Jn"}));
    EXPECT_EQ(step_report_table({}).header().front(), "n");
}

TEST(Tables, StepReportRowsPerSplitStep) {
    const CoupledSystem sys = make_toy(2.0);
    const Trajectory tr = integrate(sys, toy_base(0.5), 2, 0.125, 1.0, Mode::Split);
    EXPECT_EQ(step_report_table(tr).rows().size(), tr.reports.size());
    EXPECT_EQ(tr.reports.size(), 7u);
}

TEST(ParallelFor, VisitsEveryIndexAndRethrows) {
    std::atomic<int> sum{0};
    parallel_for(100, 4, [&](std::size_t i) { sum += static_cast<int>(i); });
    EXPECT_EQ(sum.load(), 4950);
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                     if (i == 7) throw Error(ErrorCode::SolverFailure, "x");
                 }),
                 Error);
}
