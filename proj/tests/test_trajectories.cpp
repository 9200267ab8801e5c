#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cstdlib>

using namespace qmc;

namespace {

// Four-sigma band around the exact probability p.
void expect_within(double estimate, double p, std::int64_t n, const std::string& what) {
    const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / static_cast<double>(n));
    EXPECT_LE(std::abs(estimate - p), 4 * sigma + 1e-12) << what << ": estimate " << estimate << ", exact " << p;
}

TrajectoryConfig config(QmcModel m, int site, Density rho, int steps, int n = 100000, std::uint64_t seed = 7) {
    TrajectoryConfig c{std::move(m), site, std::move(rho), steps, n, seed, std::nullopt};
    return c;
}

void compare_with_evolve(const TrajectoryConfig& c) {
    const auto est = estimate_site_prob(c);
    LatticeState st = LatticeState::point(c.model, c.site, c.rho);
    for (int n = 0; n <= c.steps; ++n) {
        for (int x = c.site - n; x <= c.site + n; ++x) {
            if (!c.model.topology().contains(x)) continue;
            expect_within(est.at(x, n).mean, st.trace_at(x), est.trajectories(),
                          "site " + std::to_string(x) + " step " + std::to_string(n));
        }
        st = evolve(c.model, st, 1);
    }
}

}  // namespace

TEST(Philox, KnownAnswers) {
    using C = Philox4x32::Counter;
    EXPECT_EQ(Philox4x32::generate(C{0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(Philox4x32::generate(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
              (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(Philox4x32::generate(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
              (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, StreamsAreIndependentAndUniform) {
    PhiloxStream a(1, 0), b(1, 1), a2(1, 0);
    double sum = 0.0;
    bool differ = false;
    for (int k = 0; k < 20000; ++k) {
        const double u = a.uniform();
        EXPECT_EQ(u, a2.uniform());
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        differ = differ || u != b.uniform();
        sum += u;
    }
    EXPECT_TRUE(differ);
    EXPECT_NEAR(sum / 20000, 0.5, 4 * std::sqrt(1.0 / 12 / 20000));
}

TEST(Trajectory, DeterministicChainWalksStraight) {
    const CMatrix u = fixtures::mat2(0, 1, 1, 0);
    const QmcModel m = make_homogeneous(Topology::half_line(), 2, Representation::full, fixtures::kraus({u}), std::nullopt,
                                        std::nullopt);
    const auto t = sample_trajectory(config(m, 0, Density::qubit(1, 0), 6), 3);
    ASSERT_EQ(t.path.size(), 7u);
    EXPECT_FALSE(t.killed_at);
    for (int n = 0; n <= 6; ++n) {
        EXPECT_EQ(t.path[n].site, n);
        EXPECT_NEAR(std::abs(t.path[n].state(n % 2, n % 2)), 1.0, 1e-14);
    }
}

TEST(Trajectory, ConditionedStatesStayDensities) {
    std::mt19937_64 rng(3);
    const auto c = config(fixtures::lazy_line(0.3, 0.4, 0.3, 0.6, 0.5), 0, fixtures::random_density(rng), 25);
    for (std::uint64_t k = 0; k < 200; ++k) {
        for (const auto& s : sample_trajectory(c, k).path) {
            EXPECT_NEAR(s.state.trace().real(), 1.0, 1e-10);
            EXPECT_LT(hermitian_defect(s.state), 1e-10);
            Eigen::SelfAdjointEigenSolver<CMatrix> es(s.state);
            EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
        }
    }
}

TEST(Trajectory, DiagonalLineFirstStep) {
    const Density rho = Density::qubit(0.3, {0.1, 0.2});
    const QmcModel m = fixtures::diagonal_line();
    const auto est = estimate_site_prob(config(m, 0, rho, 1));
    const CMatrix r = fixtures::diag_R(), l = fixtures::diag_L();
    const double right = (r * rho.matrix() * r.adjoint()).trace().real();
    const double left = (l * rho.matrix() * l.adjoint()).trace().real();
    EXPECT_NEAR(right + left, 1.0, 1e-14);
    const double sigma = std::sqrt(right * left / 1e5);
    EXPECT_LE(std::abs(est.at(1, 1).mean - right), 3 * sigma);
    EXPECT_LE(std::abs(est.at(-1, 1).mean - left), 3 * sigma);
}

TEST(Trajectory, AbsorbedMassMatchesEvolve) {
    const QmcModel m = fixtures::absorbing_three_site();
    const auto c = config(m, 1, Density::qubit(0.6, 0.2), 8);
    const auto est = estimate_site_prob(c);
    LatticeState st = LatticeState::point(m, 1, c.rho);
    for (int n = 0; n <= 8; ++n) {
        const double lost = 1.0 - st.total_trace();
        const double sigma = std::sqrt(std::max(lost * (1 - lost), 1e-12) / 1e5);
        EXPECT_LE(std::abs(est.absorbed(n).mean - lost), 3 * sigma + 1e-12) << n;
        st = evolve(m, st, 1);
    }
}

TEST(Trajectory, ShearReturnAfterFourSteps) {
    const auto est = estimate_site_prob(config(fixtures::shear_segment(), 2, Density::qubit(0.4, 0.1), 4));
    const double p = 1.0 / 27;
    EXPECT_LE(std::abs(est.at(0, 4).mean - p), 3 * std::sqrt(p * (1 - p) / 1e5));
}

TEST(Trajectory, FlipChainSiteZeroAtTen) {
    const QmcModel m = fixtures::flip_half_line_corner(0.3, 0.2);
    const Density rho = Density::qubit(0.7, 0.3);
    const auto est = estimate_site_prob(config(m, 0, rho, 10));
    const double p = site_prob(m, 0, 0, rho, 10);
    EXPECT_LE(std::abs(est.at(0, 10).mean - p), 3 * std::sqrt(p * (1 - p) / 1e5));
}

TEST(Trajectory, AgreesWithEvolveOnTracePreservingWalks) {
    compare_with_evolve(config(fixtures::lazy_line(0.3, 0.4, 0.3, 0.6, 0.5), 0, Density::qubit(0.2, {0.1, -0.3}), 10));
    compare_with_evolve(config(fixtures::diagonal_line(), 0, Density::maximally_mixed(2), 10));
    compare_with_evolve(config(fixtures::flip_half_line_corner(0.3, 0.2), 0, Density::qubit(0.7, 0.3), 10));
}

TEST(Trajectory, SameSeedSameEstimateAnyThreadCount) {
    auto c = config(fixtures::lazy_line(0.3, 0.4, 0.3, 0.6, 0.5), 0, Density::qubit(0.5, 0.2), 6, 5000, 11);
    c.threads = 1;
    const auto one = estimate_site_prob(c);
    c.threads = 4;
    const auto four = estimate_site_prob(c);
    for (int n = 0; n <= 6; ++n)
        for (int x = -6; x <= 6; ++x) EXPECT_EQ(one.count(x, n), four.count(x, n));
    c.seed = 12;
    const auto other = estimate_site_prob(c);
    bool differ = false;
    for (int x = -6; x <= 6; ++x) differ = differ || other.count(x, 6) != one.count(x, 6);
    EXPECT_TRUE(differ);
}

TEST(Trajectory, StartIsADelta) {
    const auto est = estimate_site_prob(config(fixtures::diagonal_line(), 3, Density::qubit(1, 0), 0, 100));
    EXPECT_EQ(est.at(3, 0).mean, 1.0);
    EXPECT_EQ(est.at(3, 0).std_error, 0.0);
    EXPECT_EQ(est.at(4, 0).mean, 0.0);
}

TEST(Trajectory, RejectsSuperoperatorBlocksAndSmallEnsembles) {
    const QmcModel m = make_homogeneous(Topology::line(), 2, Representation::full, block_from_matrix(0.5 * identity(4)),
                                        std::nullopt, block_from_matrix(0.5 * identity(4)));
    EXPECT_THROW(estimate_site_prob(config(m, 0, Density::qubit(1, 0), 2, 1000)), SchemaError);
    EXPECT_THROW(estimate_site_prob(config(fixtures::diagonal_line(), 0, Density::qubit(1, 0), 2, 99)), SchemaError);
}

TEST(Trajectory, ThreadBudgetFromEnvironment) {
    setenv("QMC_SPECTRA_THREADS", "3", 1);
    EXPECT_EQ(thread_budget(), 3);
    setenv("QMC_SPECTRA_THREADS", "zero", 1);
    EXPECT_THROW(thread_budget(), SchemaError);
    unsetenv("QMC_SPECTRA_THREADS");
    EXPECT_GE(thread_budget(), 1);
}
