#include "fixtures.hpp"
#include "qmc/folding.hpp"

#include <gtest/gtest.h>

using namespace qmc;

namespace {

std::mt19937_64 rng(31337);

CMatrix scaled_random(int n, double scale) { return scale * fixtures::random_matrix(rng, n) / std::sqrt(double(n)); }

/// Random line model with site-dependent blocks near the origin.
QmcModel random_line() {
    const int d = 4;
    std::map<int, SiteBlocks> ov;
    for (int site = -2; site <= 1; ++site)
        ov[site] = SiteBlocks{block_from_matrix(scaled_random(d, 0.4)), block_from_matrix(scaled_random(d, 0.3)),
                              block_from_matrix(scaled_random(d, 0.4))};
    return QmcModel(Topology::line(), 2, Representation::full,
                    SiteBlocks{block_from_matrix(scaled_random(d, 0.4)), block_from_matrix(scaled_random(d, 0.3)),
                               block_from_matrix(scaled_random(d, 0.4))},
                    ov, true);
}

double line_return_sum(const QmcModel& m, int site, const Density& rho, int steps) {
    LatticeState st = LatticeState::point(m, site, rho);
    double sum = st.trace_at(site);
    for (int n = 1; n <= steps; ++n) {
        st = evolve(m, st, 1);
        sum += st.trace_at(site);
    }
    return sum;
}

/// Lazy chain with s = 2k and rt = k^2, r < t.
std::pair<double, double> rates_for(double k) {
    const double half = (1 - 2 * k) / 2, root = std::sqrt(half * half - k * k);
    return {half - root, half + root};
}

}  // namespace

TEST(FoldModel, HomogeneousBlockTable) {
    const QmcModel line = fixtures::shear_line();
    const FoldedModel fm = fold_model(line);
    const auto& h = line.homogeneous();
    const CMatrix a = h.A->matrix, c = h.C->matrix, z = CMatrix::Zero(3, 3);
    EXPECT_EQ(fm.folded.block_dim(), 6);
    EXPECT_EQ(fm.folded.copies(), 2);
    for (int n : {1, 2, 5}) {
        EXPECT_EQ(fm.folded.A(n), detail::block_diag(a, c));
        EXPECT_EQ(fm.folded.B(n), detail::block_diag(z, z));
        EXPECT_EQ(fm.folded.C(n), detail::block_diag(c, a));
    }
    CMatrix g0(6, 6);
    g0 << z, a, c, z;
    EXPECT_EQ(fm.folded.B(0), g0);
    EXPECT_EQ(fm.folded.A(0), detail::block_diag(a, c));
}

TEST(FoldModel, DiagonalWalkFirstBlock) {
    const FoldedModel fm = fold_model(fixtures::diagonal_line());
    EXPECT_LT((fm.folded.A(0) - detail::block_diag(conj_rep(fixtures::diag_R()), conj_rep(fixtures::diag_L()))).norm(), 1e-15);
}

TEST(FoldModel, PreservesTracePreservation) {
    for (const auto& line : {fixtures::diagonal_line(), fixtures::lazy_line(0.2, 0.5, 0.3, 0.4, 0.3), fixtures::shear_line()}) {
        ASSERT_TRUE(line.trace_preserving());
        EXPECT_TRUE(fold_model(line).folded.trace_preserving());
    }
}

TEST(FoldModel, RejectsNonLine) {
    EXPECT_THROW(fold_model(fixtures::flip_half_line(0.3, 0.2)), SchemaError);
    EXPECT_THROW(split_line(fixtures::absorbing_three_site()), SchemaError);
}

TEST(FoldModel, SiteBookkeeping) {
    EXPECT_EQ(FoldedModel::original_sites(3), std::make_pair(3, -4));
    EXPECT_EQ(FoldedModel::locate(-4), std::make_pair(3, 2));
    EXPECT_EQ(FoldedModel::locate(2), std::make_pair(2, 1));
}

TEST(UnfoldBlock, ZeroStepsAndBadTags) {
    const FoldedModel fm = fold_model(fixtures::shear_line());
    const CMatrix p0 = power_block(fm.folded, 2, 2, 0);
    EXPECT_EQ(unfold_block(p0, "11"), identity(3));
    EXPECT_EQ(unfold_block(p0, "22"), identity(3));
    EXPECT_EQ(unfold_block(p0, 1, 2).norm(), 0.0);
    EXPECT_EQ(unfold_block(p0, 2, 1).norm(), 0.0);
    EXPECT_THROW(unfold_block(p0, "13"), SchemaError);
    EXPECT_THROW(unfold_block(p0, "1"), SchemaError);
    EXPECT_THROW(unfold_block(CMatrix::Zero(3, 3), 1, 1), SchemaError);
}

TEST(UnfoldBlock, RoundTripOnRandomLines) {
    for (int trial = 0; trial < 3; ++trial) {
        const QmcModel line = random_line();
        const FoldedModel fm = fold_model(line);
        for (int n = 0; n <= 8; ++n)
            for (int j : {-3, -1, 0, 2})
                for (int i : {-2, -1, 0, 1}) {
                    const CMatrix direct = power_block(line, j, i, n);
                    EXPECT_LT((line_block_via_fold(fm, j, i, n) - direct).norm(), 1e-9 * std::max(1.0, direct.norm()))
                        << "n=" << n << " j=" << j << " i=" << i;
                }
    }
}

TEST(UnfoldBlock, DiagonalWalkMatchesEvolution) {
    const QmcModel line = fixtures::diagonal_line();
    const FoldedModel fm = fold_model(line);
    const Density rho = fixtures::random_density(rng);
    const LatticeState st = evolve(line, LatticeState::point(line, 1, rho), 4);
    for (int j : {-1, 1, 3}) {
        const CVector v = line_block_via_fold(fm, j, 1, 4) * encode(rho.matrix(), Representation::full);
        EXPECT_LT((unvec(v) - st.matrix_at(j)).norm(), 1e-10) << "j=" << j;
    }
}

TEST(UnfoldBlock, CrossQuadrantLocality) {
    const FoldedModel fm = fold_model(fixtures::diagonal_line());
    const auto folded_power = [&](int j, int i, int n) { return power_block(fm.folded, j, i, n); };
    // Site i to site -j-1 needs at least i + j + 1 steps.
    for (int i : {0, 1, 2})
        for (int j : {0, 1, 2}) {
            for (int n = 0; n < i + j + 1; ++n) EXPECT_EQ(unfold_block(folded_power(j, i, n), 2, 1).norm(), 0.0);
            EXPECT_GT(unfold_block(folded_power(j, i, i + j + 1), 2, 1).norm(), 1e-6);
        }
}

TEST(KmOnLine, TruncatedDiagonalWalk) {
    const FoldedModel fm = fold_model(fixtures::diagonal_line(), 6);
    const DiscreteWeight w = folded_weight(fm);
    EXPECT_LT((km_on_line(fm, w, 0, 0, 0) - identity(4)).norm(), 1e-10);
    for (int n = 0; n <= 6; ++n)
        for (auto [j, i] : {std::pair{0, 0}, std::pair{-1, 0}, std::pair{2, -2}, std::pair{-3, 1}}) {
            const auto [fj, a] = FoldedModel::locate(j);
            const auto [fi, b] = FoldedModel::locate(i);
            const CMatrix expect = unfold_block(power_block(fm.folded, fj, fi, n), a, b);
            EXPECT_LT((km_on_line(fm, w, j, i, n) - expect).norm(), 1e-8) << "n=" << n << " j=" << j << " i=" << i;
        }
}

TEST(KmOnLine, WeightQuadrantsAreAdjoint) {
    const FoldedModel fm = fold_model(fixtures::lazy_line(0.2, 0.5, 0.3, 0.4, 0.3), 5);
    for (const auto& p : folded_weight(fm).points) {
        EXPECT_LT((unfold_block(p.weight, 2, 1) - unfold_block(p.weight, 1, 2).adjoint()).norm(), 1e-8);
        EXPECT_LT(std::abs(p.node.imag()), 1e-10);
    }
}

TEST(KmOnLine, RefusesNonSymmetrizableFold) {
    const FoldedModel fm = fold_model(fixtures::shear_line(), 4);
    EXPECT_THROW(km_on_line(fm, DiscreteWeight{}, 0, 1, 2), SchemaError);
}

TEST(FoldedPi, BlockStructureFromHalfLineSymmetrizers) {
    const double r = 0.2, t = 0.3;
    const FoldedModel fm = fold_model(fixtures::lazy_line(r, 0.5, t, 0.4, 0.3));
    const Symmetrizer sym = find_symmetrizer(fm.folded, 6, folded_pi0(fm));
    ASSERT_TRUE(sym.success) << sym.reason;
    for (int k = 0; k <= 6; ++k) {
        // Half-line symmetrizers of the two halves: (r/t)^k upward, (t/r)^(k+1) downward.
        const CMatrix expect = detail::block_diag(std::pow(r / t, k) * identity(4), std::pow(t / r, k + 1) * identity(4));
        EXPECT_LT((sym.pi[k] - expect).norm(), 1e-10 * expect.norm()) << "k=" << k;
    }
}

TEST(LineStieltjes, AgreesWithExactTailTransform) {
    for (const auto& line : {fixtures::diagonal_line(), fixtures::shear_line(), fixtures::lazy_line(0.2, 0.5, 0.3, 0.4, 0.3)}) {
        for (int site : {0, -1}) {
            const LineStieltjes folded(line, site);
            const SiteTransform direct(line, site);
            for (Complex z : {Complex(1.3), Complex(2.0), Complex(1.05)})
                EXPECT_LT((folded(z) - direct(z)).norm(), 1e-8 * std::max(1.0, direct(z).norm())) << "site=" << site << " z=" << z;
        }
    }
    EXPECT_THROW(LineStieltjes(fixtures::diagonal_line(), 1), SchemaError);
}

TEST(ClassifyOnLine, DiagonalWalk) {
    const QmcModel line = fixtures::diagonal_line();
    const auto c = classify_recurrence_on_line(line, 0, Density::qubit(1, 0));
    EXPECT_EQ(c.verdict, Verdict::transient);
    ASSERT_TRUE(c.limit);
    EXPECT_NEAR(*c.limit, 3.0, 1e-4);
    EXPECT_EQ(classify_recurrence_on_line(line, 0, Density::qubit(0, 0)).verdict, Verdict::recurrent);
    EXPECT_EQ(classify_recurrence_on_line(line, 0, Density::maximally_mixed(2)).verdict, Verdict::recurrent);
    EXPECT_EQ(classify_recurrence_on_line(line, -1, Density::maximally_mixed(2)).verdict, Verdict::recurrent);
}

TEST(ClassifyOnLine, LazyLineRecurrentOnlyWhenBalanced) {
    const Density rho = Density::maximally_mixed(2);
    EXPECT_EQ(classify_recurrence_on_line(fixtures::lazy_line(0.25, 0.5, 0.25, 0.4, 0.3), 0, rho).verdict, Verdict::recurrent);
    for (double k : {0.1, 0.15, 0.2}) {
        const auto [r, t] = rates_for(k);
        for (const auto& line : {fixtures::lazy_line(r, 2 * k, t, 0.4, 0.3), fixtures::lazy_line(t, 2 * k, r, 0.4, 0.3)}) {
            for (int site : {0, -1}) {
                const auto c = classify_recurrence_on_line(line, site, rho);
                EXPECT_EQ(c.verdict, Verdict::transient) << "k=" << k;
                ASSERT_TRUE(c.limit);
                EXPECT_NEAR(*c.limit, 1 / std::sqrt(1 - 4 * k), 1e-4) << "k=" << k;
            }
        }
    }
}

TEST(ClassifyHalfLine, LimitIsInverseOfLargerRate) {
    const Density rho = Density::maximally_mixed(2);
    for (auto [r, s, t] : {std::tuple{0.2, 0.5, 0.3}, std::tuple{0.1, 0.3, 0.6}, std::tuple{0.3, 0.4, 0.3}, std::tuple{0.4, 0.4, 0.2}}) {
        const auto c = classify_recurrence(fixtures::lazy_half_line(r, s, t, 0.4, 0.3), 0, rho);
        EXPECT_EQ(c.verdict, Verdict::transient);
        ASSERT_TRUE(c.limit);
        EXPECT_NEAR(*c.limit, 1 / std::max(r, t), 1e-4) << "r=" << r << " t=" << t;
    }
}

TEST(ClassifyOnLine, ShearLineMatchesPartialSums) {
    const QmcModel line = fixtures::shear_line();
    for (double a : {0.0, 0.5, 1.0}) {
        const Density rho = Density::qubit(a, 0);
        const auto c = classify_recurrence_on_line(line, 0, rho);
        EXPECT_EQ(c.verdict, Verdict::transient);
        ASSERT_TRUE(c.limit);
        EXPECT_NEAR(*c.limit, line_return_sum(line, 0, rho, 600), 1e-6) << "a=" << a;
    }
}

TEST(ClassifyOnLine, SameHalvesShortcut) {
    // Feeding the upper half-line transform into both halves.
    const QmcModel shear = fixtures::shear_line();
    for (double a : {0.0, 0.2, 1.0}) {
        const Density rho = Density::qubit(a, 0);
        const double shortcut = density_trace(shear, line_transform_same_halves(shear, 1.0 + 1e-10), rho);
        EXPECT_NEAR(shortcut, (182 * a + 595) / 425, 1e-6);
        const auto c = classify_recurrence_on_line(shear, 0, rho);
        ASSERT_TRUE(c.limit);
        EXPECT_NEAR(*c.limit, (119 + 56 * a) / 85, 1e-6);
    }
    // With A = C both halves coincide and the shortcut is exact.
    const QmcModel lazy = fixtures::lazy_line(0.2, 0.6, 0.2, 0.4, 0.3);
    for (Complex z : {Complex(1.2), Complex(1.01)})
        EXPECT_LT((line_transform_same_halves(lazy, z) - LineStieltjes(lazy, 0)(z)).norm(), 1e-10);
}
