// A walk without a symmetrizer: row-0 blocks still follow from the weights.

#include "qmc/qmc.hpp"

#include <cmath>
#include <cstdio>

int main() {
    using namespace qmc;
    const double c = 1 / std::sqrt(3.0);
    const CMatrix a = (CMatrix(2, 2) << c, c, 0, c).finished();
    const CMatrix back = (CMatrix(2, 2) << c, 0, -c, c).finished();
    const QmcModel m = make_homogeneous(Topology::segment(3), 2, Representation::full,
                                        block_from_kraus({a}, Representation::full), std::nullopt,
                                        block_from_kraus({back}, Representation::full), true);

    const SemiOrthogonalSystem s = nonsym_finite_weights(m);
    std::printf("symmetrizable: %s\n", find_symmetrizer(m, 2).success ? "yes" : "no");
    std::printf("%zu nodes, largest semi-orthogonality residual %.3g\n", s.weight.points.size(), s.worst_residual());
    for (const auto& p : s.weight.points) {
        const double re = std::abs(p.node.real()) < 1e-12 ? 0.0 : p.node.real();
        const double im = std::abs(p.node.imag()) < 1e-12 ? 0.0 : p.node.imag();
        std::printf("  % .12f %+.12fi\n", re, im);
    }

    const Density rho = Density::qubit(0.3, 0.1);
    for (int n = 2; n <= 10; n += 2)
        std::printf("p_20(%2d) = %.12f (evolution %.12f)\n", n, km_row0_probability(s, 2, rho, n), site_prob(m, 2, 0, rho, n));
}
