// Nodes and weights of the lazy walk on five sites, and a transition block recovered from them.

#include "qmc/qmc.hpp"

#include <cmath>
#include <cstdio>

int main() {
    using namespace qmc;
    // forward and backward rates r = t = 1/4, lazy rate s = 1/2 with coin parameters a = b = 1/2
    const double r = 0.25, s = 0.5, t = 0.25, a = 0.5, b = 0.5;
    const CMatrix v1 = std::sqrt(s) * (CMatrix(2, 2) << a, b, b, -a).finished();
    const CMatrix v2 = std::sqrt(s * (1 - a * a - b * b)) * identity(2);
    const Block right = block_from_kraus({std::sqrt(t) * identity(2)}, Representation::full);
    const Block stay = block_from_kraus({v1, v2}, Representation::full);
    const Block left = block_from_kraus({std::sqrt(r) * identity(2)}, Representation::full);
    const QmcModel m = make_homogeneous(Topology::segment(5), 2, Representation::full, right, stay, left, true);

    const DiscreteWeight w = finite_spectrum_weights(m);
    std::printf("%-22s %s\n", "node", "multiplicity");
    for (const auto& p : w.points) std::printf("%-22.12f %d\n", std::abs(p.node.real()) < 1e-12 ? 0.0 : p.node.real(), p.multiplicity);

    const Density rho = Density::qubit(0.5, 0.25);
    for (int n : {2, 6, 10})
        std::printf("p_40(%d): spectral %.12f, evolution %.12f\n", n, km_probability(m, w, 4, 0, rho, n), site_prob(m, 0, 4, rho, n));
}
