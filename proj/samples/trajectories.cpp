// Monte Carlo occupation of the flip chain compared with exact evolution.

#include "qmc/qmc.hpp"

#include <cmath>
#include <cstdio>

int main() {
    using namespace qmc;
    const double p = 0.3, q = 0.2;
    const CMatrix x = (CMatrix(2, 2) << 0, 1, 1, 0).finished();
    const CMatrix z = (CMatrix(2, 2) << 1, 0, 0, -1).finished();
    const Block right = block_from_kraus({std::sqrt(q / 2) * z, std::sqrt((1 - q) / 2) * x}, Representation::full);
    const Block left = block_from_kraus({std::sqrt(p / 2) * identity(2), std::sqrt((1 - p) / 2) * x}, Representation::full);
    std::map<int, SiteBlocks> corner;
    corner[0].B = right;
    const QmcModel m = make_homogeneous(Topology::half_line(), 2, Representation::full, right, std::nullopt, left, false, corner);

    const Density rho = Density::qubit(0.7, 0.3);
    TrajectoryConfig cfg{m, 0, rho, 10, 100000, 0, std::nullopt};
    const OccupationEstimate est = estimate_site_prob(cfg);
    LatticeState st = LatticeState::point(m, 0, rho);
    std::printf("step  exact p_00     estimate       stderr\n");
    for (int n = 0; n <= 10; ++n) {
        if (n % 2 == 0) std::printf("%4d  %.10f   %.10f   %.2e\n", n, st.trace_at(0), est.at(0, n).mean, est.at(0, n).std_error);
        st = evolve(m, st, 1);
    }
}
