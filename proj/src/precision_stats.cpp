#include "factorlens/precision_stats.hpp"

#include <string>

#include "factorlens/errors.hpp"

namespace factorlens {

namespace {

void check_dims(std::size_t p, int T, int K, bool demeaned) {
    const int t_eff = demeaned ? T - 1 : T;
    if (p < 1 || K < 0 || static_cast<int>(p) + K >= t_eff) {
        throw BadDimension("PrecisionStats: need p + K < T_eff, got p=" + std::to_string(p) +
                           " K=" + std::to_string(K) + " T_eff=" + std::to_string(t_eff));
    }
}

}  // namespace

PrecisionStats make_precision_stats(linalg::SymMatrix v11, int T, int K, bool demeaned) {
    linalg::SymMatrix inv = linalg::invert_spd(v11);
    return make_precision_stats(std::move(v11), std::move(inv), T, K, demeaned);
}

PrecisionStats make_precision_stats(linalg::SymMatrix v11, linalg::SymMatrix v11_inv, int T, int K,
                                    bool demeaned) {
    check_dims(v11.dim(), T, K, demeaned);
    if (v11_inv.dim() != v11.dim()) {
        throw BadDimension("PrecisionStats: V11 and its inverse differ in dimension");
    }
    PrecisionStats ps;
    ps.p = static_cast<int>(v11.dim());
    ps.T = T;
    ps.K = K;
    ps.demeaned = demeaned;
    ps.dof_n = ps.effective_T() - K - ps.p + 1;
    ps.diag_V11 = v11.diag();
    ps.diag_V11_inv = v11_inv.diag();
    ps.V11 = std::move(v11);
    ps.V11_inv = std::move(v11_inv);
    return ps;
}

}  // namespace factorlens
