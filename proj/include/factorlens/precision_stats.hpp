#pragma once

#include <vector>

#include "factorlens/linalg.hpp"

namespace factorlens {

/// Top-left p x p block V11 of the sample precision V = (T_eff S)^{-1}
/// together with its inverse and both diagonals.
///
/// Under normality V11^{-1} ~ W_p(T_eff - K, Omega11^{-1}); equivalently V11 is
/// inverse-Wishart with T_eff - K + p + 1 degrees of freedom. The statistics
/// use n = T_eff - K - p + 1 residual degrees of freedom.
struct PrecisionStats {
    int p = 0;
    int T = 0;
    int K = 0;
    bool demeaned = false;
    int dof_n = 0;
    linalg::SymMatrix V11;
    linalg::SymMatrix V11_inv;
    std::vector<double> diag_V11;
    std::vector<double> diag_V11_inv;

    /// Sample size entering every degrees-of-freedom expression.
    int effective_T() const noexcept { return demeaned ? T - 1 : T; }
};

/// Packages a precision block, inverting it once by Cholesky.
PrecisionStats make_precision_stats(linalg::SymMatrix v11, int T, int K, bool demeaned);

/// Same, when the inverse is already known (e.g. a sampled Wishart matrix).
PrecisionStats make_precision_stats(linalg::SymMatrix v11, linalg::SymMatrix v11_inv, int T, int K,
                                    bool demeaned);

}  // namespace factorlens
