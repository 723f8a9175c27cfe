#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "factorlens/linalg.hpp"
#include "factorlens/precision_stats.hpp"

namespace factorlens::randmat {

/// Identifies one random substream. The stream is a pure function of both
/// fields, so work split across threads by stream_index is reproducible.
struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t stream_index = 0;
};

/// xoshiro256** seeded from a SeedSpec through splitmix64.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(SeedSpec seed);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() noexcept;

    double normal() { return normal_(*this); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(*this); }
    double chi_squared(double dof) { return std::chi_squared_distribution<double>(dof)(*this); }
    std::uint64_t below(std::uint64_t bound) {
        return std::uniform_int_distribution<std::uint64_t>(0, bound - 1)(*this);
    }

private:
    std::uint64_t s_[4];
    std::normal_distribution<double> normal_;
};

/// Lower Bartlett factor A of W = A A^T ~ W_p(n, I): A_ii = sqrt(chi2_{n-i+1})
/// (1-based i), A_ij ~ N(0,1) below the diagonal.
linalg::LowerTriangular sample_bartlett_factor(int p, int n, Rng& rng);

/// W ~ W_p(n, I).
linalg::SymMatrix sample_wishart_identity(int p, int n, SeedSpec seed);

/// Null draw of the precision block: V11^{-1} ~ W_p(T_eff - K, I) and
/// V11 = (V11^{-1})^{-1}. In inverse-Wishart notation V11 has
/// T_eff - K + p + 1 degrees of freedom (nu = n + p + 1).
PrecisionStats sample_V11_null(int p, int T, int K, SeedSpec seed, bool demeaned = false);

/// mean + L z with z i.i.d. N(0,1).
std::vector<double> sample_mvn(std::span<const double> mean, const linalg::LowerTriangular& cov_chol,
                               SeedSpec seed);
std::vector<double> sample_mvn(std::span<const double> mean, const linalg::LowerTriangular& cov_chol,
                               Rng& rng);

}  // namespace factorlens::randmat
