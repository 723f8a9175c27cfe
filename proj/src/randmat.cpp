#include "factorlens/randmat.hpp"

#include <cmath>
#include <string>

#include "factorlens/errors.hpp"

namespace factorlens::randmat {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(SeedSpec seed) {
    std::uint64_t state = mix64(seed.master_seed + kGolden) ^ mix64((seed.stream_index + 1) * kGolden);
    for (auto& word : s_) {
        state += kGolden;
        word = mix64(state);
    }
}

Rng::result_type Rng::operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

linalg::LowerTriangular sample_bartlett_factor(int p, int n, Rng& rng) {
    if (p < 1 || n < p) {
        throw BadDimension("sample_bartlett_factor: need 1 <= p <= n, got p=" + std::to_string(p) +
                           " n=" + std::to_string(n));
    }
    const auto dim = static_cast<std::size_t>(p);
    linalg::LowerTriangular a(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        // 0-based row i carries chi2 with n - i degrees of freedom.
        a.at(i, i) = std::sqrt(rng.chi_squared(static_cast<double>(n) - static_cast<double>(i)));
        for (std::size_t j = 0; j < i; ++j) {
            a.at(i, j) = rng.normal();
        }
    }
    return a;
}

linalg::SymMatrix sample_wishart_identity(int p, int n, SeedSpec seed) {
    Rng rng(seed);
    return linalg::gram(sample_bartlett_factor(p, n, rng));
}

PrecisionStats sample_V11_null(int p, int T, int K, SeedSpec seed, bool demeaned) {
    const int t_eff = demeaned ? T - 1 : T;
    if (p < 1 || K < 0 || p + K >= t_eff) {
        throw BadDimension("sample_V11_null: need p + K < T_eff, got p=" + std::to_string(p) +
                           " K=" + std::to_string(K) + " T_eff=" + std::to_string(t_eff));
    }
    Rng rng(seed);
    const linalg::LowerTriangular a = sample_bartlett_factor(p, t_eff - K, rng);
    return make_precision_stats(linalg::inverse_from_cholesky(a), linalg::gram(a), T, K, demeaned);
}

std::vector<double> sample_mvn(std::span<const double> mean, const linalg::LowerTriangular& cov_chol,
                               Rng& rng) {
    if (mean.size() != cov_chol.dim()) {
        throw BadDimension("sample_mvn: mean has length " + std::to_string(mean.size()) +
                           " but covariance factor has dimension " + std::to_string(cov_chol.dim()));
    }
    std::vector<double> z(mean.size());
    for (double& v : z) {
        v = rng.normal();
    }
    std::vector<double> out = linalg::lower_times(cov_chol, z);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += mean[i];
    }
    return out;
}

std::vector<double> sample_mvn(std::span<const double> mean, const linalg::LowerTriangular& cov_chol,
                               SeedSpec seed) {
    Rng rng(seed);
    return sample_mvn(mean, cov_chol, rng);
}

}  // namespace factorlens::randmat
