#include "factorlens/powersim.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "factorlens/errors.hpp"
#include "factorlens/parallel.hpp"
#include "factorlens/randmat.hpp"
#include "factorlens/special.hpp"
#include "factorlens/teststats.hpp"

namespace factorlens::powersim {

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

void require_rho(double rho) {
    if (!(std::abs(rho) <= kMaxAbsRho)) {
        throw DomainError("scenario rho must satisfy |rho| <= 0.5, got " + std::to_string(rho));
    }
}

int k_tilde_from(double grid_value) {
    const double r = std::round(grid_value);
    if (r != grid_value || r < 0 || r > kMaxKTilde) {
        throw DomainError("scenario S4: k_tilde must be an integer in [0,10], got " + std::to_string(grid_value));
    }
    return static_cast<int>(r);
}

}  // namespace

std::string_view to_string(Scenario s) {
    switch (s) {
    case Scenario::S1_single_corr:
        return "s1";
    case Scenario::S2_column:
        return "s2";
    case Scenario::S3_ar1:
        return "s3";
    case Scenario::S4_extra_factors:
        return "s4";
    }
    return "unknown";
}

Scenario scenario_from_string(std::string_view name) {
    for (Scenario s : {Scenario::S1_single_corr, Scenario::S2_column, Scenario::S3_ar1, Scenario::S4_extra_factors}) {
        if (name == to_string(s)) {
            return s;
        }
    }
    throw ParseError("unknown scenario '" + std::string(name) + "' (expected s1, s2, s3 or s4)");
}

std::string_view to_string(CriticalSource s) {
    return s == CriticalSource::calibrated ? "calibrated" : "bonferroni_or_asymptotic";
}

void ScenarioConfig::validate() const {
    teststats::FactorModelSpec{p, K, T, demeaned}.validate();
    if (reps < 1) {
        throw BadDimension("ScenarioConfig: reps must be positive");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("ScenarioConfig: alpha must lie in (0,1)");
    }
    if (scenario == Scenario::S4_extra_factors) {
        k_tilde_from(k_tilde);
    } else {
        require_rho(rho);
    }
}

linalg::SymMatrix build_sigma_u(Scenario scenario, int p, double rho) {
    if (p < 2) {
        throw BadDimension("build_sigma_u: p must be at least 2");
    }
    require_rho(rho);
    const auto n = static_cast<std::size_t>(p);
    linalg::SymMatrix delta = linalg::SymMatrix::identity(n);
    switch (scenario) {
    case Scenario::S1_single_corr:
        delta.set(0, 1, rho);
        break;
    case Scenario::S2_column: {
        linalg::SymMatrix m = linalg::SymMatrix::identity(n);
        const double magnitude = std::abs(rho) / std::sqrt(1.0 + 3.0 * (p - 1) * rho * rho / 2.0);
        for (std::size_t j = 1; j < n; ++j) {
            // sign(rho^{j}) for zero-based column j
            const double sign = (rho < 0.0 && j % 2 == 1) ? -1.0 : 1.0;
            m.set(0, j, sign * magnitude);
        }
        delta = linalg::invert_spd(m);
        break;
    }
    case Scenario::S3_ar1:
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < i; ++j) {
                delta.set(i, j, std::pow(rho, static_cast<double>(i - j)));
            }
        }
        break;
    case Scenario::S4_extra_factors:
        break;
    }
    linalg::cholesky(delta);  // guard: throws NotPositiveDefinite
    return delta;
}

Dataset generate_dataset(const ScenarioConfig& cfg, double grid_value, std::uint64_t rep_index) {
    const bool s4 = cfg.scenario == Scenario::S4_extra_factors;
    const int k_tilde = s4 ? k_tilde_from(grid_value) : 0;
    const linalg::SymMatrix delta = build_sigma_u(cfg.scenario, cfg.p, s4 ? 0.0 : grid_value);
    const linalg::LowerTriangular chol = linalg::cholesky(delta);

    const auto p = static_cast<std::size_t>(cfg.p);
    const auto k_fit = static_cast<std::size_t>(cfg.K);
    const auto k_all = k_fit + static_cast<std::size_t>(k_tilde);
    const auto t_len = static_cast<std::size_t>(cfg.T);

    randmat::Rng rng({cfg.master_seed, rep_index});
    std::vector<double> eta(p);
    for (auto& e : eta) {
        e = rng.uniform(1.0, 2.0);
    }
    linalg::Matrix b(p, k_all);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t k = 0; k < k_all; ++k) {
            b(i, k) = rng.uniform(-1.0, 1.0);
        }
    }

    Dataset out{linalg::Matrix(p, t_len), linalg::Matrix(k_fit, t_len)};
    std::vector<double> f(k_all);
    std::vector<double> z(p);
    for (std::size_t t = 0; t < t_len; ++t) {
        for (auto& v : f) {
            v = rng.normal();
        }
        for (auto& v : z) {
            v = rng.normal();
        }
        const std::vector<double> u = linalg::lower_times(chol, z);
        for (std::size_t i = 0; i < p; ++i) {
            double x = eta[i] * u[i];
            for (std::size_t k = 0; k < k_all; ++k) {
                x += b(i, k) * f[k];
            }
            out.X(i, t) = x;
        }
        for (std::size_t k = 0; k < k_fit; ++k) {
            out.F(k, t) = f[k];
        }
    }
    return out;
}

const std::vector<double>& PowerCurve::rates_for(std::string_view test) const {
    for (std::size_t t = 0; t < tests.size(); ++t) {
        if (tests[t] == test) {
            return rates[t];
        }
    }
    throw DomainError("PowerCurve: no test named '" + std::string(test) + "'");
}

CalibratedCriticals criticals_from_tables(const ScenarioConfig& cfg,
                                          std::span<const calibrate::CriticalValueTable> tables) {
    auto find = [&](calibrate::Statistic s) {
        for (const auto& t : tables) {
            if (t.statistic == s && t.p == cfg.p && t.T == cfg.T && t.K == cfg.K && t.demeaned == cfg.demeaned) {
                return t.critical_value(cfg.alpha);
            }
        }
        throw MissingCalibration("power study: no calibrated " + std::string(calibrate::to_string(s)) +
                                 " table for p=" + std::to_string(cfg.p) + " T=" + std::to_string(cfg.T) +
                                 " K=" + std::to_string(cfg.K));
    };
    return {find(calibrate::Statistic::T_el), find(calibrate::Statistic::T_pr), find(calibrate::Statistic::T_LR)};
}

std::vector<PowerCurve> run_power_studies(const ScenarioConfig& cfg, std::span<const double> grid,
                                          std::span<const CriticalSource> sources,
                                          std::span<const calibrate::CriticalValueTable> tables, unsigned workers) {
    cfg.validate();
    if (grid.empty()) {
        throw BadDimension("power study: empty grid");
    }
    // Criticals per source, in test order el, pr, lr.
    struct Rule {
        double el, pr, lr;
        bool lr_standardized;
    };
    std::vector<Rule> rules;
    for (CriticalSource src : sources) {
        if (src == CriticalSource::calibrated) {
            const auto c = criticals_from_tables(cfg, tables);
            rules.push_back({c.t_el, c.t_pr, c.t_lr, false});
        } else {
            const double el = calibrate::bonferroni_critical_el(cfg.alpha, cfg.p, cfg.T, cfg.K, cfg.demeaned);
            const double pr = calibrate::bonferroni_critical_pr(cfg.alpha, cfg.p, cfg.T, cfg.K, cfg.demeaned);
            if (cfg.lr_asymptotic == LrAsymptotic::chi2) {
                rules.push_back({el, pr, calibrate::lr_chi2_critical(cfg.alpha, cfg.p), false});
            } else {
                rules.push_back({el, pr, special::normal_quantile(1.0 - cfg.alpha), true});
            }
        }
    }

    const std::size_t n_grid = grid.size();
    const auto reps = static_cast<std::size_t>(cfg.reps);
    const std::size_t n_rules = rules.size();
    // Per (grid, rep): one byte per (rule, test) rejection flag.
    std::vector<unsigned char> flags(n_grid * reps * n_rules * 3, 0);
    parallel_for(n_grid * reps, workers, [&](std::size_t idx) {
        const std::size_t g = idx / reps;
        const std::size_t r = idx % reps;
        const Dataset data = generate_dataset(cfg, grid[g], r);
        const PrecisionStats ps = teststats::precision_stats_from_data(data.X, data.F, cfg.demeaned);
        const teststats::TestStatistics st = teststats::compute_statistics(ps);
        unsigned char* slot = flags.data() + idx * n_rules * 3;
        for (std::size_t k = 0; k < n_rules; ++k) {
            const Rule& rule = rules[k];
            const double lr = rule.lr_standardized
                                  ? asymptotics::tlr_standardize(st.ln_t_lr_star, ps.p, ps.effective_T(), ps.K)
                                  : st.t_lr;
            slot[3 * k] = st.t_el > rule.el;
            slot[3 * k + 1] = st.t_pr > rule.pr;
            slot[3 * k + 2] = lr > rule.lr;
        }
    });

    std::vector<PowerCurve> curves;
    for (std::size_t k = 0; k < n_rules; ++k) {
        PowerCurve c;
        c.config = cfg;
        c.source = sources[k];
        c.grid.assign(grid.begin(), grid.end());
        if (sources[k] == CriticalSource::calibrated) {
            c.tests = {"T_el", "T_pr", "T_LR"};
        } else {
            c.tests = {"T_el-B", "T_pr-B", "T_LR-as"};
        }
        c.rates.assign(3, std::vector<double>(n_grid));
        c.mc_se.assign(3, std::vector<double>(n_grid));
        for (std::size_t g = 0; g < n_grid; ++g) {
            for (std::size_t t = 0; t < 3; ++t) {
                std::size_t count = 0;
                for (std::size_t r = 0; r < reps; ++r) {
                    count += flags[((g * reps + r) * n_rules + k) * 3 + t];
                }
                const double rate = static_cast<double>(count) / static_cast<double>(reps);
                c.rates[t][g] = rate;
                c.mc_se[t][g] = std::sqrt(rate * (1.0 - rate) / static_cast<double>(reps));
            }
        }
        curves.push_back(std::move(c));
    }
    return curves;
}

PowerCurve run_power_study(const ScenarioConfig& cfg, std::span<const double> grid, CriticalSource source,
                           std::span<const calibrate::CriticalValueTable> tables, unsigned workers) {
    const CriticalSource one[] = {source};
    return std::move(run_power_studies(cfg, grid, one, tables, workers).front());
}

void write_csv(std::ostream& out, std::span<const PowerCurve> curves) {
    out << "scenario,grid_value,test,critical_source,power,mc_se\n";
    for (const auto& c : curves) {
        for (std::size_t g = 0; g < c.grid.size(); ++g) {
            for (std::size_t t = 0; t < c.tests.size(); ++t) {
                out << to_string(c.config.scenario) << ',' << shortest(c.grid[g]) << ',' << c.tests[t] << ','
                    << to_string(c.source) << ',' << shortest(c.rates[t][g]) << ',' << shortest(c.mc_se[t][g])
                    << '\n';
            }
        }
    }
}

}  // namespace factorlens::powersim
