#include "factorlens/calibrate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>

#include "factorlens/errors.hpp"
#include "factorlens/parallel.hpp"
#include "factorlens/randmat.hpp"
#include "factorlens/special.hpp"

namespace factorlens::calibrate {

namespace {

constexpr std::pair<Statistic, std::string_view> kNames[] = {
    {Statistic::T_el, "T_el"},
    {Statistic::T_pr, "T_pr"},
    {Statistic::T_LR, "T_LR"},
    {Statistic::ln_T_LR_star, "ln_T_LR_star"},
    {Statistic::T_LR_standardized, "T_LR_standardized"},
};

void require_alpha(double alpha, const char* who) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError(std::string(who) + ": alpha must lie in (0,1), got " + std::to_string(alpha));
    }
}

int checked_dof(int p, int T, int K, bool demeaned, const char* who) {
    teststats::FactorModelSpec spec{p, K, T, demeaned};
    try {
        spec.validate();
    } catch (const BadDimension& e) {
        throw DomainError(std::string(who) + ": " + e.what());
    }
    return spec.dof_n();
}

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

}  // namespace

std::string_view to_string(Statistic s) {
    for (const auto& [stat, name] : kNames) {
        if (stat == s) {
            return name;
        }
    }
    return "unknown";
}

Statistic statistic_from_string(std::string_view name) {
    for (const auto& [stat, n] : kNames) {
        if (n == name) {
            return stat;
        }
    }
    throw ParseError("unknown statistic '" + std::string(name) + "'");
}

double evaluate(Statistic s, const teststats::TestStatistics& stats, const PrecisionStats& ps,
                asymptotics::LrScale lr_scale) {
    switch (s) {
    case Statistic::T_el:
        return stats.t_el;
    case Statistic::T_pr:
        return stats.t_pr;
    case Statistic::T_LR:
        return stats.t_lr;
    case Statistic::ln_T_LR_star:
        return stats.ln_t_lr_star;
    case Statistic::T_LR_standardized:
        return asymptotics::tlr_standardize(stats.ln_t_lr_star, ps.p, ps.effective_T(), ps.K, lr_scale);
    }
    throw DomainError("evaluate: unknown statistic");
}

double CriticalValueTable::critical_value(double alpha) const {
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        if (alphas[k] == alpha) {
            return critical_values[k];
        }
    }
    if (null_sample) {
        require_alpha(alpha, "critical_value");
        return empirical_quantile(*null_sample, 1.0 - alpha);
    }
    throw MissingCalibration("critical_value: alpha " + std::to_string(alpha) + " is not tabulated for " +
                             std::string(to_string(statistic)) + " and no null sample was retained");
}

std::vector<CriticalValueTable> calibrate_many(std::span<const Statistic> statistics, int p, int T, int K,
                                               bool demeaned, std::span<const double> alphas, int reps,
                                               std::uint64_t master_seed, const CalibrationOptions& options) {
    teststats::FactorModelSpec{p, K, T, demeaned}.validate();
    if (reps < kMinReps) {
        throw BadDimension("calibrate: reps must be at least " + std::to_string(kMinReps) + ", got " +
                           std::to_string(reps));
    }
    if (statistics.empty()) {
        throw BadDimension("calibrate: no statistic requested");
    }
    for (double a : alphas) {
        require_alpha(a, "calibrate");
    }
    if (std::any_of(statistics.begin(), statistics.end(),
                    [](Statistic s) { return s == Statistic::T_LR || s == Statistic::T_LR_standardized; })) {
        // Surface an impossible Bartlett factor or CLT centring before any sampling.
        const int t_eff = demeaned ? T - 1 : T;
        teststats::lr_bartlett_factor(p, t_eff, K);
    }

    const std::size_t n_stats = statistics.size();
    const auto n_reps = static_cast<std::size_t>(reps);
    std::vector<std::vector<double>> samples(n_stats, std::vector<double>(n_reps));
    parallel_for(n_reps, options.workers, [&](std::size_t r) {
        const PrecisionStats ps = randmat::sample_V11_null(p, T, K, {master_seed, r}, demeaned);
        const teststats::TestStatistics stats = teststats::compute_statistics(ps);
        for (std::size_t s = 0; s < n_stats; ++s) {
            samples[s][r] = evaluate(statistics[s], stats, ps, options.lr_scale);
        }
    });

    std::vector<CriticalValueTable> tables;
    tables.reserve(n_stats);
    for (std::size_t s = 0; s < n_stats; ++s) {
        std::sort(samples[s].begin(), samples[s].end());
        CriticalValueTable t;
        t.statistic = statistics[s];
        t.p = p;
        t.T = T;
        t.K = K;
        t.demeaned = demeaned;
        t.reps = reps;
        t.master_seed = master_seed;
        t.lr_scale = options.lr_scale;
        t.alphas.assign(alphas.begin(), alphas.end());
        for (double a : alphas) {
            t.critical_values.push_back(empirical_quantile(samples[s], 1.0 - a));
        }
        if (options.retain_null_sample) {
            t.null_sample = std::move(samples[s]);
        }
        tables.push_back(std::move(t));
    }
    return tables;
}

CriticalValueTable calibrate(Statistic statistic, int p, int T, int K, bool demeaned,
                             std::span<const double> alphas, int reps, std::uint64_t master_seed,
                             const CalibrationOptions& options) {
    const Statistic one[] = {statistic};
    return std::move(calibrate_many(one, p, T, K, demeaned, alphas, reps, master_seed, options).front());
}

double empirical_quantile(std::span<const double> sorted, double prob) {
    if (sorted.empty()) {
        throw EmptySample("empirical_quantile: empty sample");
    }
    if (!(prob >= 0.0 && prob <= 1.0)) {
        throw DomainError("empirical_quantile: probability outside [0,1]");
    }
    const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double empirical_pvalue(double observed, const CriticalValueTable& table, PValueConvention convention) {
    if (!table.null_sample) {
        throw MissingNullSample("empirical_pvalue: table for " + std::string(to_string(table.statistic)) +
                                " has no retained null sample");
    }
    const auto& null = *table.null_sample;
    if (null.empty()) {
        throw EmptySample("empirical_pvalue: empty null sample");
    }
    const auto first_at_least = std::lower_bound(null.begin(), null.end(), observed);
    const auto count = static_cast<double>(null.end() - first_at_least);
    const auto reps = static_cast<double>(null.size());
    if (convention == PValueConvention::add_one) {
        return (1.0 + count) / (1.0 + reps);
    }
    return count / reps;
}

double bonferroni_critical_el(double alpha, int p, int T, int K, bool demeaned) {
    require_alpha(alpha, "bonferroni_critical_el");
    const int n = checked_dof(p, T, K, demeaned, "bonferroni_critical_el");
    const double level = 1.0 - 2.0 * alpha / (static_cast<double>(p) * (p - 1));
    return special::f_quantile(level, 1.0, n);
}

double bonferroni_critical_pr(double alpha, int p, int T, int K, bool demeaned) {
    require_alpha(alpha, "bonferroni_critical_pr");
    const int n = checked_dof(p, T, K, demeaned, "bonferroni_critical_pr");
    return special::f_quantile(1.0 - alpha / p, p - 1.0, n);
}

double lr_chi2_critical(double alpha, int p) {
    require_alpha(alpha, "lr_chi2_critical");
    if (p < 2) {
        throw DomainError("lr_chi2_critical: p must be at least 2");
    }
    return special::chi2_quantile(1.0 - alpha, static_cast<double>(p) * (p - 1) / 2.0);
}

double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf) {
    if (sorted.empty()) {
        throw EmptySample("ks_statistic: empty sample");
    }
    const auto n = static_cast<double>(sorted.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        // Ties form one jump of the empirical cdf.
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) {
            ++j;
        }
        // Compare left limits and values so step cdfs are handled too.
        const double left = cdf(std::nextafter(sorted[i], -std::numeric_limits<double>::infinity()));
        const double f = cdf(sorted[i]);
        d = std::max({d, std::abs(left - static_cast<double>(i) / n), std::abs(f - static_cast<double>(j + 1) / n)});
        i = j + 1;
    }
    return d;
}

nlohmann::json to_json(const CriticalValueTable& table) {
    nlohmann::json doc;
    doc["schema"] = "factorlens/1";
    doc["kind"] = "critical_value_table";
    doc["statistic"] = to_string(table.statistic);
    doc["p"] = table.p;
    doc["T"] = table.T;
    doc["K"] = table.K;
    doc["demeaned"] = table.demeaned;
    doc["reps"] = table.reps;
    doc["master_seed"] = table.master_seed;
    doc["null_convention"] = kNullConvention;
    if (table.statistic == Statistic::T_LR_standardized) {
        doc["lr_scale"] = table.lr_scale == asymptotics::LrScale::std_dev ? "std_dev" : "variance";
    }
    doc["alphas"] = table.alphas;
    doc["critical_values"] = table.critical_values;
    if (table.null_sample) {
        doc["null_sample"] = *table.null_sample;
    }
    return doc;
}

CriticalValueTable table_from_json(const nlohmann::json& doc) {
    try {
        if (doc.value("schema", std::string()) != "factorlens/1") {
            throw ParseError("critical value table: missing or unsupported schema");
        }
        CriticalValueTable t;
        t.statistic = statistic_from_string(doc.at("statistic").get<std::string>());
        t.p = doc.at("p").get<int>();
        t.T = doc.at("T").get<int>();
        t.K = doc.at("K").get<int>();
        t.demeaned = doc.at("demeaned").get<bool>();
        t.reps = doc.at("reps").get<int>();
        t.master_seed = doc.at("master_seed").get<std::uint64_t>();
        t.alphas = doc.at("alphas").get<std::vector<double>>();
        t.critical_values = doc.at("critical_values").get<std::vector<double>>();
        if (t.alphas.size() != t.critical_values.size()) {
            throw ParseError("critical value table: alphas and critical_values differ in length");
        }
        if (doc.contains("lr_scale")) {
            const auto scale = doc.at("lr_scale").get<std::string>();
            if (scale != "std_dev" && scale != "variance") {
                throw ParseError("critical value table: unknown lr_scale '" + scale + "'");
            }
            t.lr_scale = scale == "std_dev" ? asymptotics::LrScale::std_dev : asymptotics::LrScale::variance;
        }
        if (doc.contains("null_sample")) {
            auto sample = doc.at("null_sample").get<std::vector<double>>();
            if (!std::is_sorted(sample.begin(), sample.end())) {
                throw ParseError("critical value table: null_sample is not sorted");
            }
            t.null_sample = std::move(sample);
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("critical value table: ") + e.what());
    }
}

void write_csv(std::ostream& out, std::span<const CriticalValueTable> tables) {
    out << "statistic,p,T,K,alpha,critical_value\n";
    for (const auto& t : tables) {
        for (std::size_t k = 0; k < t.alphas.size(); ++k) {
            out << to_string(t.statistic) << ',' << t.p << ',' << t.T << ',' << t.K << ','
                << shortest(t.alphas[k]) << ',' << shortest(t.critical_values[k]) << '\n';
        }
    }
}

}  // namespace factorlens::calibrate
