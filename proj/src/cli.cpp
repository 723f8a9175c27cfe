#include "factorlens/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "factorlens/calibrate.hpp"
#include "factorlens/errors.hpp"
#include "factorlens/panel.hpp"
#include "factorlens/powersim.hpp"
#include "factorlens/report.hpp"

namespace factorlens::cli {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

asymptotics::LrScale parse_lr_scale(const std::string& s) {
    if (s == "std_dev") {
        return asymptotics::LrScale::std_dev;
    }
    if (s == "variance") {
        return asymptotics::LrScale::variance;
    }
    throw UsageError("--lr-scale must be std_dev or variance");
}

std::optional<asymptotics::Regime> parse_regime(const std::string& s) {
    if (s.empty() || s == "auto") {
        return std::nullopt;
    }
    // c=0.2 or d=4
    if (s.size() > 2 && s[1] == '=') {
        double v = 0.0;
        try {
            v = std::stod(s.substr(2));
        } catch (const std::exception&) {
            throw UsageError("--regime value '" + s + "' is not a number");
        }
        if (s[0] == 'c') {
            return asymptotics::Regime::concentration(v);
        }
        if (s[0] == 'd') {
            return asymptotics::Regime::boundary(v);
        }
    }
    throw UsageError("--regime must be auto, c=<value> or d=<value>");
}

std::vector<calibrate::CriticalValueTable> load_tables(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open calibration file " + path);
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("calibration file " + path + ": " + e.what());
    }
    std::vector<calibrate::CriticalValueTable> tables;
    if (doc.contains("tables")) {
        for (const auto& t : doc.at("tables")) {
            tables.push_back(calibrate::table_from_json(t));
        }
    } else {
        tables.push_back(calibrate::table_from_json(doc));
    }
    return tables;
}

void emit(const std::string& out_path, const std::string& contents) {
    if (out_path.empty() || out_path == "-") {
        std::cout << contents;
    } else {
        write_atomic(out_path, contents);
    }
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) {
        std::cerr << "warning: " << w << '\n';
    }
}

struct CommonTestFlags {
    std::string data;
    std::vector<std::string> assets;
    std::vector<std::string> factors;
    bool demean = false;
    double alpha = 0.05;
    std::string source = "auto";
    int reps = calibrate::kDefaultReps;
    unsigned long long seed = kDefaultSeed;
    std::string calibration;
    std::string regime = "auto";
    std::string lr_scale = "std_dev";
    unsigned workers = 0;
    std::string out;
};

void add_common_test_flags(CLI::App* cmd, CommonTestFlags& f) {
    cmd->add_option("--data", f.data, "Input CSV with a header row")->required();
    cmd->add_option("--assets", f.assets, "Response columns (default: every non-factor column)")->delimiter(',');
    cmd->add_option("--factors", f.factors, "Factor columns")->delimiter(',');
    cmd->add_flag("--demean", f.demean, "Centre the series; uses T-1 degrees of freedom");
    cmd->add_option("--alpha", f.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--source", f.source, "Critical values: auto, calibrated, bonferroni, highdim")
        ->check(CLI::IsMember({"auto", "calibrated", "bonferroni", "highdim"}));
    cmd->add_option("--reps", f.reps, "Calibration replicates")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "Master seed");
    cmd->add_option("--calibration", f.calibration, "Calibration JSON with retained null samples");
    cmd->add_option("--regime", f.regime, "auto, c=<ratio> or d=<T-K-p>");
    cmd->add_option("--lr-scale", f.lr_scale, "Log-determinant CLT scale: std_dev or variance")
        ->check(CLI::IsMember({"std_dev", "variance"}));
    cmd->add_option("--workers", f.workers, "Worker threads (0 = all cores)");
    cmd->add_option("--out", f.out, "Output path (default: stdout)");
}

report::TestOptions to_options(const CommonTestFlags& f) {
    report::TestOptions o;
    o.alpha = f.alpha;
    o.source = report::source_choice_from_string(f.source);
    o.calibration_reps = f.reps;
    o.seed = f.seed;
    try {
        o.regime_override = parse_regime(f.regime);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    o.lr_scale = parse_lr_scale(f.lr_scale);
    o.workers = f.workers;
    if (!f.calibration.empty()) {
        o.tables = load_tables(f.calibration);
    }
    return o;
}

int cmd_test(const CommonTestFlags& f) {
    const auto p = panel::ingest_csv(std::filesystem::path(f.data), f.assets, f.factors, f.demean);
    const auto rep = report::run_tests(p, to_options(f));
    print_warnings(rep.warnings);
    emit(f.out, report::to_json(rep).dump(2) + "\n");
    return kExitOk;
}

int cmd_batch(const CommonTestFlags& f, int subset_size, int num_subsets) {
    const auto p = panel::ingest_csv(std::filesystem::path(f.data), f.assets, f.factors, f.demean);
    const auto summary = report::batch_subset_test(p, subset_size, num_subsets, to_options(f));
    print_warnings(summary.warnings);
    std::ostringstream csv;
    report::write_csv(csv, summary);
    emit(f.out, csv.str());
    return kExitOk;
}

struct CalibrateFlags {
    int p = 0;
    int T = 0;
    int K = 0;
    bool demean = false;
    std::vector<double> alphas{0.1, 0.05, 0.01, 0.005};
    std::vector<std::string> statistics{"T_el", "T_pr", "T_LR"};
    int reps = calibrate::kDefaultReps;
    unsigned long long seed = kDefaultSeed;
    bool keep_null = false;
    std::string lr_scale = "std_dev";
    unsigned workers = 0;
    std::string out;
    std::string csv;
};

int cmd_calibrate(const CalibrateFlags& f) {
    std::vector<calibrate::Statistic> stats;
    for (const auto& s : f.statistics) {
        try {
            stats.push_back(calibrate::statistic_from_string(s));
        } catch (const ParseError& e) {
            throw UsageError(e.what());
        }
    }
    if (f.reps < calibrate::kMinReps) {
        throw UsageError("--reps must be at least " + std::to_string(calibrate::kMinReps));
    }
    calibrate::CalibrationOptions co;
    co.retain_null_sample = f.keep_null;
    co.workers = f.workers;
    co.lr_scale = parse_lr_scale(f.lr_scale);
    const auto tables = calibrate::calibrate_many(stats, f.p, f.T, f.K, f.demean, f.alphas, f.reps, f.seed, co);
    nlohmann::json doc;
    if (tables.size() == 1) {
        doc = calibrate::to_json(tables.front());
    } else {
        doc["schema"] = "factorlens/1";
        doc["kind"] = "critical_value_tables";
        doc["tables"] = nlohmann::json::array();
        for (const auto& t : tables) {
            doc["tables"].push_back(calibrate::to_json(t));
        }
    }
    emit(f.out, doc.dump(2) + "\n");
    if (!f.csv.empty()) {
        std::ostringstream csv;
        calibrate::write_csv(csv, tables);
        write_atomic(f.csv, csv.str());
    }
    return kExitOk;
}

struct PowerFlags {
    std::string scenario;
    int p = 10;
    int T = 100;
    int K = 5;
    std::string rho_grid;
    std::string ktilde_grid;
    int reps = 1000;
    int calibration_reps = calibrate::kDefaultReps;
    unsigned long long seed = kDefaultSeed;
    double alpha = 0.05;
    bool demean = false;
    std::vector<std::string> sources{"calibrated", "bonferroni"};
    std::string lr_asymptotic = "chi2";
    unsigned workers = 0;
    std::string out;
};

int cmd_power(const PowerFlags& f) {
    powersim::ScenarioConfig cfg;
    try {
        cfg.scenario = powersim::scenario_from_string(f.scenario);
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
    const bool s4 = cfg.scenario == powersim::Scenario::S4_extra_factors;
    if (s4 && !f.rho_grid.empty()) {
        throw UsageError("scenario s4 varies the number of omitted factors; use --ktilde-grid, not --rho-grid");
    }
    if (!s4 && !f.ktilde_grid.empty()) {
        throw UsageError("--ktilde-grid applies only to scenario s4");
    }
    std::vector<double> grid;
    try {
        grid = s4 ? parse_range(f.ktilde_grid.empty() ? "0:1:10" : f.ktilde_grid)
                  : parse_range(f.rho_grid.empty() ? "-0.5:0.05:0.5" : f.rho_grid);
    } catch (const DomainError& e) {
        throw UsageError(e.what());
    }
    cfg.p = f.p;
    cfg.T = f.T;
    cfg.K = f.K;
    cfg.reps = f.reps;
    cfg.master_seed = f.seed;
    cfg.alpha = f.alpha;
    cfg.demeaned = f.demean;
    cfg.lr_asymptotic = f.lr_asymptotic == "clt" ? powersim::LrAsymptotic::clt : powersim::LrAsymptotic::chi2;
    for (double g : grid) {
        if (s4 && (g < 0 || g > powersim::kMaxKTilde || std::round(g) != g)) {
            throw UsageError("--ktilde-grid values must be integers in [0,10]");
        }
        if (!s4 && std::abs(g) > powersim::kMaxAbsRho + 1e-12) {
            throw UsageError("--rho-grid values must satisfy |rho| <= 0.5");
        }
    }

    std::vector<powersim::CriticalSource> sources;
    for (const auto& s : f.sources) {
        sources.push_back(s == "calibrated" ? powersim::CriticalSource::calibrated
                                            : powersim::CriticalSource::bonferroni_or_asymptotic);
    }
    std::vector<calibrate::CriticalValueTable> tables;
    if (std::find(sources.begin(), sources.end(), powersim::CriticalSource::calibrated) != sources.end()) {
        const calibrate::Statistic stats[] = {calibrate::Statistic::T_el, calibrate::Statistic::T_pr,
                                              calibrate::Statistic::T_LR};
        const double alphas[] = {f.alpha};
        calibrate::CalibrationOptions co;
        co.workers = f.workers;
        // Calibration draws use a seed distinct from the scenario streams.
        tables = calibrate::calibrate_many(stats, f.p, f.T, f.K, f.demean, alphas, f.calibration_reps, f.seed + 1, co);
    }
    const auto curves = powersim::run_power_studies(cfg, grid, sources, tables, f.workers);
    std::ostringstream csv;
    powersim::write_csv(csv, curves);
    emit(f.out, csv.str());
    return kExitOk;
}

}  // namespace

std::vector<double> parse_range(std::string_view spec) {
    std::vector<double> parts;
    std::size_t start = 0;
    for (;;) {
        const auto colon = spec.find(':', start);
        const std::string piece(spec.substr(start, colon == std::string_view::npos ? std::string_view::npos
                                                                                    : colon - start));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(piece, &used);
        } catch (const std::exception&) {
            throw DomainError("range '" + std::string(spec) + "': cannot parse '" + piece + "'");
        }
        if (used != piece.size()) {
            throw DomainError("range '" + std::string(spec) + "': cannot parse '" + piece + "'");
        }
        parts.push_back(v);
        if (colon == std::string_view::npos) {
            break;
        }
        start = colon + 1;
    }
    if (parts.size() == 1) {
        return parts;
    }
    if (parts.size() != 3) {
        throw DomainError("range '" + std::string(spec) + "' must be start:step:stop");
    }
    const double a = parts[0];
    const double step = parts[1];
    const double b = parts[2];
    if (step == 0.0 || (b - a) / step < -1e-9) {
        throw DomainError("range '" + std::string(spec) + "': step does not reach stop");
    }
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9));
    if (count > 100000) {
        throw DomainError("range '" + std::string(spec) + "' has too many points");
    }
    std::vector<double> out;
    for (long k = 0; k <= count; ++k) {
        // Snap to 12 decimals so 0.1-type steps give clean grid labels.
        const double v = std::round((a + static_cast<double>(k) * step) * 1e12) / 1e12;
        out.push_back(v == 0.0 ? 0.0 : v);
    }
    return out;
}

void write_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) {
            throw Error("failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot move output into place at " + path.string() + ": " + ec.message());
    }
}

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Tests whether observable factors explain the dependence among response series"};
    app.require_subcommand(1);

    CommonTestFlags test_flags;
    auto* test = app.add_subcommand("test", "Run all tests on a returns panel");
    add_common_test_flags(test, test_flags);

    CommonTestFlags batch_flags;
    int subset_size = 0;
    int num_subsets = 10000;
    auto* batch = app.add_subcommand("batch-test", "Tests on random asset subsets, summarized by p-value quantiles");
    add_common_test_flags(batch, batch_flags);
    batch->add_option("--subset-size", subset_size, "Assets per subset")->required();
    batch->add_option("--num-subsets", num_subsets, "Number of random subsets")->check(CLI::PositiveNumber);

    CalibrateFlags cal_flags;
    auto* cal = app.add_subcommand("calibrate", "Monte-Carlo null critical values");
    cal->add_option("--p", cal_flags.p, "Number of response series")->required();
    cal->add_option("--T", cal_flags.T, "Number of observations")->required();
    cal->add_option("--K", cal_flags.K, "Number of factors")->required();
    cal->add_flag("--demean", cal_flags.demean, "Calibrate for demeaned data");
    cal->add_option("--alphas", cal_flags.alphas, "Comma-separated levels")->delimiter(',')->check(CLI::Range(0.0, 1.0));
    cal->add_option("--statistics", cal_flags.statistics,
                    "T_el, T_pr, T_LR, ln_T_LR_star, T_LR_standardized")->delimiter(',');
    cal->add_option("--reps", cal_flags.reps, "Null replicates");
    cal->add_option("--seed", cal_flags.seed, "Master seed");
    cal->add_flag("--keep-null-sample", cal_flags.keep_null, "Store the null sample for empirical p-values");
    cal->add_option("--lr-scale", cal_flags.lr_scale, "Scale for T_LR_standardized")
        ->check(CLI::IsMember({"std_dev", "variance"}));
    cal->add_option("--workers", cal_flags.workers, "Worker threads (0 = all cores)");
    cal->add_option("--out", cal_flags.out, "JSON output path (default: stdout)");
    cal->add_option("--csv", cal_flags.csv, "Also write a CSV table");

    PowerFlags pow_flags;
    auto* pow = app.add_subcommand("power", "Simulated rejection rates under the alternative scenarios");
    pow->add_option("--scenario", pow_flags.scenario, "s1, s2, s3 or s4")->required();
    pow->add_option("--p", pow_flags.p, "Number of response series");
    pow->add_option("--T", pow_flags.T, "Number of observations");
    pow->add_option("--K", pow_flags.K, "Number of fitted factors");
    pow->add_option("--rho-grid", pow_flags.rho_grid, "start:step:stop for s1-s3");
    pow->add_option("--ktilde-grid", pow_flags.ktilde_grid, "start:step:stop for s4");
    pow->add_option("--reps", pow_flags.reps, "Replicates per grid point")->check(CLI::PositiveNumber);
    pow->add_option("--calibration-reps", pow_flags.calibration_reps, "Null replicates for calibrated criticals");
    pow->add_option("--seed", pow_flags.seed, "Master seed");
    pow->add_option("--alpha", pow_flags.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
    pow->add_flag("--demean", pow_flags.demean, "Demean before testing");
    pow->add_option("--sources", pow_flags.sources, "calibrated, bonferroni")
        ->delimiter(',')
        ->check(CLI::IsMember({"calibrated", "bonferroni"}));
    pow->add_option("--lr-asymptotic", pow_flags.lr_asymptotic, "chi2 or clt")
        ->check(CLI::IsMember({"chi2", "clt"}));
    pow->add_option("--workers", pow_flags.workers, "Worker threads (0 = all cores)");
    pow->add_option("--out", pow_flags.out, "CSV output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (test->parsed()) {
            return cmd_test(test_flags);
        }
        if (batch->parsed()) {
            return cmd_batch(batch_flags, subset_size, num_subsets);
        }
        if (cal->parsed()) {
            return cmd_calibrate(cal_flags);
        }
        if (pow->parsed()) {
            return cmd_power(pow_flags);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitComputation;
    }
    return kExitUsage;
}

}  // namespace factorlens::cli
