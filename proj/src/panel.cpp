#include "factorlens/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <unordered_map>

#include "factorlens/errors.hpp"

namespace factorlens::panel {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\"");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                              : comma - start)));
        if (comma == std::string::npos) {
            return cells;
        }
        start = comma + 1;
    }
}

std::optional<double> parse_number(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        return std::nullopt;
    }
    return v;
}

bool is_missing(const std::string& s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return lower.empty() || lower == "na" || lower == "nan" || lower == "null" || lower == "n/a";
}

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

}  // namespace

linalg::Matrix ReturnsPanel::assets() const {
    linalg::Matrix x(asset_columns.size(), values.rows());
    for (std::size_t i = 0; i < asset_columns.size(); ++i) {
        for (std::size_t t = 0; t < values.rows(); ++t) {
            x(i, t) = values(t, static_cast<std::size_t>(asset_columns[i]));
        }
    }
    return x;
}

linalg::Matrix ReturnsPanel::factors() const {
    linalg::Matrix f(factor_columns.size(), values.rows());
    for (std::size_t k = 0; k < factor_columns.size(); ++k) {
        for (std::size_t t = 0; t < values.rows(); ++t) {
            f(k, t) = values(t, static_cast<std::size_t>(factor_columns[k]));
        }
    }
    return f;
}

ReturnsPanel ReturnsPanel::with_assets(std::span<const int> asset_positions) const {
    ReturnsPanel out;
    out.times = times;
    out.has_time_column = has_time_column;
    out.time_label = time_label;
    out.demeaned = demeaned;
    std::vector<int> source;
    for (int pos : asset_positions) {
        if (pos < 0 || pos >= p()) {
            throw BadIndex("with_assets: asset position " + std::to_string(pos) + " out of range");
        }
        source.push_back(asset_columns[static_cast<std::size_t>(pos)]);
    }
    for (int c : factor_columns) {
        source.push_back(c);
    }
    out.values = linalg::Matrix(values.rows(), source.size());
    for (std::size_t c = 0; c < source.size(); ++c) {
        out.labels.push_back(labels[static_cast<std::size_t>(source[c])]);
        for (std::size_t t = 0; t < values.rows(); ++t) {
            out.values(t, c) = values(t, static_cast<std::size_t>(source[c]));
        }
    }
    for (std::size_t i = 0; i < asset_positions.size(); ++i) {
        out.asset_columns.push_back(static_cast<int>(i));
    }
    for (std::size_t k = 0; k < factor_columns.size(); ++k) {
        out.factor_columns.push_back(static_cast<int>(asset_positions.size() + k));
    }
    return out;
}

ReturnsPanel ingest_csv(std::istream& in, std::span<const std::string> asset_names,
                        std::span<const std::string> factor_names, bool demean) {
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("ingest_csv: missing header row");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const std::vector<std::string> header = split(line);
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (!position.emplace(header[c], c).second) {
            throw ParseError("ingest_csv: duplicate column name '" + header[c] + "'");
        }
    }

    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto cells = split(line);
        if (cells.size() != header.size()) {
            throw ParseError("ingest_csv: row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                             " fields, header has " + std::to_string(header.size()));
        }
        rows.push_back(std::move(cells));
    }

    auto requested = [&](const std::string& name) {
        return std::find(asset_names.begin(), asset_names.end(), name) != asset_names.end() ||
               std::find(factor_names.begin(), factor_names.end(), name) != factor_names.end();
    };
    const bool has_time = !header.empty() && !requested(header[0]) &&
                          (rows.empty() || !parse_number(rows[0][0]).has_value());

    auto lookup = [&](const std::string& name) {
        const auto it = position.find(name);
        if (it == position.end() || (has_time && it->second == 0)) {
            throw MissingColumn("ingest_csv: no column named '" + name + "'");
        }
        return it->second;
    };
    std::vector<std::size_t> source;
    std::vector<std::string> labels;
    if (asset_names.empty()) {
        for (std::size_t c = has_time ? 1 : 0; c < header.size(); ++c) {
            if (std::find(factor_names.begin(), factor_names.end(), header[c]) == factor_names.end()) {
                source.push_back(c);
                labels.push_back(header[c]);
            }
        }
    } else {
        for (const auto& name : asset_names) {
            source.push_back(lookup(name));
            labels.push_back(name);
        }
    }
    const std::size_t p = source.size();
    for (const auto& name : factor_names) {
        const std::size_t c = lookup(name);
        if (std::find(source.begin(), source.begin() + static_cast<std::ptrdiff_t>(p), c) !=
            source.begin() + static_cast<std::ptrdiff_t>(p)) {
            throw ParseError("ingest_csv: column '" + name + "' is both an asset and a factor");
        }
        source.push_back(c);
        labels.push_back(name);
    }

    ReturnsPanel panel;
    panel.labels = std::move(labels);
    panel.has_time_column = has_time;
    panel.time_label = has_time ? header[0] : std::string();
    panel.demeaned = demean;
    panel.values = linalg::Matrix(rows.size(), source.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        panel.times.push_back(has_time ? rows[t][0] : std::string());
        for (std::size_t c = 0; c < source.size(); ++c) {
            const std::string& cell = rows[t][source[c]];
            const std::string where = "row " + std::to_string(t + 1) + ", column '" + header[source[c]] + "'";
            if (is_missing(cell)) {
                throw MissingValue("ingest_csv: missing value at " + where);
            }
            const auto v = parse_number(cell);
            if (!v) {
                throw ParseError("ingest_csv: cannot parse '" + cell + "' at " + where);
            }
            if (!std::isfinite(*v)) {
                throw ParseError("ingest_csv: non-finite value at " + where);
            }
            panel.values(t, c) = *v;
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        panel.asset_columns.push_back(static_cast<int>(i));
    }
    for (std::size_t k = p; k < source.size(); ++k) {
        panel.factor_columns.push_back(static_cast<int>(k));
    }
    const int t_eff = demean ? panel.T() - 1 : panel.T();
    if (t_eff <= panel.p() + panel.K()) {
        throw TooFewRows("ingest_csv: " + std::to_string(panel.T()) + " rows are too few for p=" +
                         std::to_string(panel.p()) + ", K=" + std::to_string(panel.K()) +
                         (demean ? " with demeaning" : ""));
    }
    return panel;
}

ReturnsPanel ingest_csv(const std::filesystem::path& path, std::span<const std::string> asset_names,
                        std::span<const std::string> factor_names, bool demean) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("ingest_csv: cannot open " + path.string());
    }
    return ingest_csv(in, asset_names, factor_names, demean);
}

void write_csv(std::ostream& out, const ReturnsPanel& panel) {
    if (panel.has_time_column) {
        out << panel.time_label << ',';
    }
    for (std::size_t c = 0; c < panel.labels.size(); ++c) {
        out << (c ? "," : "") << panel.labels[c];
    }
    out << '\n';
    for (std::size_t t = 0; t < panel.values.rows(); ++t) {
        if (panel.has_time_column) {
            out << panel.times[t] << ',';
        }
        for (std::size_t c = 0; c < panel.values.cols(); ++c) {
            out << (c ? "," : "") << shortest(panel.values(t, c));
        }
        out << '\n';
    }
}

ReturnsPanel from_matrices(const linalg::Matrix& X, const linalg::Matrix& F, bool demeaned) {
    if (X.cols() != F.cols() && F.rows() > 0) {
        throw BadDimension("from_matrices: X and F have different lengths");
    }
    ReturnsPanel panel;
    panel.demeaned = demeaned;
    const std::size_t p = X.rows();
    const std::size_t k = F.rows();
    panel.values = linalg::Matrix(X.cols(), p + k);
    for (std::size_t i = 0; i < p; ++i) {
        panel.labels.push_back("x" + std::to_string(i + 1));
        panel.asset_columns.push_back(static_cast<int>(i));
    }
    for (std::size_t j = 0; j < k; ++j) {
        panel.labels.push_back("f" + std::to_string(j + 1));
        panel.factor_columns.push_back(static_cast<int>(p + j));
    }
    for (std::size_t t = 0; t < X.cols(); ++t) {
        panel.times.emplace_back();
        for (std::size_t i = 0; i < p; ++i) {
            panel.values(t, i) = X(i, t);
        }
        for (std::size_t j = 0; j < k; ++j) {
            panel.values(t, p + j) = F(j, t);
        }
    }
    return panel;
}

}  // namespace factorlens::panel
