#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "factorlens/linalg.hpp"

namespace factorlens::panel {

/// Observations of the selected response (asset) and factor series. Rows are
/// time points in file order; columns are the selected series, assets first.
struct ReturnsPanel {
    std::vector<std::string> labels;
    /// Contents of the leading date column, empty strings when absent.
    std::vector<std::string> times;
    bool has_time_column = false;
    std::string time_label;
    linalg::Matrix values;  ///< T x (p + K)
    std::vector<int> asset_columns;
    std::vector<int> factor_columns;
    /// Statistics use the mean-centred scatter and T - 1 degrees of freedom.
    bool demeaned = false;

    int T() const noexcept { return static_cast<int>(values.rows()); }
    int p() const noexcept { return static_cast<int>(asset_columns.size()); }
    int K() const noexcept { return static_cast<int>(factor_columns.size()); }

    /// p x T, one row per asset.
    linalg::Matrix assets() const;
    /// K x T.
    linalg::Matrix factors() const;
    /// Same panel restricted to the given asset positions (indices into asset_columns).
    ReturnsPanel with_assets(std::span<const int> asset_positions) const;

    bool operator==(const ReturnsPanel&) const = default;
};

/// Reads a comma-separated file with a header row. The first column is taken
/// as a date column when its header is not a requested series name and its
/// first cell is not a number. An empty `asset_names` selects every numeric
/// column that is not a factor.
///
/// Errors: ParseError (with row/column), MissingColumn, MissingValue for
/// empty, NA or NaN cells, TooFewRows when T_eff <= p + K.
ReturnsPanel ingest_csv(std::istream& in, std::span<const std::string> asset_names,
                        std::span<const std::string> factor_names, bool demean);
ReturnsPanel ingest_csv(const std::filesystem::path& path, std::span<const std::string> asset_names,
                        std::span<const std::string> factor_names, bool demean);

/// Writes the panel so that ingest_csv with the same names reproduces it.
void write_csv(std::ostream& out, const ReturnsPanel& panel);

/// Panel from matrices X (p x T) and F (K x T) with generated labels
/// x1..xp, f1..fK and no date column.
ReturnsPanel from_matrices(const linalg::Matrix& X, const linalg::Matrix& F, bool demeaned);

}  // namespace factorlens::panel
