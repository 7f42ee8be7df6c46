#ifndef BNMOE_DATA_PIPELINE_HPP
#define BNMOE_DATA_PIPELINE_HPP

#include <string>
#include <vector>

#include "bnmoe/common.hpp"

namespace bnmoe {

/// Aligned multi-instrument closing prices. Dates are ISO-8601 strings,
/// which order lexicographically the same as chronologically.
struct PricePanel {
    std::vector<std::string> dates;        // strictly increasing
    std::vector<std::string> instruments;  // column names
    MatD prices;                           // [T x d], positive where present
    Mat<char> missing;                     // same shape, 1 = missing

    std::size_t n_dates() const { return dates.size(); }
    std::size_t n_instruments() const { return instruments.size(); }
    bool any_missing() const;
};

/// Supervised dataset of returns rows and next-period direction labels.
struct ReturnsDataset {
    MatD S;                        // [n x d] returns, percent log-return units
    std::vector<int> y;            // [n] labels in {0,1}
    std::vector<std::string> dates;
    std::string target_name;
    double mean_return = 0.0;      // threshold, computed on training rows only

    std::size_t size() const { return S.rows; }
    std::size_t dim() const { return S.cols; }
};

struct SplitSpec {
    std::string train_end_date;  // inclusive
    std::string test_end_date;   // inclusive
};

struct CsvSchema {
    std::string date_column;                // empty = first column
    std::vector<std::string> instruments;   // empty = all non-date columns
};

struct DickeyFullerResult {
    double statistic = 0.0;
    bool reject_unit_root = false;
};

/// Parse a closing-price CSV: header row, one date column, >=1 price column.
/// Rows come back sorted by date; unparseable or empty price cells are missing.
PricePanel load_csv(const std::string& path, const CsvSchema& schema = {});

/// Merge panels onto the union calendar (a row exists wherever at least one
/// market traded), forward-filling each instrument from its previous value.
/// Leading dates where any instrument has no prior value yet are dropped.
PricePanel align_and_fill(const std::vector<PricePanel>& panels);

/// r(t) = (log p(t) - log p(t-1)) * 100, per instrument.
/// Output row t-1 corresponds to panel date t (t >= 1).
MatD to_returns(const PricePanel& panel);

/// Constant-only Dickey-Fuller regression delta r_t = a + b r_{t-1} + e.
/// Statistic is the t-ratio of b; rejection compares against the asymptotic
/// critical value for alpha in {0.01, 0.05, 0.10}.
DickeyFullerResult dickey_fuller(const std::vector<double>& series, double alpha = 0.05);

struct DatasetSplit {
    ReturnsDataset train;
    ReturnsDataset test;
};

/// Feature row t = all instruments' returns at t; label = 1 iff the target's
/// return at t+1 exceeds the mean of the target's returns over the TRAIN rows.
/// The last row (no t+1) is dropped; the split is chronological.
DatasetSplit build_dataset(const MatD& returns, const std::vector<std::string>& dates,
                           const std::vector<std::string>& instruments,
                           const std::string& target, const SplitSpec& split);

/// Dataset CSV with columns date,x1..xd,label.
void export_dataset_csv(const ReturnsDataset& ds, const std::string& path);
ReturnsDataset load_dataset_csv(const std::string& path);

/// Prediction input: feature rows with optional missing cells.
struct FeatureFrame {
    std::vector<std::string> dates;
    MatD X;  // missing cells stored as NaN
};

/// Columns date,x1..xd; a trailing label column is tolerated and dropped so
/// an exported dataset CSV can be fed back in. Empty cells become NaN.
FeatureFrame load_feature_csv(const std::string& path);

/// ISO-8601 calendar successor, e.g. "2000-12-31" -> "2001-01-01".
std::string next_date(const std::string& iso_date);

bool is_valid_iso_date(const std::string& s);

}  // namespace bnmoe

#endif
