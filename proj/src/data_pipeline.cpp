#include "bnmoe/data_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace bnmoe {

namespace {

std::vector<std::string> split_line(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

bool parse_price(const std::string& cell, double& out) {
    std::string t = trim(cell);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && std::isfinite(out);
}

int days_in_month(int y, int m) {
    static const int tab[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) return 29;
    return tab[m - 1];
}

}  // namespace

bool PricePanel::any_missing() const {
    for (char m : missing.data)
        if (m) return true;
    return false;
}

bool is_valid_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    int y = std::stoi(s.substr(0, 4));
    int m = std::stoi(s.substr(5, 2));
    int d = std::stoi(s.substr(8, 2));
    return m >= 1 && m <= 12 && d >= 1 && d <= days_in_month(y, m);
}

std::string next_date(const std::string& iso_date) {
    if (!is_valid_iso_date(iso_date)) throw DataError("invalid date: " + iso_date);
    int y = std::stoi(iso_date.substr(0, 4));
    int m = std::stoi(iso_date.substr(5, 2));
    int d = std::stoi(iso_date.substr(8, 2));
    if (++d > days_in_month(y, m)) {
        d = 1;
        if (++m > 12) {
            m = 1;
            ++y;
        }
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
}

PricePanel load_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty file: " + path);
    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);
    if (header.size() < 2) throw SchemaError("header needs a date column plus >=1 price column: " + path);
    for (const auto& h : header)
        if (h.empty()) throw SchemaError("empty column name in header: " + path);
    {
        std::set<std::string> seen(header.begin(), header.end());
        if (seen.size() != header.size()) throw SchemaError("duplicate column name in header: " + path);
    }

    std::size_t date_col = 0;
    if (!schema.date_column.empty()) {
        auto it = std::find(header.begin(), header.end(), schema.date_column);
        if (it == header.end())
            throw SchemaError("date column '" + schema.date_column + "' not in header of " + path);
        date_col = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::size_t> price_cols;
    std::vector<std::string> names;
    if (schema.instruments.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (c != date_col) {
                price_cols.push_back(c);
                names.push_back(header[c]);
            }
    } else {
        for (const auto& want : schema.instruments) {
            auto it = std::find(header.begin(), header.end(), want);
            if (it == header.end())
                throw SchemaError("instrument column '" + want + "' not in header of " + path);
            price_cols.push_back(static_cast<std::size_t>(it - header.begin()));
            names.push_back(want);
        }
    }
    if (price_cols.empty()) throw SchemaError("no price columns selected: " + path);

    struct Row {
        std::string date;
        std::vector<double> v;
        std::vector<char> miss;
    };
    std::vector<Row> rows;
    std::set<std::string> seen_dates;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw DataError("row with " + std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()) + " in " + path);
        Row r;
        r.date = trim(cells[date_col]);
        if (!is_valid_iso_date(r.date)) throw DataError("unparseable date '" + r.date + "' in " + path);
        if (!seen_dates.insert(r.date).second) throw DataError("duplicate date " + r.date);
        for (std::size_t c : price_cols) {
            double v = 0.0;
            bool ok = parse_price(cells[c], v);
            r.v.push_back(ok ? v : 0.0);
            r.miss.push_back(ok ? 0 : 1);
        }
        rows.push_back(std::move(r));
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });

    PricePanel panel;
    panel.instruments = names;
    panel.prices = MatD(rows.size(), names.size());
    panel.missing = Mat<char>(rows.size(), names.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        panel.dates.push_back(rows[i].date);
        for (std::size_t j = 0; j < names.size(); ++j) {
            if (!rows[i].miss[j] && rows[i].v[j] <= 0.0)
                throw DataError("non-positive price " + std::to_string(rows[i].v[j]) + " at " +
                                rows[i].date + " in " + path);
            panel.prices(i, j) = rows[i].v[j];
            panel.missing(i, j) = rows[i].miss[j];
        }
    }
    return panel;
}

PricePanel align_and_fill(const std::vector<PricePanel>& panels) {
    if (panels.empty()) throw SizeError("align_and_fill: no panels");

    std::set<std::string> calendar_set;
    std::vector<std::string> instruments;
    std::set<std::string> instrument_set;
    for (const auto& p : panels) {
        calendar_set.insert(p.dates.begin(), p.dates.end());
        for (const auto& name : p.instruments) {
            if (!instrument_set.insert(name).second)
                throw DataError("instrument '" + name + "' appears in more than one panel");
            instruments.push_back(name);
        }
    }
    std::vector<std::string> calendar(calendar_set.begin(), calendar_set.end());
    const std::size_t T = calendar.size();
    const std::size_t d = instruments.size();

    // Scatter every panel onto the union calendar, then forward-fill.
    MatD prices(T, d);
    Mat<char> missing(T, d, 1);
    std::size_t col0 = 0;
    for (const auto& p : panels) {
        std::map<std::string, std::size_t> date_ix;
        for (std::size_t t = 0; t < T; ++t) date_ix[calendar[t]] = t;
        for (std::size_t r = 0; r < p.n_dates(); ++r) {
            std::size_t t = date_ix.at(p.dates[r]);
            for (std::size_t j = 0; j < p.n_instruments(); ++j) {
                prices(t, col0 + j) = p.prices(r, j);
                missing(t, col0 + j) = p.missing(r, j);
            }
        }
        col0 += p.n_instruments();
    }

    std::size_t start = 0;  // first date on which every instrument has a value
    for (std::size_t j = 0; j < d; ++j) {
        std::size_t first = T;
        for (std::size_t t = 0; t < T; ++t)
            if (!missing(t, j)) {
                first = t;
                break;
            }
        if (first == T) throw DataError("instrument '" + instruments[j] + "' has zero observations");
        start = std::max(start, first);
    }

    PricePanel out;
    out.instruments = instruments;
    out.dates.assign(calendar.begin() + static_cast<std::ptrdiff_t>(start), calendar.end());
    out.prices = MatD(T - start, d);
    out.missing = Mat<char>(T - start, d, 0);
    std::vector<double> last(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t t = 0; t < T; ++t) {
            if (!missing(t, j)) last[j] = prices(t, j);
            if (t >= start) out.prices(t - start, j) = last[j];
        }
    }
    return out;
}

MatD to_returns(const PricePanel& panel) {
    if (panel.any_missing()) throw DataError("to_returns requires an aligned panel without missing cells");
    if (panel.n_dates() < 2) throw SizeError("to_returns needs at least 2 dates");
    const std::size_t T = panel.n_dates(), d = panel.n_instruments();
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < d; ++j)
            if (panel.prices(t, j) <= 0.0)
                throw DomainError("non-positive price at " + panel.dates[t] + ", " + panel.instruments[j]);

    MatD r(T - 1, d);
    for (std::size_t t = 1; t < T; ++t)
        for (std::size_t j = 0; j < d; ++j)
            r(t - 1, j) = (std::log(panel.prices(t, j)) - std::log(panel.prices(t - 1, j))) * 100.0;
    return r;
}

DickeyFullerResult dickey_fuller(const std::vector<double>& series, double alpha) {
    if (series.size() < 25) throw SizeError("dickey_fuller needs series length >= 25");

    // Asymptotic critical values, constant-only regression.
    double crit;
    if (alpha == 0.01)
        crit = -3.43;
    else if (alpha == 0.05)
        crit = -2.86;
    else if (alpha == 0.10)
        crit = -2.57;
    else
        throw ParamError("dickey_fuller: alpha must be one of 0.01, 0.05, 0.10");

    const std::size_t N = series.size() - 1;  // regression sample
    double mx = 0.0, my = 0.0;
    for (std::size_t t = 1; t < series.size(); ++t) {
        mx += series[t - 1];
        my += series[t] - series[t - 1];
    }
    mx /= static_cast<double>(N);
    my /= static_cast<double>(N);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t t = 1; t < series.size(); ++t) {
        double dx = series[t - 1] - mx;
        sxx += dx * dx;
        sxy += dx * (series[t] - series[t - 1] - my);
    }
    if (sxx <= 0.0) throw DataError("dickey_fuller: degenerate regression (constant series)");

    double beta = sxy / sxx;
    double intercept = my - beta * mx;
    double rss = 0.0;
    for (std::size_t t = 1; t < series.size(); ++t) {
        double e = (series[t] - series[t - 1]) - intercept - beta * series[t - 1];
        rss += e * e;
    }
    double s2 = rss / static_cast<double>(N - 2);
    double se = std::sqrt(s2 / sxx);
    if (se <= 0.0) throw DataError("dickey_fuller: degenerate regression (zero residual variance)");

    DickeyFullerResult res;
    res.statistic = beta / se;
    res.reject_unit_root = res.statistic < crit;
    return res;
}

DatasetSplit build_dataset(const MatD& returns, const std::vector<std::string>& dates,
                           const std::vector<std::string>& instruments,
                           const std::string& target, const SplitSpec& split) {
    if (returns.rows != dates.size())
        throw SizeError("build_dataset: returns rows and dates length differ");
    if (returns.cols != instruments.size())
        throw SizeError("build_dataset: returns cols and instruments length differ");
    if (returns.rows < 3) throw SizeError("build_dataset: too few rows");
    if (!(split.train_end_date < split.test_end_date))
        throw SplitError("split: train-end-date must precede test-end-date");

    auto it = std::find(instruments.begin(), instruments.end(), target);
    if (it == instruments.end()) throw DataError("target instrument '" + target + "' not found");
    const std::size_t tcol = static_cast<std::size_t>(it - instruments.begin());

    // Feature rows are 0..T-2 (last return row only supplies a label).
    const std::size_t n_feat = returns.rows - 1;
    std::vector<std::size_t> train_ix, test_ix;
    for (std::size_t t = 0; t < n_feat; ++t) {
        if (dates[t] <= split.train_end_date)
            train_ix.push_back(t);
        else if (dates[t] <= split.test_end_date)
            test_ix.push_back(t);
    }
    if (train_ix.empty()) throw SplitError("split: empty train partition");
    if (test_ix.empty()) throw SplitError("split: empty test partition");

    double mean_return = 0.0;
    for (std::size_t t : train_ix) mean_return += returns(t, tcol);
    mean_return /= static_cast<double>(train_ix.size());

    auto make = [&](const std::vector<std::size_t>& ix) {
        ReturnsDataset ds;
        ds.S = MatD(ix.size(), returns.cols);
        ds.y.resize(ix.size());
        ds.dates.resize(ix.size());
        ds.target_name = target;
        ds.mean_return = mean_return;
        for (std::size_t i = 0; i < ix.size(); ++i) {
            std::size_t t = ix[i];
            for (std::size_t j = 0; j < returns.cols; ++j) ds.S(i, j) = returns(t, j);
            ds.y[i] = returns(t + 1, tcol) > mean_return ? 1 : 0;  // ties -> 0
            ds.dates[i] = dates[t];
        }
        return ds;
    };
    return {make(train_ix), make(test_ix)};
}

void export_dataset_csv(const ReturnsDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "date";
    for (std::size_t j = 0; j < ds.dim(); ++j) out << ",x" << (j + 1);
    out << ",label\n";
    out.precision(17);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.dates[i];
        for (std::size_t j = 0; j < ds.dim(); ++j) out << ',' << ds.S(i, j);
        out << ',' << ds.y[i] << '\n';
    }
}

ReturnsDataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty file: " + path);
    std::vector<std::string> header = split_line(line);
    if (header.size() < 3 || trim(header.front()) != "date" || trim(header.back()) != "label")
        throw SchemaError("dataset CSV needs columns date,x1..xd,label: " + path);
    const std::size_t d = header.size() - 2;

    ReturnsDataset ds;
    std::vector<double> vals;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size()) throw DataError("ragged row in " + path);
        ds.dates.push_back(trim(cells[0]));
        for (std::size_t j = 0; j < d; ++j) {
            double v;
            if (!parse_price(cells[1 + j], v))
                throw DataError("unparseable value '" + cells[1 + j] + "' in " + path);
            vals.push_back(v);
        }
        ds.y.push_back(std::stoi(trim(cells.back())));
    }
    ds.S = MatD(ds.dates.size(), d);
    ds.S.data = std::move(vals);
    return ds;
}

FeatureFrame load_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty file: " + path);
    std::vector<std::string> header = split_line(line);
    if (header.size() < 2 || trim(header.front()) != "date")
        throw SchemaError("feature CSV needs columns date,x1..xd: " + path);
    const bool labeled = trim(header.back()) == "label";
    const std::size_t d = header.size() - 1 - (labeled ? 1 : 0);
    if (d < 1) throw SchemaError("feature CSV has no feature columns: " + path);

    FeatureFrame frame;
    std::vector<double> vals;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size()) throw DataError("ragged row in " + path);
        frame.dates.push_back(trim(cells[0]));
        for (std::size_t j = 0; j < d; ++j) {
            double v;
            vals.push_back(parse_price(cells[1 + j], v)
                               ? v
                               : std::numeric_limits<double>::quiet_NaN());
        }
    }
    frame.X = MatD(frame.dates.size(), d);
    frame.X.data = std::move(vals);
    return frame;
}

}  // namespace bnmoe
