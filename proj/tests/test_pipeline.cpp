#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "bnmoe/data_pipeline.hpp"
#include "bnmoe/discretizer.hpp"
#include "bnmoe/textio.hpp"
#include "doctest.h"

using namespace bnmoe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("bnmoe_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
    std::string file(const std::string& name, const std::string& content) const {
        const std::string p = (path / name).string();
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }
};

}  // namespace

TEST_CASE("quantile discretizer splits 1..100 at the median for two bins") {
    MatD S(100, 1);
    for (std::size_t i = 0; i < 100; ++i) S(i, 0) = static_cast<double>(i + 1);
    const Discretizer d = fit_discretizer(S, 2);
    REQUIRE(d.edges[0].size() == 1);

    int low = 0, high = 0;
    for (std::size_t i = 0; i < 100; ++i) (d.bin(0, S(i, 0)) == 0 ? low : high) += 1;
    CHECK(low == 50);
    CHECK(high == 50);
}

TEST_CASE("three quantile bins over 1..99 balance at 33 each") {
    MatD S(99, 1);
    for (std::size_t i = 0; i < 99; ++i) S(i, 0) = static_cast<double>(i + 1);
    const Discretizer d = fit_discretizer(S, 3);
    REQUIRE(d.n_bins(0) == 3);
    int counts[3] = {0, 0, 0};
    for (std::size_t i = 0; i < 99; ++i) counts[d.bin(0, S(i, 0))] += 1;
    CHECK(counts[0] == 33);
    CHECK(counts[1] == 33);
    CHECK(counts[2] == 33);
}

TEST_CASE("constant feature degenerates to one bin") {
    MatD S(50, 2);
    for (std::size_t i = 0; i < 50; ++i) {
        S(i, 0) = 7.0;
        S(i, 1) = static_cast<double>(i);
    }
    const Discretizer d = fit_discretizer(S, 3);
    CHECK(d.n_bins(0) == 1);
    CHECK(d.n_bins(1) == 3);
    CHECK(d.bin(0, -100.0) == 0);
    CHECK(d.bin(0, 100.0) == 0);
}

TEST_CASE("bin intervals are left-open right-closed around each edge") {
    Discretizer d;
    d.edges = {{0.0, 1.0}};
    CHECK(d.bin(0, -5.0) == 0);
    CHECK(d.bin(0, 0.0) == 0);   // (-inf, 0]
    CHECK(d.bin(0, 0.5) == 1);
    CHECK(d.bin(0, 1.0) == 1);   // (0, 1]
    CHECK(d.bin(0, 1.1) == 2);
    const MatD S(1, 2);
    CHECK_THROWS_AS(d.transform(S), SizeError);
    CHECK_THROWS_AS(fit_discretizer(MatD(5, 1), 1), ParamError);
    CHECK_THROWS_AS(fit_discretizer(MatD(2, 1), 3), SizeError);
}

TEST_CASE("price CSV parses, sorts by date, and flags missing cells") {
    TempDir tmp;
    const std::string p = tmp.file("prices.csv",
                                   "date,NKY\n"
                                   "2000-01-06,102.5\n"
                                   "2000-01-04,100.0\n"
                                   "2000-01-05,\n");
    const PricePanel panel = load_csv(p);
    REQUIRE(panel.n_dates() == 3);
    REQUIRE(panel.n_instruments() == 1);
    CHECK(panel.dates[0] == "2000-01-04");
    CHECK(panel.dates[2] == "2000-01-06");
    CHECK(panel.prices(0, 0) == 100.0);
    CHECK(panel.missing(1, 0) == 1);
    CHECK(panel.any_missing());
}

TEST_CASE("duplicate dates are rejected with the offending date in the message") {
    TempDir tmp;
    const std::string p = tmp.file("dup.csv",
                                   "date,NKY\n"
                                   "2000-01-05,100\n"
                                   "2000-01-05,101\n");
    try {
        load_csv(p);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("duplicate date 2000-01-05") != std::string::npos);
    }
}

TEST_CASE("missing input file raises FileError naming the path") {
    try {
        load_csv("/nonexistent/nowhere.csv");
        FAIL("expected FileError");
    } catch (const FileError& e) {
        CHECK(std::string(e.what()).find("/nonexistent/nowhere.csv") != std::string::npos);
    }
}

TEST_CASE("log return of e^0.01 growth is exactly one percent") {
    PricePanel panel;
    panel.dates = {"2000-01-04", "2000-01-05"};
    panel.instruments = {"A"};
    panel.prices = MatD(2, 1);
    panel.prices(0, 0) = 100.0;
    panel.prices(1, 0) = 100.0 * std::exp(0.01);
    panel.missing = Mat<char>(2, 1, 0);
    const MatD r = to_returns(panel);
    REQUIRE(r.rows == 1);
    CHECK(r(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("align_and_fill forward-fills the union calendar and drops the unseeded head") {
    PricePanel a;
    a.dates = {"2000-01-04", "2000-01-06"};
    a.instruments = {"A"};
    a.prices = MatD(2, 1);
    a.prices(0, 0) = 1.0;
    a.prices(1, 0) = 3.0;
    a.missing = Mat<char>(2, 1, 0);

    PricePanel b;
    b.dates = {"2000-01-05", "2000-01-06"};
    b.instruments = {"B"};
    b.prices = MatD(2, 1);
    b.prices(0, 0) = 10.0;
    b.prices(1, 0) = 30.0;
    b.missing = Mat<char>(2, 1, 0);

    const PricePanel merged = align_and_fill({a, b});
    // 2000-01-04 is dropped: B has no value yet to carry forward
    REQUIRE(merged.n_dates() == 2);
    CHECK(merged.dates[0] == "2000-01-05");
    CHECK(merged.instruments == std::vector<std::string>{"A", "B"});
    CHECK(merged.prices(0, 0) == 1.0);  // A forward-filled from 01-04
    CHECK(merged.prices(0, 1) == 10.0);
    CHECK(merged.prices(1, 0) == 3.0);
    CHECK_FALSE(merged.any_missing());
}

TEST_CASE("build_dataset labels against the train-period mean and drops the last row") {
    // returns for target T: 1, 3, -1, 5, 2 on dates d1..d5
    MatD returns(5, 1);
    returns(0, 0) = 1.0;
    returns(1, 0) = 3.0;
    returns(2, 0) = -1.0;
    returns(3, 0) = 5.0;
    returns(4, 0) = 2.0;
    const std::vector<std::string> dates = {"2000-01-02", "2000-01-03", "2000-01-04",
                                            "2000-01-05", "2000-01-06"};
    SplitSpec split;
    split.train_end_date = "2000-01-04";
    split.test_end_date = "2000-01-06";
    const DatasetSplit ds = build_dataset(returns, dates, {"T"}, "T", split);

    // feature rows d1..d4 (d5 has no successor); train rows d1..d3, so the
    // train mean is (1+3-1)/3 = 1 and labels compare the NEXT return to it
    REQUIRE(ds.train.size() == 3);
    CHECK(ds.train.mean_return == doctest::Approx(1.0));
    CHECK(ds.train.y[0] == 1);  // next return 3 > 1
    CHECK(ds.train.y[1] == 0);  // next return -1 <= 1
    CHECK(ds.train.y[2] == 1);  // next return 5 > 1
    REQUIRE(ds.test.size() == 1);
    CHECK(ds.test.dates[0] == "2000-01-05");
    CHECK(ds.test.y[0] == 1);  // next return 2 > 1
    CHECK(ds.train.target_name == "T");

    SplitSpec bad;
    bad.train_end_date = "2000-01-06";
    bad.test_end_date = "2000-01-04";
    CHECK_THROWS_AS(build_dataset(returns, dates, {"T"}, "T", bad), SplitError);
}

TEST_CASE("dataset CSV export and import round-trip") {
    TempDir tmp;
    ReturnsDataset ds;
    ds.S = MatD(2, 2);
    ds.S(0, 0) = 0.125;
    ds.S(0, 1) = -3.5;
    ds.S(1, 0) = 1e-9;
    ds.S(1, 1) = 42.0;
    ds.y = {1, 0};
    ds.dates = {"2001-05-05", "2001-05-06"};
    ds.target_name = "T";
    ds.mean_return = 0.25;

    const std::string p = (tmp.path / "ds.csv").string();
    export_dataset_csv(ds, p);
    const ReturnsDataset back = load_dataset_csv(p);
    REQUIRE(back.size() == 2);
    CHECK(back.S == ds.S);
    CHECK(back.y == ds.y);
    CHECK(back.dates == ds.dates);
}

TEST_CASE("feature CSV tolerates a label column and keeps empty cells as NaN") {
    TempDir tmp;
    const std::string p = tmp.file("feat.csv",
                                   "date,x1,x2,label\n"
                                   "2002-03-04,0.5,,1\n"
                                   "2002-03-05,-0.25,2.0,0\n");
    const FeatureFrame f = load_feature_csv(p);
    REQUIRE(f.X.rows == 2);
    REQUIRE(f.X.cols == 2);
    CHECK(f.X(0, 0) == 0.5);
    CHECK(std::isnan(f.X(0, 1)));
    CHECK(f.X(1, 1) == 2.0);
    CHECK(f.dates[0] == "2002-03-04");
}

TEST_CASE("calendar successor handles month, year, and leap-day rollovers") {
    CHECK(next_date("2000-01-01") == "2000-01-02");
    CHECK(next_date("2000-12-31") == "2001-01-01");
    CHECK(next_date("2000-02-28") == "2000-02-29");  // 2000 is a leap year
    CHECK(next_date("2001-02-28") == "2001-03-01");
    CHECK(next_date("2100-02-28") == "2100-03-01");  // century, not leap
    CHECK(is_valid_iso_date("2000-06-15"));
    CHECK_FALSE(is_valid_iso_date("2000-13-01"));
    CHECK_FALSE(is_valid_iso_date("garbage"));
}

TEST_CASE("dickey-fuller separates a stationary series from a random walk") {
    std::vector<double> stationary, walk;
    double w = 0.0;
    std::uint64_t state = 12345;
    auto unit = [&]() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) / 9007199254740992.0 - 0.5;
    };
    for (int i = 0; i < 400; ++i) {
        stationary.push_back(unit());
        w += unit();
        walk.push_back(w);
    }
    const DickeyFullerResult s = dickey_fuller(stationary, 0.05);
    const DickeyFullerResult r = dickey_fuller(walk, 0.05);
    CHECK(s.reject_unit_root);
    CHECK(s.statistic < r.statistic);
}

TEST_CASE("text file helpers raise FileError on unopenable paths") {
    CHECK_THROWS_AS(read_text_file("/nonexistent/file.txt"), FileError);
    CHECK_THROWS_AS(write_text_file("/nonexistent/dir/file.txt", "x"), FileError);
    TempDir tmp;
    const std::string p = (tmp.path / "t.txt").string();
    write_text_file(p, "payload");
    CHECK(read_text_file(p) == "payload");
}
