#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "spivar/data_io.hpp"

using namespace spivar;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

struct TempFile {
    fs::path path;
    explicit TempFile(const std::string& name, const std::string& contents = {}) {
        path = fs::temp_directory_path() / name;
        if (!contents.empty()) {
            std::ofstream out(path, std::ios::binary);
            out << contents;
        }
    }
    ~TempFile() {
        std::error_code ec;
        fs::remove(path, ec);
    }
    std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("calendar dates", "[data_io]") {
    SECTION("parse and format round trip") {
        const Date d = Date::parse("1990-04-02");
        REQUIRE(d.year == 1990);
        REQUIRE(d.month == 4);
        REQUIRE(d.day == 2);
        REQUIRE(d.to_string() == "1990-04-02");
    }

    SECTION("ordering") {
        REQUIRE(Date::parse("2020-01-31") < Date::parse("2020-02-01"));
        REQUIRE(Date::parse("2019-12-31") < Date::parse("2020-01-01"));
        REQUIRE(Date::parse("2020-05-05") == Date::parse("2020-05-05"));
        REQUIRE_FALSE(Date::parse("2020-05-05") < Date::parse("2020-05-05"));
    }

    SECTION("next_day crosses month, year, and leap boundaries") {
        REQUIRE(Date::parse("2020-01-31").next_day() == Date::parse("2020-02-01"));
        REQUIRE(Date::parse("2019-12-31").next_day() == Date::parse("2020-01-01"));
        REQUIRE(Date::parse("2020-02-28").next_day() == Date::parse("2020-02-29"));
        REQUIRE(Date::parse("2021-02-28").next_day() == Date::parse("2021-03-01"));
        REQUIRE(Date::parse("1900-02-28").next_day() == Date::parse("1900-03-01"));
        REQUIRE(Date::parse("2000-02-28").next_day() == Date::parse("2000-02-29"));
    }

    SECTION("rejects malformed or impossible dates") {
        REQUIRE_THROWS_AS(Date::parse("2020/01/01"), std::invalid_argument);
        REQUIRE_THROWS_AS(Date::parse("20-01-01"), std::invalid_argument);
        REQUIRE_THROWS_AS(Date::parse("2020-13-01"), std::invalid_argument);
        REQUIRE_THROWS_AS(Date::parse("2020-00-10"), std::invalid_argument);
        REQUIRE_THROWS_AS(Date::parse("2020-02-30"), std::invalid_argument);
        REQUIRE_THROWS_AS(Date::parse("2019-02-29"), std::invalid_argument);
        REQUIRE_THROWS_AS(Date::parse("2020-1-01"), std::invalid_argument);
        REQUIRE_THROWS_AS(Date::parse(""), std::invalid_argument);
    }
}

TEST_CASE("price CSV ingestion", "[data_io]") {
    SECTION("basic two-row file") {
        TempFile f("spivar_io_basic.csv", "date,price\n2020-01-01,100\n2020-01-02,105\n");
        const PriceSeries ps = load_prices_csv(f.str());
        REQUIRE(ps.prices == std::vector<double>{100.0, 105.0});
        REQUIRE(ps.dates.front() == Date::parse("2020-01-01"));
        REQUIRE(ps.dropped_rows == 0);
    }

    SECTION("missing prices are dropped with a count") {
        TempFile f("spivar_io_drop.csv",
                   "date,price\n2020-01-01,100\n2020-01-02,.\n2020-01-03,\n2020-01-06,105\n");
        const PriceSeries ps = load_prices_csv(f.str());
        REQUIRE(ps.prices == std::vector<double>{100.0, 105.0});
        REQUIRE(ps.dropped_rows == 2);
        REQUIRE(ps.dates == std::vector<Date>{Date::parse("2020-01-01"),
                                              Date::parse("2020-01-06")});
    }

    SECTION("CRLF line endings and a UTF-8 BOM are tolerated") {
        TempFile f("spivar_io_crlf.csv",
                   "\xEF\xBB\xBF" "date,price\r\n2020-01-01,100\r\n2020-01-02,105\r\n");
        const PriceSeries ps = load_prices_csv(f.str());
        REQUIRE(ps.prices.size() == 2);
    }

    SECTION("fields are whitespace-trimmed and blank lines skipped") {
        TempFile f("spivar_io_trim.csv",
                   "date,price\n 2020-01-01 , 100.5 \n\n2020-01-02,101\n");
        const PriceSeries ps = load_prices_csv(f.str());
        REQUIRE(ps.prices == std::vector<double>{100.5, 101.0});
    }

    SECTION("errors carry the offending line number") {
        TempFile f("spivar_io_badprice.csv",
                   "date,price\n2020-01-01,100\n2020-01-02,abc\n");
        REQUIRE_THROWS_WITH(load_prices_csv(f.str()),
                            Catch::Matchers::ContainsSubstring(":3:"));

        TempFile g("spivar_io_baddate.csv", "date,price\n01/02/2020,100\n");
        REQUIRE_THROWS_WITH(load_prices_csv(g.str()),
                            Catch::Matchers::ContainsSubstring(":2:"));

        TempFile h("spivar_io_fields.csv", "date,price\n2020-01-01,100,extra\n");
        REQUIRE_THROWS_WITH(load_prices_csv(h.str()),
                            Catch::Matchers::ContainsSubstring("two comma-separated"));
    }

    SECTION("dates must increase strictly, including across dropped rows") {
        TempFile f("spivar_io_mono.csv",
                   "date,price\n2020-01-02,100\n2020-01-01,105\n");
        REQUIRE_THROWS_AS(load_prices_csv(f.str()), IoError);

        TempFile g("spivar_io_dup.csv",
                   "date,price\n2020-01-02,100\n2020-01-02,105\n");
        REQUIRE_THROWS_AS(load_prices_csv(g.str()), IoError);

        // the dropped row's date still participates in the ordering check
        TempFile h("spivar_io_mono_drop.csv",
                   "date,price\n2020-01-02,100\n2020-01-03,.\n2020-01-03,105\n");
        REQUIRE_THROWS_AS(load_prices_csv(h.str()), IoError);
    }

    SECTION("structural failures") {
        TempFile f("spivar_io_empty.csv", "");
        std::ofstream(f.path).close();  // ensure the file exists but is empty
        REQUIRE_THROWS_AS(load_prices_csv(f.str()), IoError);

        TempFile g("spivar_io_header.csv", "time,close\n2020-01-01,100\n");
        REQUIRE_THROWS_AS(load_prices_csv(g.str()), IoError);

        TempFile h("spivar_io_norows.csv", "date,price\n");
        REQUIRE_THROWS_AS(load_prices_csv(h.str()), IoError);

        REQUIRE_THROWS_AS(load_prices_csv("/nonexistent/path.csv"), IoError);
    }
}

TEST_CASE("percent log returns", "[data_io]") {
    const std::vector<Date> d3 = {Date::parse("2020-01-01"), Date::parse("2020-01-02"),
                                  Date::parse("2020-01-03")};

    SECTION("direct evaluation") {
        const ReturnSeries rs = to_returns(d3, {100.0, 105.0, 105.0}, "unit");
        REQUIRE(rs.returns.size() == 2);
        REQUIRE(rs.returns[0] == Approx(100.0 * std::log(1.05)).epsilon(1e-15));
        REQUIRE(rs.returns[0] == Approx(4.87902).margin(5e-6));
        REQUIRE(rs.returns[1] == 0.0);
        REQUIRE(rs.dates == std::vector<Date>{d3[1], d3[2]});
        REQUIRE(rs.source_label == "unit");
    }

    SECTION("input validation") {
        REQUIRE_THROWS_AS(to_returns({d3[0]}, {100.0}), std::domain_error);
        REQUIRE_THROWS_AS(to_returns(d3, {100.0, 0.0, 105.0}), std::domain_error);
        REQUIRE_THROWS_AS(to_returns(d3, {100.0, -5.0, 105.0}), std::domain_error);
        REQUIRE_THROWS_AS(to_returns(d3, {100.0, 105.0}), std::invalid_argument);
    }

    SECTION("returns -> synthetic prices -> returns is the identity") {
        std::vector<Date> dates;
        std::vector<double> prices;
        Date d = Date::parse("1990-04-02");
        double p = 100.0;
        std::mt19937_64 gen(5);
        std::normal_distribution<double> z(0.0, 1.7);
        for (int i = 0; i < 400; ++i) {
            dates.push_back(d);
            prices.push_back(p);
            d = d.next_day();
            p *= std::exp(z(gen) / 100.0);
        }
        const ReturnSeries rs = to_returns(dates, prices);
        std::vector<double> synth = {100.0};
        for (double r : rs.returns) synth.push_back(synth.back() * std::exp(r / 100.0));
        const ReturnSeries rs2 = to_returns(dates, synth);
        for (std::size_t i = 0; i < rs.returns.size(); ++i)
            REQUIRE(rs2.returns[i] == Approx(rs.returns[i]).margin(1e-12));
    }
}

TEST_CASE("price CSV writer round trip", "[data_io]") {
    std::vector<Date> dates;
    std::vector<double> prices;
    Date d = Date::parse("2001-06-15");
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> u(10.0, 200.0);
    for (int i = 0; i < 50; ++i) {
        dates.push_back(d);
        prices.push_back(u(gen));
        d = d.next_day();
    }
    TempFile f("spivar_io_roundtrip.csv");
    write_prices_csv(f.str(), dates, prices);
    const PriceSeries ps = load_prices_csv(f.str());
    REQUIRE(ps.dates == dates);
    REQUIRE(ps.prices == prices);  // %.17g round-trips doubles exactly
}

TEST_CASE("content fingerprint", "[data_io]") {
    const char hello[] = "hello";
    REQUIRE(fnv1a64(hello, 5) == 0xa430d84680aabd0bull);
    REQUIRE(fnv1a64(hello, 0) == 14695981039346656037ull);  // offset basis

    TempFile f("spivar_io_fp.bin", "hello");
    REQUIRE(file_fingerprint(f.str()) == "a430d84680aabd0b");
    REQUIRE_THROWS_AS(file_fingerprint("/nonexistent/file"), IoError);
}

TEST_CASE("report writer", "[data_io]") {
    nlohmann::ordered_json doc;
    doc["schema_version"] = "1";
    doc["count"] = 42;
    doc["value"] = 0.1;
    doc["flag"] = true;
    doc["name"] = "a \"quoted\" string\nwith newline";
    doc["missing"] = std::numeric_limits<double>::quiet_NaN();
    doc["inf"] = std::numeric_limits<double>::infinity();
    doc["list"] = nlohmann::ordered_json::array({1.5, 2, nullptr});
    doc["nested"]["k"] = -3.25;
    doc["empty_obj"] = nlohmann::ordered_json::object();
    doc["empty_arr"] = nlohmann::ordered_json::array();

    TempFile f1("spivar_io_report1.json");
    TempFile f2("spivar_io_report2.json");
    write_report(doc, f1.str());
    write_report(doc, f2.str());

    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string b1 = slurp(f1.str());

    SECTION("byte-stable across writes") { REQUIRE(b1 == slurp(f2.str())); }

    SECTION("17 significant digits and explicit null for non-finite values") {
        REQUIRE(b1.find("0.10000000000000001") != std::string::npos);
        REQUIRE(b1.find("\"missing\": null") != std::string::npos);
        REQUIRE(b1.find("\"inf\": null") != std::string::npos);
        REQUIRE(b1.find("nan") == std::string::npos);
    }

    SECTION("round-trips through a standard reader") {
        const auto back = nlohmann::ordered_json::parse(b1);
        REQUIRE(back["schema_version"] == "1");
        REQUIRE(back["count"] == 42);
        REQUIRE(back["value"].get<double>() == 0.1);
        REQUIRE(back["flag"] == true);
        REQUIRE(back["name"] == "a \"quoted\" string\nwith newline");
        REQUIRE(back["missing"].is_null());
        REQUIRE(back["list"][0].get<double>() == 1.5);
        REQUIRE(back["list"][2].is_null());
        REQUIRE(back["nested"]["k"].get<double>() == -3.25);
        REQUIRE(back["empty_obj"].is_object());
        REQUIRE(back["empty_arr"].is_array());
        // key order preserved as inserted
        REQUIRE(back.begin().key() == "schema_version");
    }

    SECTION("unwritable path raises an I/O error") {
        REQUIRE_THROWS_AS(write_report(doc, "/nonexistent/dir/report.json"), IoError);
    }
}
