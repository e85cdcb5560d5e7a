#pragma once

// Price-series ingestion, percent-log-return construction, and the JSON
// report writer.  CSV input is `date,price` with ISO-8601 dates; rows whose
// price field is empty or "." (the usual placeholder for market holidays) are
// dropped, so the previous close becomes the differencing partner.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "spivar/errors.hpp"

namespace spivar {

struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    friend bool operator==(const Date& a, const Date& b) {
        return a.year == b.year && a.month == b.month && a.day == b.day;
    }
    friend bool operator!=(const Date& a, const Date& b) { return !(a == b); }
    friend bool operator<(const Date& a, const Date& b) {
        if (a.year != b.year) return a.year < b.year;
        if (a.month != b.month) return a.month < b.month;
        return a.day < b.day;
    }
    friend bool operator<=(const Date& a, const Date& b) { return a < b || a == b; }

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
        return buf;
    }

    static bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

    static int days_in_month(int y, int m) {
        static const int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        if (m == 2 && leap(y)) return 29;
        return kDays[m - 1];
    }

    bool valid() const {
        return month >= 1 && month <= 12 && day >= 1 && day <= days_in_month(year, month);
    }

    Date next_day() const {
        Date n = *this;
        if (++n.day > days_in_month(n.year, n.month)) {
            n.day = 1;
            if (++n.month > 12) {
                n.month = 1;
                ++n.year;
            }
        }
        return n;
    }

    // strict YYYY-MM-DD
    static Date parse(const std::string& s) {
        if (s.size() != 10 || s[4] != '-' || s[7] != '-')
            throw std::invalid_argument("date not in YYYY-MM-DD form: '" + s + "'");
        for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
            if (!std::isdigit(static_cast<unsigned char>(s[i])))
                throw std::invalid_argument("date not in YYYY-MM-DD form: '" + s + "'");
        Date d;
        d.year = std::stoi(s.substr(0, 4));
        d.month = std::stoi(s.substr(5, 2));
        d.day = std::stoi(s.substr(8, 2));
        if (!d.valid()) throw std::invalid_argument("invalid calendar date: '" + s + "'");
        return d;
    }
};

struct PriceSeries {
    std::vector<Date> dates;
    std::vector<double> prices;
    std::size_t dropped_rows = 0;  // rows skipped for an empty/placeholder price
    std::string source;
};

struct ReturnSeries {
    std::vector<Date> dates;       // date of each return (the later observation)
    std::vector<double> returns;   // 100 * ln(p_t / p_{t-1})
    std::string source_label;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline double parse_price(const std::string& field, std::size_t line_no,
                          const std::string& path) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc() || res.ptr != last)
        throw IoError(path + ":" + std::to_string(line_no) + ": unparseable price '" +
                      field + "'");
    return value;
}

}  // namespace detail

inline PriceSeries load_prices_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    PriceSeries out;
    out.source = path;
    std::string line;
    std::size_t line_no = 0;
    Date last_date;
    bool have_last = false;

    if (!std::getline(in, line)) throw IoError(path + ": empty file");
    ++line_no;
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB &&
        static_cast<unsigned char>(line[2]) == 0xBF)
        line.erase(0, 3);  // UTF-8 BOM
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line) != "date,price")
        throw IoError(path + ":1: expected header 'date,price', got '" + line + "'");

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;

        const std::size_t comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw IoError(path + ":" + std::to_string(line_no) +
                          ": expected exactly two comma-separated fields");
        const std::string date_field = detail::trim(line.substr(0, comma));
        const std::string price_field = detail::trim(line.substr(comma + 1));

        Date d;
        try {
            d = Date::parse(date_field);
        } catch (const std::invalid_argument& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        // dropped rows still carry real dates, so they participate in the
        // monotonicity check
        if (have_last && !(last_date < d))
            throw IoError(path + ":" + std::to_string(line_no) +
                          ": dates not strictly increasing (" + last_date.to_string() +
                          " then " + d.to_string() + ")");
        last_date = d;
        have_last = true;

        if (price_field.empty() || price_field == ".") {
            ++out.dropped_rows;
            continue;
        }
        const double p = detail::parse_price(price_field, line_no, path);
        out.dates.push_back(d);
        out.prices.push_back(p);
    }
    if (out.prices.empty()) throw IoError(path + ": no price rows");
    return out;
}

inline ReturnSeries to_returns(const std::vector<Date>& dates,
                               const std::vector<double>& prices,
                               std::string source_label = {}) {
    if (prices.size() < 2)
        throw std::domain_error("to_returns: need at least two prices");
    if (dates.size() != prices.size())
        throw std::invalid_argument("to_returns: dates/prices length mismatch");
    ReturnSeries out;
    out.source_label = std::move(source_label);
    out.dates.reserve(prices.size() - 1);
    out.returns.reserve(prices.size() - 1);
    for (std::size_t i = 0; i < prices.size(); ++i)
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i]))
            throw std::domain_error("to_returns: nonpositive price at index " +
                                    std::to_string(i));
    for (std::size_t i = 1; i < prices.size(); ++i) {
        out.dates.push_back(dates[i]);
        out.returns.push_back(100.0 * std::log(prices[i] / prices[i - 1]));
    }
    return out;
}

inline void write_prices_csv(const std::string& path, const std::vector<Date>& dates,
                             const std::vector<double>& prices) {
    if (dates.size() != prices.size())
        throw std::invalid_argument("write_prices_csv: dates/prices length mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "date,price\n";
    char buf[40];
    for (std::size_t i = 0; i < dates.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", prices[i]);
        out << dates[i].to_string() << ',' << buf << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

// 64-bit FNV-1a of a byte range; used to fingerprint report inputs.
inline std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string file_fingerprint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for fingerprinting");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return buf;
}

namespace detail {

// Deterministic serializer: 17-significant-digit floats, non-finite values as
// null, 2-space indentation, key order as inserted.  nlohmann's own dump()
// would serialize NaN as a literal that some readers reject, and its float
// format is not pinned to a digit count.
inline void write_json_value(std::ostream& os, const nlohmann::ordered_json& v,
                             int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string pad_in(static_cast<std::size_t>(indent + 1) * 2, ' ');
    switch (v.type()) {
        case nlohmann::ordered_json::value_t::object: {
            if (v.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) os << ",\n";
                first = false;
                os << pad_in << nlohmann::ordered_json(it.key()).dump() << ": ";
                write_json_value(os, it.value(), indent + 1);
            }
            os << '\n' << pad << '}';
            return;
        }
        case nlohmann::ordered_json::value_t::array: {
            if (v.empty()) {
                os << "[]";
                return;
            }
            os << "[\n";
            bool first = true;
            for (const auto& item : v) {
                if (!first) os << ",\n";
                first = false;
                os << pad_in;
                write_json_value(os, item, indent + 1);
            }
            os << '\n' << pad << ']';
            return;
        }
        case nlohmann::ordered_json::value_t::string:
            os << v.dump();
            return;
        case nlohmann::ordered_json::value_t::boolean:
            os << (v.get<bool>() ? "true" : "false");
            return;
        case nlohmann::ordered_json::value_t::number_integer:
            os << v.get<std::int64_t>();
            return;
        case nlohmann::ordered_json::value_t::number_unsigned:
            os << v.get<std::uint64_t>();
            return;
        case nlohmann::ordered_json::value_t::number_float: {
            const double x = v.get<double>();
            if (!std::isfinite(x)) {
                os << "null";
                return;
            }
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", x);
            os << buf;
            return;
        }
        default:
            os << "null";
            return;
    }
}

}  // namespace detail

inline void write_report(const nlohmann::ordered_json& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    detail::write_json_value(out, doc, 0);
    out << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace spivar
