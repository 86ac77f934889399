#ifndef CONDEX_CSV_HPP
#define CONDEX_CSV_HPP

#include <charconv>
#include <cstddef>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "condex/errors.hpp"
#include "condex/io.hpp"
#include "condex/operators.hpp"

namespace condex {

/// Shortest representation that parses back to the identical double, so CSV
/// output is byte-stable across runs.
inline std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            fields.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return fields;
}

inline double parse_double(std::string_view field, const std::string& path, std::size_t line_no) {
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw DataError(path + ": line " + std::to_string(line_no) + ": cannot parse '" +
                        std::string(field) + "' as a number");
    return v;
}

inline std::vector<std::string_view> split_lines(const std::string& content) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= content.size(); ++i) {
        if (i == content.size() || content[i] == '\n') {
            lines.emplace_back(content.data() + start, i - start);
            start = i + 1;
        }
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

// Header must read x1,...,xd followed (optionally) by y.
inline std::size_t parse_header(const std::vector<std::string_view>& fields, bool expect_y,
                                const std::string& path) {
    const std::size_t d = expect_y ? fields.size() - 1 : fields.size();
    auto fail = [&]() {
        throw DataError(path + ": line 1: expected header 'x1,...,xd" +
                        std::string(expect_y ? ",y" : "") + "'");
    };
    if (fields.empty() || (expect_y && fields.size() < 2) || d == 0) fail();
    for (std::size_t i = 0; i < d; ++i)
        if (fields[i] != "x" + std::to_string(i + 1)) fail();
    if (expect_y && fields.back() != "y") fail();
    return d;
}

}  // namespace detail

/// Read sampled pairs from CSV with header x1,...,xd,y; d is inferred from the
/// header. Malformed rows fail loudly with their line number.
inline Dataset read_dataset_csv(const std::string& path) {
    const std::string content = read_file(path);
    const auto lines = detail::split_lines(content);
    if (lines.empty()) throw DataError(path + ": empty file, expected header x1,...,xd,y");
    const std::size_t d = detail::parse_header(detail::split_csv(lines[0]), true, path);
    Dataset data;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (detail::trim(lines[ln]).empty()) continue;
        const auto fields = detail::split_csv(lines[ln]);
        if (fields.size() != d + 1)
            throw DataError(path + ": line " + std::to_string(ln + 1) + ": expected " +
                            std::to_string(d + 1) + " fields, got " + std::to_string(fields.size()));
        Point p;
        p.coords.reserve(d);
        for (std::size_t i = 0; i < d; ++i)
            p.coords.push_back(detail::parse_double(fields[i], path, ln + 1));
        data.xs.push_back(std::move(p));
        data.ys.push_back(detail::parse_double(fields[d], path, ln + 1));
    }
    return data;
}

/// Read query points from CSV with header x1,...,xd. A header-only file is a
/// valid empty query.
inline std::vector<Point> read_points_csv(const std::string& path) {
    const std::string content = read_file(path);
    const auto lines = detail::split_lines(content);
    if (lines.empty()) throw DataError(path + ": empty file, expected header x1,...,xd");
    const std::size_t d = detail::parse_header(detail::split_csv(lines[0]), false, path);
    std::vector<Point> points;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (detail::trim(lines[ln]).empty()) continue;
        const auto fields = detail::split_csv(lines[ln]);
        if (fields.size() != d)
            throw DataError(path + ": line " + std::to_string(ln + 1) + ": expected " +
                            std::to_string(d) + " fields, got " + std::to_string(fields.size()));
        Point p;
        p.coords.reserve(d);
        for (std::size_t i = 0; i < d; ++i)
            p.coords.push_back(detail::parse_double(fields[i], path, ln + 1));
        points.push_back(std::move(p));
    }
    return points;
}

inline std::string dataset_to_csv(const Dataset& data) {
    std::ostringstream out;
    const std::size_t d = data.dim();
    for (std::size_t i = 0; i < d; ++i) out << "x" << (i + 1) << ",";
    out << "y\n";
    for (std::size_t i = 0; i < data.n(); ++i) {
        for (double c : data.xs[i].coords) out << fmt_double(c) << ",";
        out << fmt_double(data.ys[i]) << "\n";
    }
    return out.str();
}

}  // namespace condex

#endif
