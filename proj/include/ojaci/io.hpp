#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "version.hpp"

namespace ojaci {

/// Shortest text that still round-trips: 17 significant digits.
inline std::string format_double(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\xEF' ||
                          s.front() == '\xBB' || s.front() == '\xBF'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_number(std::string_view cell, double& out)
{
    cell = trim(cell);
    if (cell.empty()) return false;
    if (cell.front() == '+') cell.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
    return ec == std::errc() && ptr == cell.data() + cell.size();
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw NumericalError("cannot write '" + path + "'");
    return out;
}

}  // namespace detail

struct CsvOptions {
    bool center = false;
};

/// Rectangular numeric CSV; a first row with any non-numeric cell is a header.
inline Dataset parse_csv(std::string_view text, const CsvOptions& options = {})
{
    std::vector<double> values;
    Eigen::Index cols = -1;
    Eigen::Index rows = 0;
    std::size_t line_no = 0;
    bool first = true;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = detail::trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty()) continue;
        const auto cells = detail::split(line);
        std::vector<double> row(cells.size());
        bool numeric = true;
        for (std::size_t i = 0; i < cells.size(); ++i) numeric = numeric && detail::parse_number(cells[i], row[i]);
        if (!numeric) {
            if (first) {
                first = false;
                cols = static_cast<Eigen::Index>(cells.size());
                continue;
            }
            throw InvalidArgument("csv line " + std::to_string(line_no) + ": non-numeric cell");
        }
        first = false;
        if (cols < 0) cols = static_cast<Eigen::Index>(cells.size());
        if (static_cast<Eigen::Index>(cells.size()) != cols)
            throw InvalidArgument("csv line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                                  " cells, found " + std::to_string(cells.size()));
        values.insert(values.end(), row.begin(), row.end());
        ++rows;
    }
    if (rows == 0) throw InvalidArgument("csv: no data rows");
    SampleMatrix x = Eigen::Map<const SampleMatrix>(values.data(), rows, cols);
    if (options.center) x.rowwise() -= x.colwise().mean();
    return Dataset(std::move(x), Provenance::file);
}

inline Dataset read_csv(const std::string& path, const CsvOptions& options = {})
{
    return parse_csv(detail::read_file(path), options);
}

inline void write_csv(const Dataset& data, std::ostream& out, bool header = false)
{
    const Eigen::Index d = data.dim();
    if (header) {
        for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << "x" << (j + 1);
        out << '\n';
    }
    std::string line;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        line.clear();
        for (Eigen::Index j = 0; j < d; ++j) {
            if (j) line += ',';
            line += format_double(data.samples()(i, j));
        }
        line += '\n';
        out << line;
    }
}

inline void write_csv(const Dataset& data, const std::string& path, bool header = false)
{
    auto out = detail::open_output(path);
    write_csv(data, out, header);
}

/// One (trial, method) outcome of a coverage experiment.
struct ExperimentRecord {
    Eigen::Index trial = 0;
    std::string method;  // "ojavarest" or "bootstrap"
    Eigen::Index n = 0;
    Eigen::Index d = 0;
    double beta = 0.0;
    Eigen::Index b = 0;  // replicas; 0 for ojavarest
    /// Tracked coordinates (0-based) and whether each interval covered the truth.
    std::vector<Eigen::Index> coordinates;
    std::vector<int> hits;
    std::vector<double> half_widths;
    double sin2_error = 0.0;
    double ms_sweep = 0.0;
    double ms_aggregate = 0.0;
    double ms_total = 0.0;

    friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

namespace detail {

template <class T>
std::string join(const std::vector<T>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ';';
        if constexpr (std::is_floating_point_v<T>)
            s += format_double(v[i]);
        else
            s += std::to_string(v[i]);
    }
    return s;
}

template <class T>
std::vector<T> unjoin(std::string_view s)
{
    std::vector<T> out;
    if (trim(s).empty()) return out;
    for (auto cell : split(s, ';')) {
        double x = 0.0;
        if (!parse_number(cell, x)) throw InvalidArgument("records csv: bad list cell");
        out.push_back(static_cast<T>(x));
    }
    return out;
}

}  // namespace detail

inline constexpr std::string_view kRecordColumns =
    "trial,method,n,d,beta,b,coordinates,hits,half_widths,sin2_error,ms_sweep,ms_aggregate,ms_total";
inline constexpr std::string_view kRecordColumnsNoTiming =
    "trial,method,n,d,beta,b,coordinates,hits,half_widths,sin2_error";

enum class ResultFormat { csv, json };

inline nlohmann::json to_json(const ExperimentRecord& r, bool timing = true)
{
    nlohmann::json j{{"trial", r.trial},         {"method", r.method},         {"n", r.n},
                     {"d", r.d},                 {"beta", r.beta},             {"b", r.b},
                     {"coordinates", r.coordinates}, {"hits", r.hits},         {"half_widths", r.half_widths},
                     {"sin2_error", r.sin2_error}};
    if (timing) {
        j["ms_sweep"] = r.ms_sweep;
        j["ms_aggregate"] = r.ms_aggregate;
        j["ms_total"] = r.ms_total;
    }
    return j;
}

/// CSV in the fixed column order above, or a JSON array of records.
/// `timing = false` drops the wall-clock columns, leaving output that is a
/// pure function of the inputs and seeds.
inline void write_results(const std::vector<ExperimentRecord>& records, ResultFormat format, std::ostream& out,
                          bool timing = true)
{
    if (format == ResultFormat::json) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : records) arr.push_back(to_json(r, timing));
        out << arr.dump(2) << '\n';
        return;
    }
    out << (timing ? kRecordColumns : kRecordColumnsNoTiming) << '\n';
    for (const auto& r : records) {
        out << r.trial << ',' << r.method << ',' << r.n << ',' << r.d << ',' << format_double(r.beta) << ',' << r.b << ','
            << detail::join(r.coordinates) << ',' << detail::join(r.hits) << ',' << detail::join(r.half_widths) << ','
            << format_double(r.sin2_error);
        if (timing)
            out << ',' << format_double(r.ms_sweep) << ',' << format_double(r.ms_aggregate) << ','
                << format_double(r.ms_total);
        out << '\n';
    }
}

inline void write_results(const std::vector<ExperimentRecord>& records, ResultFormat format, const std::string& path,
                          bool timing = true)
{
    auto out = detail::open_output(path);
    write_results(records, format, out, timing);
    if (!out) throw NumericalError("write failed for '" + path + "'");
}

inline std::vector<ExperimentRecord> parse_results_csv(std::string_view text)
{
    std::vector<ExperimentRecord> out;
    std::size_t pos = text.find('\n');
    if (pos == std::string_view::npos) return out;
    const auto header = detail::trim(text.substr(0, pos));
    const bool timing = header == kRecordColumns;
    if (!timing && header != kRecordColumnsNoTiming) throw InvalidArgument("records csv: unexpected header");
    ++pos;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const auto line = detail::trim(text.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty()) continue;
        const auto c = detail::split(line);
        if (c.size() != (timing ? 13u : 10u)) throw InvalidArgument("records csv: wrong cell count");
        auto num = [](std::string_view s) {
            double x = 0.0;
            if (!detail::parse_number(s, x)) throw InvalidArgument("records csv: bad number");
            return x;
        };
        ExperimentRecord r;
        r.trial = static_cast<Eigen::Index>(num(c[0]));
        r.method = std::string(detail::trim(c[1]));
        r.n = static_cast<Eigen::Index>(num(c[2]));
        r.d = static_cast<Eigen::Index>(num(c[3]));
        r.beta = num(c[4]);
        r.b = static_cast<Eigen::Index>(num(c[5]));
        r.coordinates = detail::unjoin<Eigen::Index>(c[6]);
        r.hits = detail::unjoin<int>(c[7]);
        r.half_widths = detail::unjoin<double>(c[8]);
        r.sin2_error = num(c[9]);
        if (timing) {
            r.ms_sweep = num(c[10]);
            r.ms_aggregate = num(c[11]);
            r.ms_total = num(c[12]);
        }
        out.push_back(std::move(r));
    }
    return out;
}

/// FNV-1a 64-bit, hex encoded.
inline std::string content_hash(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunManifest {
    std::string subcommand;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::string input_hash;
    std::string started;
    std::string finished;
    std::string version = std::string(kVersion);

    [[nodiscard]] nlohmann::json to_json() const
    {
        return {{"subcommand", subcommand}, {"config", config},     {"seed", seed},   {"input_hash", input_hash},
                {"started", started},       {"finished", finished}, {"version", version}};
    }
};

inline void write_json(const nlohmann::json& j, const std::string& path)
{
    auto out = detail::open_output(path);
    out << j.dump(2) << '\n';
    if (!out) throw NumericalError("write failed for '" + path + "'");
}

}  // namespace ojaci
