#include "report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "error.hpp"

namespace relaxcrb {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s(buf);
    // Keep doubles distinguishable from integers after a round trip.
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string quote(const std::string &s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string header_cell(const Column &c) {
    return c.unit.empty() ? c.name : c.name + "[" + c.unit + "]";
}

Column parse_header_cell(const std::string &s) {
    const auto lb = s.find('[');
    if (lb != std::string::npos && !s.empty() && s.back() == ']')
        return {s.substr(0, lb), s.substr(lb + 1, s.size() - lb - 2)};
    return {s, ""};
}

// Splits one CSV record; quoted fields keep their quotes so the caller can
// tell text from numbers.
std::vector<std::string> split_record(const std::string &line) {
    std::vector<std::string> out;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                in_quotes = false;
                cur += '"';
            } else {
                cur += c;
            }
        } else if (c == '"') {
            in_quotes = true;
            cur += '"';
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (in_quotes) throw Error(ErrorCode::InvalidArgument, "unterminated quoted CSV field");
    out.push_back(std::move(cur));
    return out;
}

Cell parse_cell(const std::string &field) {
    if (field.empty()) return std::monostate{};
    if (field.front() == '"') {
        std::string s;
        for (std::size_t i = 1; i + 1 < field.size(); ++i) s += field[i];
        return s;
    }
    const char *first = field.data();
    const char *last = first + field.size();
    if (field.find_first_of(".eEn") == std::string::npos) {
        std::int64_t v = 0;
        const auto [p, ec] = std::from_chars(first, last, v);
        if (ec == std::errc() && p == last) return v;
    } else {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(first, last, v);
        if (ec == std::errc() && p == last) return v;
    }
    throw Error(ErrorCode::InvalidArgument, "malformed CSV cell '" + field + "'");
}

nlohmann::ordered_json cell_json(const Cell &c) {
    return std::visit(
        [](const auto &v) -> nlohmann::ordered_json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>)
                return nullptr;
            else
                return v;
        },
        c);
}

} // namespace

void ReportTable::add_row(std::vector<Cell> row) {
    if (row.size() != columns.size())
        throw Error(ErrorCode::Internal, "row width does not match table '" + name + "'");
    for (const Cell &c : row)
        if (const double *d = std::get_if<double>(&c); d && !std::isfinite(*d))
            throw Error(ErrorCode::Internal, "non-finite value in table '" + name + "'");
    rows.push_back(std::move(row));
}

std::size_t ReportTable::column_index(const std::string &col) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == col) return i;
    throw Error(ErrorCode::InvalidArgument, "table '" + name + "' has no column '" + col + "'");
}

const ReportTable *Report::table(const std::string &name) const {
    for (const ReportTable &t : tables)
        if (t.name == name) return &t;
    return nullptr;
}

std::string to_csv(const ReportTable &t) {
    std::ostringstream os;
    os << "#schema=" << kCsvSchema << "\n#table=" << t.name << "\n";
    for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << header_cell(t.columns[i]);
    os << "\n";
    for (const auto &row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            std::visit(
                [&](const auto &v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>)
                        os << format_double(v);
                    else if constexpr (std::is_same_v<T, std::int64_t>)
                        os << v;
                    else if constexpr (std::is_same_v<T, std::string>)
                        os << quote(v);
                },
                row[i]);
        }
        os << "\n";
    }
    return os.str();
}

ReportTable parse_csv(const std::string &text) {
    std::istringstream is(text);
    std::string line;
    ReportTable t;
    bool have_schema = false, have_header = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line.rfind("#schema=", 0) == 0) {
                if (line.substr(8) != std::to_string(kCsvSchema))
                    throw Error(ErrorCode::InvalidArgument, "unsupported CSV schema '" + line.substr(8) + "'");
                have_schema = true;
            } else if (line.rfind("#table=", 0) == 0) {
                t.name = line.substr(7);
            }
            continue;
        }
        if (!have_header) {
            for (const std::string &h : split_record(line)) t.columns.push_back(parse_header_cell(h));
            have_header = true;
            continue;
        }
        std::vector<Cell> row;
        for (const std::string &f : split_record(line)) row.push_back(parse_cell(f));
        t.add_row(std::move(row));
    }
    if (!have_schema || !have_header) throw Error(ErrorCode::InvalidArgument, "CSV lacks schema or header line");
    return t;
}

std::string to_json(const Report &r) {
    nlohmann::ordered_json j;
    j["schema"] = kCsvSchema;
    j["command"] = r.command;
    j["warnings"] = r.warnings;
    j["errors"] = r.errors;
    auto tables = nlohmann::ordered_json::array();
    for (const ReportTable &t : r.tables) {
        nlohmann::ordered_json jt;
        jt["name"] = t.name;
        auto cols = nlohmann::ordered_json::array();
        for (const Column &c : t.columns) cols.push_back({{"name", c.name}, {"unit", c.unit}});
        jt["columns"] = cols;
        auto rows = nlohmann::ordered_json::array();
        for (const auto &row : t.rows) {
            nlohmann::ordered_json jr = nlohmann::ordered_json::object();
            for (std::size_t i = 0; i < row.size(); ++i) jr[t.columns[i].name] = cell_json(row[i]);
            rows.push_back(std::move(jr));
        }
        jt["rows"] = rows;
        tables.push_back(std::move(jt));
    }
    j["tables"] = tables;
    return j.dump(2) + "\n";
}

std::vector<std::string> write_report(const Report &r, const std::string &dir, bool json) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create output directory '" + dir + "': " + ec.message());

    std::vector<std::string> written;
    auto emit = [&](const std::string &file, const std::string &content) {
        const fs::path path = fs::path(dir) / file;
        std::ofstream out(path, std::ios::binary);
        out << content;
        out.close();
        if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
        written.push_back(path.string());
    };

    if (json) {
        emit(r.command + ".json", to_json(r));
        return written;
    }
    for (const ReportTable &t : r.tables) emit(r.command + "_" + t.name + ".csv", to_csv(t));
    if (!r.warnings.empty() || !r.errors.empty()) {
        ReportTable m{"messages", {{"level", ""}, {"message", ""}}, {}};
        for (const auto &w : r.warnings) m.add_row({std::string("warning"), w});
        for (const auto &e : r.errors) m.add_row({std::string("error"), e});
        emit(r.command + "_messages.csv", to_csv(m));
    }
    return written;
}

} // namespace relaxcrb
