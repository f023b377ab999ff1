#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace relaxcrb {

/// Empty cells (monostate) stand for values that do not exist, e.g. a T2
/// column for a T1-only family. Numeric cells must be finite.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Column {
    std::string name;
    std::string unit; // empty for dimensionless or text columns
};

struct ReportTable {
    std::string name;
    std::vector<Column> columns;
    std::vector<std::vector<Cell>> rows;

    /// Appends a row; throws Internal on a width mismatch or a non-finite number.
    void add_row(std::vector<Cell> row);
    std::size_t column_index(const std::string &name) const;
};

struct Report {
    std::string command;
    std::vector<ReportTable> tables;
    std::vector<std::string> warnings;
    std::vector<std::string> errors;
    int exit_code = 0;

    const ReportTable *table(const std::string &name) const;
};

constexpr int kCsvSchema = 1;

std::string to_csv(const ReportTable &t);
/// Inverse of to_csv: numbers come back as doubles or integers, exactly.
ReportTable parse_csv(const std::string &text);

std::string to_json(const Report &r);

/// Writes the report into `dir`. CSV writes one `<command>_<table>.csv` file
/// per table plus `<command>_messages.csv` when there are warnings or errors;
/// JSON writes a single `<command>.json`. Returns the written paths.
std::vector<std::string> write_report(const Report &r, const std::string &dir, bool json);

} // namespace relaxcrb
