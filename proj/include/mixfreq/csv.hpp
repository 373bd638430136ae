#ifndef MIXFREQ_CSV_HPP
#define MIXFREQ_CSV_HPP

#include <optional>
#include <string>
#include <vector>

namespace mixfreq {

/// Parsed CSV: header row plus rows of cells. Quoting per RFC 4180
/// (double-quoted fields, "" escapes, embedded separators and newlines).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& path_for_errors = "<string>");

/// Numeric view of one column: empty cells become nullopt, anything else must
/// parse fully as a double. Throws with the 1-based data row number on a
/// malformed cell.
std::vector<std::optional<double>> numeric_column(const CsvTable& table, int column,
                                                  const std::string& path_for_errors = "");

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Shortest-round-trip style numeric formatting used across all emitted
/// tables (17 significant digits, exact for IEEE doubles).
std::string format_double(double v);

}  // namespace mixfreq

#endif  // MIXFREQ_CSV_HPP
