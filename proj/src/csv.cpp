#include "mixfreq/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mixfreq {

int CsvTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_csv: cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), path);
}

CsvTable parse_csv(const std::string& text, const std::string& path) {
    CsvTable table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool record_has_data = false;
    std::size_t line = 1;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        record_has_data = true;
    };
    auto end_record = [&] {
        if (!record_has_data && record.empty()) return;  // skip blank lines
        end_field();
        if (table.header.empty())
            table.header = record;
        else
            table.rows.push_back(record);
        record.clear();
        record_has_data = false;
        field.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
                if (c == '\n') ++line;
            }
        } else if (c == '"') {
            if (!field.empty())
                throw std::runtime_error(path + ":" + std::to_string(line) +
                                         ": quote inside unquoted field");
            in_quotes = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r') {
            // swallow; the \n (if any) terminates the record
        } else if (c == '\n') {
            if (record_has_data || !field.empty()) end_record();
            ++line;
        } else {
            field += c;
        }
    }
    if (in_quotes) throw std::runtime_error(path + ": unterminated quoted field");
    if (record_has_data || !field.empty()) end_record();

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        if (table.rows[r].size() != table.header.size())
            throw std::runtime_error(path + ": row " + std::to_string(r + 1) + " has " +
                                     std::to_string(table.rows[r].size()) + " fields, header has " +
                                     std::to_string(table.header.size()));
    }
    return table;
}

std::vector<std::optional<double>> numeric_column(const CsvTable& table, int column,
                                                  const std::string& path) {
    if (column < 0 || column >= static_cast<int>(table.header.size()))
        throw std::out_of_range("numeric_column: column index out of range");
    std::vector<std::optional<double>> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string& cell = table.rows[r][column];
        if (cell.empty() || cell == "NA" || cell == "NaN") {
            out.push_back(std::nullopt);
            continue;
        }
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(cell.c_str(), &end);
        if (errno != 0 || end == cell.c_str() || *end != '\0')
            throw std::runtime_error(path + ": row " + std::to_string(r + 1) + ", column '" +
                                     table.header[column] + "': non-numeric value '" + cell + "'");
        out.push_back(v);
    }
    return out;
}

namespace {

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote(const std::string& s) {
    if (!needs_quoting(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "'");
    auto write_record = [&out](const std::vector<std::string>& record) {
        for (std::size_t i = 0; i < record.size(); ++i) {
            if (i) out << ',';
            out << quote(record[i]);
        }
        out << '\n';
    };
    write_record(header);
    for (const auto& row : rows) write_record(row);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace mixfreq
