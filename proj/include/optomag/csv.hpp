#pragma once

#include <string>
#include <vector>

namespace optomag {

/// Shortest round-trip decimal representation; identical bytes for identical doubles.
std::string format_double(double v);

/// CSV table with a versioned comment header:
///   # optomag-csv/1 <schema>
///   col1,col2,...
class CsvTable {
public:
    CsvTable(std::string schema, std::vector<std::string> columns);

    void add_row(const std::vector<double>& row);
    const std::string& schema() const { return schema_; }
    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<double>>& data() const { return rows_; }

    std::string str() const;
    void write(const std::string& path) const;

private:
    std::string schema_;
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> rows_;
};

inline constexpr const char* csv_format_version = "optomag-csv/1";

/// Reads a table written by CsvTable (comment lines skipped).
CsvTable read_csv(const std::string& path);

}  // namespace optomag
