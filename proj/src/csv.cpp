#include "optomag/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>

#include "optomag/errors.hpp"

namespace optomag {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
    return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::string schema, std::vector<std::string> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {}

void CsvTable::add_row(const std::vector<double>& row) {
    if (row.size() != columns_.size()) throw DimensionError("csv row width does not match the header");
    rows_.push_back(row);
}

std::string CsvTable::str() const {
    std::string out = std::string("# ") + csv_format_version + " " + schema_ + "\n";
    out += boost::join(columns_, ",") + "\n";
    for (const auto& r : rows_) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            out += format_double(r[i]);
        }
        out += '\n';
    }
    return out;
}

void CsvTable::write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write '" + path + "'");
    f << str();
    if (!f) throw Error("write failed for '" + path + "'");
}

CsvTable read_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot read '" + path + "'");
    std::string line, schema;
    std::vector<std::string> cols;
    std::vector<std::vector<double>> rows;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string prefix = std::string("# ") + csv_format_version + " ";
            if (line.rfind(prefix, 0) == 0) schema = line.substr(prefix.size());
            continue;
        }
        std::vector<std::string> parts;
        boost::split(parts, line, boost::is_any_of(","));
        if (cols.empty()) {
            cols = parts;
            continue;
        }
        std::vector<double> r;
        for (const auto& s : parts) r.push_back(std::stod(s));
        rows.push_back(r);
    }
    CsvTable t(schema, cols);
    for (const auto& r : rows) t.add_row(r);
    return t;
}

}  // namespace optomag
