#include "cfgmm/data_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cfgmm {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool parse_number(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    try {
        std::size_t pos = 0;
        out = std::stod(t, &pos);
        return pos == t.size();
    } catch (const std::exception&) {
        return false;
    }
}

bool parse_index(const std::string& s, std::size_t& out) {
    if (s.empty()) return false;
    for (char c : s) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    }
    out = std::stoul(s);
    return true;
}

}  // namespace

Dataset ingest_csv(const std::string& path, const std::string& column,
                   const IngestOptions& options) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    if (lines.empty()) throw std::runtime_error("ingest_csv: " + path + " is empty");

    std::size_t col_index = 0;
    const bool by_index = parse_index(column, col_index);

    const std::vector<std::string> first = split_csv_line(lines[0]);
    bool has_header = options.force_header;
    if (!options.force_header && !options.force_no_header) {
        // auto-detect: a first row whose selected cell is not numeric is a header
        if (by_index) {
            double dummy = 0.0;
            has_header = col_index < first.size() && !parse_number(first[col_index], dummy);
        } else {
            has_header = true;  // selecting by name requires one
        }
    }
    if (!by_index) {
        if (!has_header) {
            throw std::runtime_error("ingest_csv: column selected by name but file has no header");
        }
        bool found = false;
        for (std::size_t i = 0; i < first.size(); ++i) {
            if (trim(first[i]) == column) {
                col_index = i;
                found = true;
                break;
            }
        }
        if (!found) {
            throw std::runtime_error("ingest_csv: column '" + column + "' not found in header of " +
                                     path);
        }
    }

    Dataset ds;
    ds.source = path;
    ds.name = column;
    std::vector<std::size_t> row_numbers;  // 1-based file rows, for error messages
    for (std::size_t r = has_header ? 1 : 0; r < lines.size(); ++r) {
        if (trim(lines[r]).empty()) continue;
        const std::vector<std::string> cells = split_csv_line(lines[r]);
        double v = 0.0;
        if (col_index >= cells.size() || !parse_number(cells[col_index], v)) {
            ds.skipped_rows += 1;
            continue;
        }
        ds.values.push_back(v);
        row_numbers.push_back(r + 1);
    }
    if (ds.values.empty()) {
        throw std::runtime_error("ingest_csv: no numeric values in column '" + column + "' of " +
                                 path);
    }

    if (options.mif_transform) {
        for (std::size_t i = 0; i < ds.values.size(); ++i) {
            if (ds.values[i] < 0.0) {
                throw std::runtime_error("ingest_csv: negative value at row " +
                                         std::to_string(row_numbers[i]) +
                                         " cannot be mif-transformed");
            }
        }
        ds.values = transform_mif(ds.values);
    }
    for (std::size_t i = 0; i < ds.values.size(); ++i) {
        if (!std::isfinite(ds.values[i]) || ds.values[i] <= 0.0) {
            throw std::runtime_error("ingest_csv: non-positive value at row " +
                                     std::to_string(row_numbers[i]) + " of " + path +
                                     (options.mif_transform ? " (after mif transform)" : "") +
                                     "; gamma mixtures require strictly positive data");
        }
    }
    return ds;
}

std::vector<double> transform_mif(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("transform_mif: empty input");
    double sum = 0.0;
    for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("transform_mif: values must be nonnegative and finite");
        }
        sum += v;
    }
    const double mean = sum / static_cast<double>(values.size());
    if (!(mean > 0.0)) throw std::invalid_argument("transform_mif: mean must be positive");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = std::log10(values[i] / mean + 1.0);
    }
    return out;
}

}  // namespace cfgmm
