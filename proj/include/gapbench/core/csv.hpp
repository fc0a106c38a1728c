#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gapbench/core/error.hpp"

namespace gapbench {

// Formats a double with enough digits to round-trip, without locale effects.
// All report files go through this so repeated runs are byte-identical.
inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path) {
        require(out_.good(), "cannot open CSV for writing: " + path);
    }

    void header(const std::vector<std::string>& names) { row_strings(names); }

    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (i) out_ << ',';
            out_ << fmt_double(values[i]);
        }
        out_ << '\n';
    }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// Reads a numeric CSV with a single header line.
inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open CSV: " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        if (first) {
            while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
            first = false;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        require(row.size() == table.columns.size(), "ragged CSV row in " + path);
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace gapbench
