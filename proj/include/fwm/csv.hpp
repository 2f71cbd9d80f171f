#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace fwm {

// Shortest-free, locale-independent %.17g; round-trips every finite double.
std::string format_double(double v);
double parse_double(std::string_view text);

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);

    void row(std::initializer_list<double> values);
    void row(const std::vector<double>& values);
    // Pre-formatted cells; use format_double for numbers.
    void row_cells(const std::vector<std::string>& cells);

    const std::string& str() const { return out_; }

private:
    std::size_t columns_;
    std::string out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
    std::vector<double> numeric_column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);

}  // namespace fwm
