// csv.hpp — deterministic CSV output: fixed column order, header row, floats
// at 17 significant digits.

#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "oqs/errors.hpp"

namespace oqs {

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

using CsvCell = std::variant<std::int64_t, std::uint64_t, double, std::string>;

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header)
        : out_(path), width_(header.size()) {
        if (!out_) throw ConfigError("csv: cannot open " + path);
        write_line(header);
    }

    void row(const std::vector<CsvCell>& cells) {
        if (cells.size() != width_) throw ShapeError("csv: row width != header width");
        std::vector<std::string> rendered;
        rendered.reserve(cells.size());
        for (const CsvCell& c : cells)
            rendered.push_back(std::visit(
                [](const auto& v) -> std::string {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) return fmt17(v);
                    else if constexpr (std::is_same_v<T, std::string>) return v;
                    else return std::to_string(v);
                },
                c));
        write_line(rendered);
    }

  private:
    void write_line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ofstream out_;
    std::size_t width_;
};

}  // namespace oqs
