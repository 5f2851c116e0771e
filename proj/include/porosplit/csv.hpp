#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace porosplit::csv {

using Cell = std::variant<std::int64_t, double, std::string>;

/// Shortest decimal string that parses back to the same double.
[[nodiscard]] std::string format_double(double v);

/// Header plus rows, rendered with comma separators and '\n' line ends.
class Table {
public:
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<Cell> row);

    [[nodiscard]] const std::vector<std::string>& header() const noexcept { return header_; }
    [[nodiscard]] const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
    [[nodiscard]] std::string render() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

/// Writes content to a sibling temporary file and renames it into place.
/// Missing parent directories are created. Throws IoError.
void write_atomic(const std::filesystem::path& path, const std::string& content);

inline void write_table(const std::filesystem::path& path, const Table& table) {
    write_atomic(path, table.render());
}

}  // namespace porosplit::csv
