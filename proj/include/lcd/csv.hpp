#pragma once

#include <optional>
#include <string>
#include <vector>

namespace lcd {

// Minimal comma-separated table, first row is the header. The file
// formats used here never contain quoted or escaped fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::optional<std::size_t> column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace lcd
