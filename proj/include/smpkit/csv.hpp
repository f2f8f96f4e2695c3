#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace smpkit {

/// Shortest text that round-trips a double: 17 significant digits.
std::string format_number(double v);

/// Comma-separated file with a one-line header. Cells are written verbatim;
/// numbers go through format_number.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& cell(const std::string& s);
    CsvWriter& cell(const char* s) { return cell(std::string(s)); }
    CsvWriter& cell(double v) { return cell(format_number(v)); }
    CsvWriter& cell(std::size_t v) { return cell(std::to_string(v)); }
    CsvWriter& cell(bool v) { return cell(v ? "true" : "false"); }
    /// Terminates the current row; throws if the cell count differs from the header.
    void end_row();

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_;
    std::size_t filled_ = 0;
};

}  // namespace smpkit
