#include "smpkit/csv.hpp"

#include "smpkit/error.hpp"

namespace smpkit {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary), columns_(header.size()) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    for (const auto& h : header) cell(h);
    end_row();
}

CsvWriter& CsvWriter::cell(const std::string& s) {
    if (filled_ > 0) out_ << ',';
    out_ << s;
    ++filled_;
    return *this;
}

void CsvWriter::end_row() {
    if (filled_ != columns_) {
        throw Error(path_.string() + ": row has " + std::to_string(filled_) + " cells, header has " +
                    std::to_string(columns_));
    }
    out_ << '\n';
    filled_ = 0;
}

}  // namespace smpkit
