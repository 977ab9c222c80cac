#include <kbl/csv.hpp>
#include <kbl/errors.hpp>

#include <cstdio>

namespace kbl {

std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_num(long long v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%lld", v);
    return buf;
}

std::string csv_num(int v) { return csv_num(static_cast<long long>(v)); }

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), width_(header.size()) {
    if (!out_) throw config_error("csv: cannot open '" + path + "' for writing");
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    if (fields.size() != width_) throw config_error("csv: row width mismatch");
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << fields[i];
    }
    out_ << '\n';
}

CsvWriter::~CsvWriter() = default;

} // namespace kbl
