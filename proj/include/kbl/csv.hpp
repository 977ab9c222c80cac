#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace kbl {

// Shortest round-trippable decimal (17 significant digits), C locale.
std::string csv_num(double v);
std::string csv_num(long long v);
std::string csv_num(int v);

// Plain comma-separated writer.  Numbers must already be formatted (use
// csv_num) so every byte of output is deterministic.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& fields);
    ~CsvWriter();

private:
    std::ofstream out_;
    size_t width_;
};

} // namespace kbl
