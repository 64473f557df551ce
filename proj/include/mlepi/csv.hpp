#pragma once
// Minimal CSV helpers for the pipeline's flat artifact files. No quoting:
// every file we read or write holds numeric fields and bare identifiers.
#include <fstream>
#include <string>
#include <vector>

namespace mlepi::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const; // -1 when absent
};

Table read(const std::string& path);

std::vector<std::string> split_line(const std::string& line, char sep = ',');

// Fixed 'double' formatting shared by all writers so artifacts are
// byte-stable across runs: shortest round-trip representation.
std::string format_double(double v);

class Writer {
public:
    Writer(const std::string& path, const std::vector<std::string>& header);
    void field(const std::string& v);
    void field(uint64_t v);
    void field(int64_t v);
    void field(double v);
    void end_row();
    ~Writer();

private:
    std::ofstream out_;
    bool first_ = true;
    void sep();
};

} // namespace mlepi::csv
