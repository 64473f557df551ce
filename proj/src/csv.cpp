#include "mlepi/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace mlepi::csv {

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty() && !out.back().empty() && out.back().back() == '\r')
        out.back().pop_back();
    return out;
}

Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) return t;
    t.header = split_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split_line(line));
    }
    return t;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

Writer::Writer(const std::string& path, const std::vector<std::string>& header)
    : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& h : header) field(h);
    end_row();
}

void Writer::sep() {
    if (!first_) out_ << ',';
    first_ = false;
}

void Writer::field(const std::string& v) { sep(); out_ << v; }
void Writer::field(uint64_t v) { sep(); out_ << v; }
void Writer::field(int64_t v) { sep(); out_ << v; }
void Writer::field(double v) { sep(); out_ << format_double(v); }
void Writer::end_row() { out_ << '\n'; first_ = true; }

Writer::~Writer() = default;

} // namespace mlepi::csv
