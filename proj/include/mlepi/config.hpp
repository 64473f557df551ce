#pragma once
// Flat "section.key = value" config files. Lines starting with '#' are
// comments. Errors carry the line number.
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlepi {

class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    void set(const std::string& key, const std::string& value);
    // "section.key=value" override, as given on the command line
    void apply_override(const std::string& assignment);

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& def) const;
    double get_double(const std::string& key, double def) const;
    int64_t get_int(const std::string& key, int64_t def) const;
    uint64_t get_u64(const std::string& key, uint64_t def) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

    // stable content hash over sorted key=value pairs
    uint64_t hash() const;

private:
    std::map<std::string, std::string> values_;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace mlepi
