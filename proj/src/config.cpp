#include "mlepi/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mlepi {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

Config parse(std::istream& in, const std::string& origin) {
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected 'section.key = value', got '" + t + "'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty() || key.find('.') == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": key must be of the form section.key, got '" + key + "'");
        cfg.set(key, value);
    }
    return cfg;
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse(in, path);
}

Config Config::from_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in, "<string>");
}

void Config::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

void Config::apply_override(const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override must be section.key=value, got '" + assignment + "'");
    std::string key = trim(assignment.substr(0, eq));
    if (key.find('.') == std::string::npos)
        throw ConfigError("override key must be section.key, got '" + key + "'");
    set(key, trim(assignment.substr(eq + 1)));
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_str(const std::string& key, const std::string& def) const {
    auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
}

double Config::get_double(const std::string& key, double def) const {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
        std::size_t pos;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: '" + it->second + "'");
    }
}

int64_t Config::get_int(const std::string& key, int64_t def) const {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
        std::size_t pos;
        int64_t v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an integer: '" + it->second + "'");
    }
}

uint64_t Config::get_u64(const std::string& key, uint64_t def) const {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
        std::size_t pos;
        uint64_t v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an unsigned integer: '" +
                          it->second + "'");
    }
}

uint64_t Config::hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const std::string& s) {
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        h ^= 0x1f;
        h *= 0x100000001b3ULL;
    };
    for (const auto& [k, v] : values_) {
        mix(k);
        mix(v);
    }
    return h;
}

} // namespace mlepi
