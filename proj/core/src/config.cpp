#include "qbsde/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qbsde/errors.hpp"

namespace qbsde {
namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

[[noreturn]] void fail_line(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& section, const std::string& key,
                    const std::string& value) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(value.c_str(), &end);
    if (errno != 0 || end == value.c_str() || *end != '\0') {
        throw ConfigError("[" + section + "] " + key + ": '" + value + "' is not a number");
    }
    return v;
}

}  // namespace

Config Config::parse(std::istream& in) {
    Config config;
    std::string line, section;
    bool have_section = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line.substr(0, line.find('#')));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') fail_line(line_no, "unterminated section header");
            section = trim(text.substr(1, text.size() - 2));
            if (section.empty()) fail_line(line_no, "empty section name");
            have_section = true;
            config.sections_[section];
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) fail_line(line_no, "expected key = value");
        if (!have_section) fail_line(line_no, "key before any [section] header");
        const std::string key = trim(text.substr(0, eq));
        if (key.empty()) fail_line(line_no, "empty key");
        config.sections_[section][key] = trim(text.substr(eq + 1));
    }
    return config;
}

Config Config::parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    return parse(in);
}

std::string Config::serialize() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [section, entries] : sections_) {
        if (!first) os << '\n';
        first = false;
        os << '[' << section << "]\n";
        for (const auto& [key, value] : entries) {
            os << key << " = " << value << '\n';
        }
    }
    return os.str();
}

void Config::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config '" + path + "'");
    out << serialize();
}

bool Config::has(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    return it != sections_.end() && it->second.contains(key);
}

std::vector<std::string> Config::sections() const {
    std::vector<std::string> out;
    for (const auto& [name, entries] : sections_) {
        (void)entries;
        out.push_back(name);
    }
    return out;
}

std::vector<std::string> Config::keys(const std::string& section) const {
    std::vector<std::string> out;
    const auto it = sections_.find(section);
    if (it == sections_.end()) return out;
    for (const auto& [key, value] : it->second) {
        (void)value;
        out.push_back(key);
    }
    return out;
}

std::string Config::get_string(const std::string& section, const std::string& key) const {
    const auto it = sections_.find(section);
    if (it == sections_.end() || !it->second.contains(key)) {
        throw ConfigError("missing [" + section + "] " + key);
    }
    return it->second.at(key);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
    return has(section, key) ? get_string(section, key) : fallback;
}

double Config::get_double(const std::string& section, const std::string& key) const {
    return parse_double(section, key, get_string(section, key));
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

long Config::get_long(const std::string& section, const std::string& key) const {
    const std::string value = get_string(section, key);
    char* end = nullptr;
    errno = 0;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (errno != 0 || end == value.c_str() || *end != '\0') {
        throw ConfigError("[" + section + "] " + key + ": '" + value + "' is not an integer");
    }
    return v;
}

long Config::get_long(const std::string& section, const std::string& key, long fallback) const {
    return has(section, key) ? get_long(section, key) : fallback;
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string value = get_string(section, key);
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (errno != 0 || end == value.c_str() || *end != '\0') {
        throw ConfigError("[" + section + "] " + key + ": '" + value +
                          "' is not an unsigned integer");
    }
    return static_cast<std::uint64_t>(v);
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string value = get_string(section, key);
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("[" + section + "] " + key + ": '" + value + "' is not a boolean");
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
    std::vector<double> out;
    if (!has(section, key)) return out;
    const std::string value = get_string(section, key);
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        const std::string t = trim(item);
        if (t.empty()) {
            throw ConfigError("[" + section + "] " + key + ": empty list entry");
        }
        out.push_back(parse_double(section, key, t));
    }
    return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
    if (section.empty() || key.empty()) throw ConfigError("section and key must be nonempty");
    sections_[section][key] = value;
}

}  // namespace qbsde
