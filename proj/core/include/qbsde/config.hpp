#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace qbsde {

// key = value settings grouped under [section] headers. '#' starts a comment,
// blank lines are ignored, keys must follow a section header. Parsing errors
// carry the line number; serialize() is canonical (sections and keys sorted,
// one blank line between sections) and round-trips exactly through parse().
class Config {
  public:
    static Config parse(std::istream& in);
    static Config parse_string(const std::string& text);
    static Config load(const std::string& path);  // ConfigError when unreadable

    std::string serialize() const;
    void save(const std::string& path) const;

    bool has(const std::string& section, const std::string& key) const;
    std::vector<std::string> sections() const;
    std::vector<std::string> keys(const std::string& section) const;

    // Typed accessors; the no-fallback forms throw ConfigError when the key is
    // missing, every form throws when the value does not parse as the type.
    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_long(const std::string& section, const std::string& key) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key,
                          std::uint64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    // Comma-separated list of numbers; missing key gives an empty list.
    std::vector<double> get_double_list(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    bool operator==(const Config&) const = default;

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace qbsde
