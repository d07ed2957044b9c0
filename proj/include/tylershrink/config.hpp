#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace tylershrink {

// Experiment manifests: INI-style sections of key = value pairs, '#' comments.
// Parsed strictly against a per-command schema; unknown sections or keys are
// rejected by name so a typo cannot silently fall back to a default.
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_text(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    // Comma list, e.g. "2, 3"; empty value -> empty list.
    std::vector<double> get_list(const std::string& section, const std::string& key,
                                 const std::vector<double>& fallback) const;
    // "start:step:stop" (inclusive stop, half-step slack) or a comma list.
    std::vector<double> get_grid(const std::string& section, const std::string& key,
                                 const std::vector<double>& fallback) const;

    // Throws SchemaError naming the offending [section] key.
    void validate(const std::map<std::string, std::set<std::string>>& schema) const;

    const std::string& raw_text() const { return raw_text_; }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::string raw_text_;

    const std::string* find(const std::string& section, const std::string& key) const;
};

std::vector<double> parse_double_list(const std::string& text);
std::vector<double> parse_grid(const std::string& text);

}  // namespace tylershrink
