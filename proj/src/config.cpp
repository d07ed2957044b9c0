#include "tylershrink/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tylershrink/errors.hpp"

namespace tylershrink {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double to_double(const std::string& section, const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw SchemaError("[" + section + "] " + key + ": not a number: '" + v + "'");
    }
}

}  // namespace

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::vector<double> parse_grid(const std::string& text) {
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) return parse_double_list(text);
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos) throw SchemaError("grid must be start:step:stop or a list");
    const double start = std::stod(trim(text.substr(0, c1)));
    const double step = std::stod(trim(text.substr(c1 + 1, c2 - c1 - 1)));
    const double stop = std::stod(trim(text.substr(c2 + 1)));
    if (!(step > 0.0)) throw SchemaError("grid step must be positive");
    // index-based so rounding drift cannot push a point past the stop value
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1.5));
    std::vector<double> out;
    for (std::size_t k = 0; k < count; ++k)
        out.push_back(std::min(start + double(k) * step, stop));
    return out;
}

ConfigFile ConfigFile::parse_text(const std::string& text) {
    ConfigFile cfg;
    cfg.raw_text_ = text;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw SchemaError("line " + std::to_string(line_no) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            cfg.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw SchemaError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw SchemaError("line " + std::to_string(line_no) + ": empty key");
        cfg.sections_[section][key] = value;
    }
    return cfg;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

const std::string* ConfigFile::find(const std::string& section, const std::string& key) const {
    const auto sec = sections_.find(section);
    if (sec == sections_.end()) return nullptr;
    const auto it = sec->second.find(key);
    return it == sec->second.end() ? nullptr : &it->second;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    const std::string* v = find(section, key);
    return v ? *v : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    const std::string* v = find(section, key);
    return v ? to_double(section, key, *v) : fallback;
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int fallback) const {
    const std::string* v = find(section, key);
    if (!v) return fallback;
    const double x = to_double(section, key, *v);
    if (x != std::floor(x))
        throw SchemaError("[" + section + "] " + key + ": expected an integer");
    return static_cast<int>(x);
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
    const std::string* v = find(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw SchemaError("[" + section + "] " + key + ": expected a boolean");
}

std::vector<double> ConfigFile::get_list(const std::string& section, const std::string& key,
                                         const std::vector<double>& fallback) const {
    const std::string* v = find(section, key);
    if (!v) return fallback;
    try {
        return parse_double_list(*v);
    } catch (const std::exception&) {
        throw SchemaError("[" + section + "] " + key + ": malformed number list");
    }
}

std::vector<double> ConfigFile::get_grid(const std::string& section, const std::string& key,
                                         const std::vector<double>& fallback) const {
    const std::string* v = find(section, key);
    if (!v) return fallback;
    try {
        return parse_grid(*v);
    } catch (const SchemaError&) {
        throw;
    } catch (const std::exception&) {
        throw SchemaError("[" + section + "] " + key + ": malformed grid");
    }
}

void ConfigFile::validate(const std::map<std::string, std::set<std::string>>& schema) const {
    for (const auto& [section, keys] : sections_) {
        const auto allowed = schema.find(section);
        if (allowed == schema.end())
            throw SchemaError("unknown section [" + section + "]");
        for (const auto& [key, value] : keys)
            if (!allowed->second.count(key))
                throw SchemaError("unknown key [" + section + "] " + key);
    }
}

}  // namespace tylershrink
