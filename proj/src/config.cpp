#include "g2pp/config.hpp"

#include <fstream>
#include <istream>

#include "g2pp/csv.hpp"
#include "g2pp/errors.hpp"

namespace g2pp {

Config Config::parse(std::istream& in, const std::string& source) {
    Config config;
    config.source_ = source;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const auto body = csv::trim(std::string_view(line).substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw InputError(source + ":" + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = csv::trim(body.substr(0, eq));
        if (key.empty()) throw InputError(source + ":" + std::to_string(line_no) + ": empty key");
        config.values_[std::string(key)] = std::string(csv::trim(body.substr(eq + 1)));
    }
    return config;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open file: " + path);
    return parse(in, path);
}

std::optional<std::string> Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

double Config::get_real(const std::string& key, double fallback) const {
    const auto v = get(key);
    return v ? csv::parse_real(*v, source_ + ": key '" + key + "'") : fallback;
}

long long Config::get_int(const std::string& key, long long fallback) const {
    const auto v = get(key);
    return v ? csv::parse_int(*v, source_ + ": key '" + key + "'") : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw InputError(source_ + ": key '" + key + "': expected true/false");
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

}  // namespace g2pp
