#include "smpkit/preset_file.hpp"

#include "smpkit/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace smpkit {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, const std::string& where) {
    const std::string s = trim(raw);
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty()) {
        throw PresetError(where + ": not a number: '" + s + "'");
    }
    return v;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item, "list"));
    if (out.empty()) throw PresetError("empty number list");
    return out;
}

PresetFile PresetFile::parse(const std::string& text, const std::string& origin) {
    PresetFile f;
    f.origin_ = origin;
    std::stringstream ss(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw PresetError(where + ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty() || value.empty()) throw PresetError(where + ": empty key or value");
        if (!f.values_.emplace(key, value).second) throw PresetError(where + ": duplicate key '" + key + "'");
    }
    return f;
}

PresetFile PresetFile::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw PresetError("cannot open preset file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

const std::string& PresetFile::text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw PresetError(origin_ + ": missing key '" + key + "'");
    return it->second;
}

std::string PresetFile::text_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? text(key) : fallback;
}

double PresetFile::number(const std::string& key) const { return parse_number(text(key), origin_ + ": " + key); }

double PresetFile::number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

std::size_t PresetFile::count(const std::string& key) const {
    const double v = number(key);
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw PresetError(origin_ + ": " + key + " must be a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

std::vector<double> PresetFile::list(const std::string& key) const {
    try {
        return parse_number_list(text(key));
    } catch (const PresetError& e) {
        throw PresetError(origin_ + ": " + key + ": " + e.what());
    }
}

Eigen::VectorXd PresetFile::vector(const std::string& key) const {
    const auto v = list(key);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace smpkit
