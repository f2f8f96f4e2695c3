#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace smpkit {

/// Line-oriented `key = value` file. Blank lines and lines starting with `#`
/// are ignored; values are decimal floats, bare words, or comma lists of
/// floats. Keys are unique.
class PresetFile {
public:
    static PresetFile parse(const std::string& text, const std::string& origin = "<string>");
    static PresetFile read(const std::filesystem::path& path);

    const std::string& origin() const noexcept { return origin_; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& text(const std::string& key) const;
    std::string text_or(const std::string& key, const std::string& fallback) const;
    double number(const std::string& key) const;
    double number_or(const std::string& key, double fallback) const;
    std::size_t count(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;
    Eigen::VectorXd vector(const std::string& key) const;
    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

private:
    std::string origin_;
    std::map<std::string, std::string> values_;
};

/// Numbers separated by commas, e.g. "0.2, 0.1, 0.05".
std::vector<double> parse_number_list(const std::string& text);

}  // namespace smpkit
