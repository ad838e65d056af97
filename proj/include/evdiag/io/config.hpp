#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "evdiag/errors.hpp"

namespace evdiag::io {

/// Flat `key = value` text. Keys may carry dotted section prefixes
/// (`closure.kind`), `#` starts a comment, and a key may repeat; repeated
/// keys keep their order.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text, const std::string& origin = "config") {
        KeyValueConfig cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
            auto key = trim(line.substr(0, eq));
            auto value = trim(line.substr(eq + 1));
            if (key.empty()) throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
            cfg.entries_.emplace_back(std::move(key), std::move(value));
        }
        return cfg;
    }

    static KeyValueConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.string());
    }

    [[nodiscard]] bool has(const std::string& key) const {
        return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
    }

    /// Last value for `key`.
    [[nodiscard]] std::optional<std::string> get(const std::string& key) const {
        for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
            if (it->first == key) return it->second;
        return std::nullopt;
    }

    [[nodiscard]] std::vector<std::string> get_all(const std::string& key) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries_)
            if (k == key) out.push_back(v);
        return out;
    }

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const {
        return get(key).value_or(fallback);
    }

    [[nodiscard]] double get_double(const std::string& key, double fallback) const {
        const auto v = get(key);
        return v ? to_double(*v, key) : fallback;
    }

    [[nodiscard]] std::optional<double> get_optional_double(const std::string& key) const {
        const auto v = get(key);
        if (!v) return std::nullopt;
        return to_double(*v, key);
    }

    [[nodiscard]] long long get_int(const std::string& key, long long fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        long long out = 0;
        const auto* end = v->data() + v->size();
        auto [p, ec] = std::from_chars(v->data(), end, out);
        if (ec != std::errc() || p != end) throw ValidationError("config: '" + key + "' is not an integer: " + *v);
        return out;
    }

    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const {
        const auto v = get(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes") return true;
        if (*v == "false" || *v == "0" || *v == "no") return false;
        throw ValidationError("config: '" + key + "' is not a boolean: " + *v);
    }

    [[nodiscard]] std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) const {
        const auto v = get(key);
        return v ? parse_double_list(*v, key) : fallback;
    }

    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    static std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
        std::vector<double> out;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(to_double(item, what));
        }
        if (out.empty()) throw ValidationError("config: '" + what + "' is an empty list");
        return out;
    }

    static double to_double(const std::string& s, const std::string& key) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw ValidationError("config: '" + key + "' is not a number: " + s);
        }
        if (used != s.size()) throw ValidationError("config: '" + key + "' is not a number: " + s);
        return v;
    }

private:
    static std::string trim(const std::string& s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return s.substr(b, e - b);
    }

    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace evdiag::io
