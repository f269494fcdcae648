#pragma once

// Flat sectioned key=value experiment configuration. Parsing keeps line numbers
// for anchored validation errors; typed getters materialize defaults into the
// map so the emitted resolved config reparses to an equal config.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"

namespace qcldyn {

class Config {
public:
    Config() = default;

    static Config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError(path + ": cannot open config file");
        return parse_stream(in, path);
    }

    static Config parse_string(const std::string& text, const std::string& name = "<string>") {
        std::istringstream in(text);
        return parse_stream(in, name);
    }

    static Config parse_stream(std::istream& in, const std::string& name) {
        Config cfg;
        cfg.origin_ = name;
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string s = line;
            const auto hash = s.find('#');
            if (hash != std::string::npos) s.erase(hash);
            s = trim(s);
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw ConfigError(name + ":" + std::to_string(lineno) +
                                      ": malformed section header");
                section = trim(s.substr(1, s.size() - 2));
                if (section.empty())
                    throw ConfigError(name + ":" + std::to_string(lineno) + ": empty section");
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError(name + ":" + std::to_string(lineno) +
                                  ": expected key = value");
            const std::string key = trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1));
            if (key.empty())
                throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
            if (section.empty())
                throw ConfigError(name + ":" + std::to_string(lineno) +
                                  ": key outside of any [section]");
            cfg.values_[section][key] = value;
            cfg.lines_[section + "." + key] = lineno;
        }
        return cfg;
    }

    bool has(const std::string& section, const std::string& key) const {
        auto s = values_.find(section);
        return s != values_.end() && s->second.count(key) > 0;
    }

    // Getters with defaults; the default is materialized into the map so the
    // resolved config is complete.
    std::string get(const std::string& section, const std::string& key,
                    const std::string& def) const {
        auto& slot = values_[section];
        auto it = slot.find(key);
        if (it == slot.end()) {
            slot[key] = def;
            return def;
        }
        return it->second;
    }

    std::string require(const std::string& section, const std::string& key) const {
        auto s = values_.find(section);
        if (s == values_.end() || !s->second.count(key))
            throw ConfigError(origin_ + ": missing required key " + section + "." + key);
        return s->second.at(key);
    }

    double get_double(const std::string& section, const std::string& key, double def) const {
        return to_double(section, key, get(section, key, format_double(def)));
    }

    long long get_int(const std::string& section, const std::string& key, long long def) const {
        const std::string v = get(section, key, std::to_string(def));
        try {
            size_t pos = 0;
            const long long r = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return r;
        } catch (const std::exception&) {
            throw ConfigError(anchored(section, key) + ": expected integer, got '" + v + "'");
        }
    }

    bool get_bool(const std::string& section, const std::string& key, bool def) const {
        const std::string v = get(section, key, def ? "on" : "off");
        if (v == "on" || v == "true" || v == "1") return true;
        if (v == "off" || v == "false" || v == "0") return false;
        throw ConfigError(anchored(section, key) + ": expected on/off, got '" + v + "'");
    }

    std::vector<double> get_vector(const std::string& section, const std::string& key) const {
        std::istringstream in(require(section, key));
        std::vector<double> out;
        double v;
        while (in >> v) out.push_back(v);
        return out;
    }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        values_[section][key] = value;
    }

    // Canonical serialization (sections and keys sorted).
    std::string serialize() const {
        std::ostringstream out;
        for (const auto& [section, kv] : values_) {
            out << "[" << section << "]\n";
            for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
        }
        return out.str();
    }

    bool operator==(const Config& o) const { return values_ == o.values_; }

    const std::string& origin() const { return origin_; }

    static std::string format_double(double v) {
        char buf[32];
        snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }

    double to_double(const std::string& section, const std::string& key,
                     const std::string& v) const {
        try {
            size_t pos = 0;
            const double r = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return r;
        } catch (const std::exception&) {
            throw ConfigError(anchored(section, key) + ": expected number, got '" + v + "'");
        }
    }

    std::string anchored(const std::string& section, const std::string& key) const {
        const std::string id = section + "." + key;
        auto it = lines_.find(id);
        if (it != lines_.end())
            return origin_ + ":" + std::to_string(it->second) + ": " + id;
        return origin_ + ": " + id;
    }

    mutable std::map<std::string, std::map<std::string, std::string>> values_;
    std::map<std::string, int> lines_;
    std::string origin_ = "<none>";
};

}  // namespace qcldyn
