#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "physiopref/errors.hpp"

namespace physio {

// Layered key-value configuration: INI-style file ([section] + key = value,
// '#' comments) overridden by CLI flags. Keys are addressed as
// "section.key"; unknown keys are rejected at parse time with their path.
// Every resolved lookup is recorded so a manifest can snapshot the exact
// effective configuration.
class Config {
public:
    Config() = default;

    void load_file(const std::string& path);
    void set(const std::string& key, const std::string& value);  // flag override
    bool contains(const std::string& key) const;

    std::string get_str(const std::string& key, const std::string& def) const;
    std::int64_t get_int(const std::string& key, std::int64_t def) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
    double get_dbl(const std::string& key, double def) const;
    bool get_bool(const std::string& key, bool def) const;
    std::optional<std::string> get_opt(const std::string& key) const;
    std::optional<double> get_opt_dbl(const std::string& key) const;
    std::optional<std::int64_t> get_opt_int(const std::string& key) const;

    // Every key resolved so far with its effective value.
    const std::map<std::string, std::string>& snapshot() const { return snapshot_; }

    static const std::vector<std::string>& known_keys();

private:
    std::string fetch(const std::string& key) const;
    void check_known(const std::string& key, const std::string& origin) const;

    std::map<std::string, std::string> values_;
    mutable std::map<std::string, std::string> snapshot_;
};

}  // namespace physio
