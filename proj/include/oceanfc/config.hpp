#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace oceanfc {

struct ConfigKey {
    std::string name;
    std::string default_value;
    std::string help;
};

/// Every accepted configuration key, in echo order.
const std::vector<ConfigKey>& config_registry();

/// Effective run configuration: registry defaults, then file, then flags.
/// Unknown keys and malformed values raise ConfigError.
class RunConfig {
public:
    RunConfig();

    void set(const std::string& key, const std::string& value);
    /// `key = value` lines; blank lines and `#` comments ignored.
    void load_file(const std::filesystem::path& path);

    bool has(const std::string& key) const;  // non-empty value
    const std::string& get(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::int64_t> get_ints(const std::string& key) const;

    /// Writes every key in registry order as `key = value`.
    void write(const std::filesystem::path& path) const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace oceanfc
