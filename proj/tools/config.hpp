#pragma once

// Line-oriented run configuration:
//
//   [cavity]
//   fsr = 199 MHz
//   kappa_s = 4.2 MHz      # Hz-family rates are stored as rad/s
//
// Keys are addressed as "section.key". Every key is declared in a fixed
// schema; unknown keys, missing units and malformed values are rejected.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hlock::cli
{

class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

enum class Kind
{
    rate,       // Hz, kHz, MHz, GHz (times 2 pi) or rad/s, krad/s, Mrad/s, Grad/s
    frequency,  // Hz, kHz, MHz, GHz; kept in Hz
    time,       // s, ms, us, ns, ps
    decibel,    // dB
    number,     // dimensionless
    integer,
    text,       // one of a fixed set of words
};

struct KeySpec
{
    std::string_view key;
    Kind kind;
    std::vector<std::string_view> choices;  // for Kind::text
};

const std::vector<KeySpec> &schema();

struct Value
{
    std::string raw;   // as written, trimmed
    double si = 0.0;   // rad/s, Hz, s, dB or plain number
    std::string unit;  // unit as written ("" if none)
    std::string text;  // for Kind::text
    std::uint64_t integer = 0;
};

class RunConfig
{
public:
    static RunConfig parse(std::string_view source, std::string_view origin = "<config>");
    static RunConfig load(const std::filesystem::path &path);

    // "section.key=value" override; replaces any parsed value.
    void set(std::string_view assignment);

    bool has(std::string_view key) const;
    const Value &at(std::string_view key) const;
    double number(std::string_view key) const;
    double number_or(std::string_view key, double fallback) const;
    std::uint64_t integer_or(std::string_view key, std::uint64_t fallback) const;
    std::string text_or(std::string_view key, std::string_view fallback) const;

    // Sorted "key = raw" lines; identical configs give identical text.
    std::string canonical() const;
    std::uint64_t hash() const;

private:
    void assign(std::string key, std::string_view raw, std::string_view where);

    std::map<std::string, Value, std::less<>> values_;
};

std::uint64_t fnv1a(std::string_view bytes);

}  // namespace hlock::cli
