#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace hlock::cli
{
namespace
{
std::string_view trim(std::string_view s)
{
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

const KeySpec *find_spec(std::string_view key)
{
    for (const auto &s : schema()) {
        if (s.key == key) return &s;
    }
    return nullptr;
}

std::optional<double> prefix_scale(std::string_view unit, std::string_view base)
{
    if (unit == base) return 1.0;
    if (unit.size() != base.size() + 1 || unit.substr(1) != base) return std::nullopt;
    switch (unit[0]) {
    case 'k':
        return 1e3;
    case 'M':
        return 1e6;
    case 'G':
        return 1e9;
    default:
        return std::nullopt;
    }
}

std::optional<double> unit_scale(Kind kind, std::string_view unit)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    switch (kind) {
    case Kind::rate:
        if (auto s = prefix_scale(unit, "Hz")) return *s * two_pi;
        return prefix_scale(unit, "rad/s");
    case Kind::frequency:
        return prefix_scale(unit, "Hz");
    case Kind::time:
        if (unit == "s") return 1.0;
        if (unit == "ms") return 1e-3;
        if (unit == "us") return 1e-6;
        if (unit == "ns") return 1e-9;
        if (unit == "ps") return 1e-12;
        return std::nullopt;
    case Kind::decibel:
        if (unit == "dB") return 1.0;
        return std::nullopt;
    default:
        if (unit.empty()) return 1.0;
        return std::nullopt;
    }
}

std::string_view unit_hint(Kind kind)
{
    switch (kind) {
    case Kind::rate:
        return "Hz/kHz/MHz/GHz or rad/s";
    case Kind::frequency:
        return "Hz/kHz/MHz/GHz";
    case Kind::time:
        return "s/ms/us/ns/ps";
    case Kind::decibel:
        return "dB";
    default:
        return "no unit";
    }
}

[[noreturn]] void fail(std::string_view where, const std::string &what)
{
    throw ConfigError(std::string(where) + ": " + what);
}
}  // namespace

const std::vector<KeySpec> &schema()
{
    static const std::vector<KeySpec> keys = {
        {"run.seed", Kind::integer, {}},

        {"cavity.fsr", Kind::frequency, {}},
        {"cavity.tau", Kind::time, {}},
        {"cavity.kappa_s", Kind::rate, {}},
        {"cavity.kappa_l", Kind::rate, {}},
        {"cavity.chi", Kind::rate, {}},
        {"cavity.kappa", Kind::rate, {}},
        {"cavity.detuning", Kind::rate, {}},

        {"gains.amplification", Kind::decibel, {}},
        {"gains.deamplification", Kind::decibel, {}},
        {"gains.model", Kind::text, {"input_referenced", "unpumped_referenced"}},

        {"detection.efficiency", Kind::number, {}},
        {"detection.detected_squeezing", Kind::decibel, {}},
        {"detection.ideal_squeezing", Kind::decibel, {}},
        {"detection.convention", Kind::text, {"power", "amplitude"}},

        {"sweep.start", Kind::rate, {}},
        {"sweep.stop", Kind::rate, {}},
        {"sweep.points", Kind::integer, {}},
        {"sweep.lo_offset", Kind::rate, {}},
        {"sweep.power_split", Kind::number, {}},
        {"sweep.seed_amplitude", Kind::number, {}},

        {"spectrum.start", Kind::rate, {}},
        {"spectrum.stop", Kind::rate, {}},
        {"spectrum.points", Kind::integer, {}},

        {"lock.seed_amplitude", Kind::number, {}},
        {"lock.noise", Kind::text, {"noiseless", "qnl", "squeezed"}},
        {"lock.initial_offset", Kind::rate, {}},
        {"lock.sine_amplitude", Kind::rate, {}},
        {"lock.sine_frequency", Kind::frequency, {}},
        {"lock.random_walk_diffusion", Kind::number, {}},
        {"lock.duration", Kind::time, {}},
        {"lock.dt", Kind::time, {}},
        {"lock.kp", Kind::number, {}},
        {"lock.ki", Kind::number, {}},
        {"lock.actuator_bandwidth", Kind::rate, {}},
        {"lock.actuator_range", Kind::rate, {}},
        {"lock.trials", Kind::integer, {}},
        {"lock.record_every", Kind::integer, {}},

        {"squeezer.transmittivity", Kind::number, {}},
        {"squeezer.ancilla_squeezing", Kind::decibel, {}},
        {"squeezer.gain", Kind::number, {}},
        {"squeezer.measured", Kind::text, {"plus", "minus"}},
        {"squeezer.input_x_plus", Kind::number, {}},
        {"squeezer.input_x_minus", Kind::number, {}},
        {"squeezer.input_v_plus", Kind::number, {}},
        {"squeezer.input_v_minus", Kind::number, {}},
        {"squeezer.shots", Kind::integer, {}},
    };
    return keys;
}

RunConfig RunConfig::parse(std::string_view source, std::string_view origin)
{
    RunConfig cfg;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= source.size()) {
        const auto nl = source.find('\n', pos);
        std::string_view line = source.substr(pos, nl == std::string_view::npos ? source.npos : nl - pos);
        pos = nl == std::string_view::npos ? source.size() + 1 : nl + 1;
        ++line_no;
        const std::string where = std::string(origin) + ":" + std::to_string(line_no);

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(where, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) fail(where, "empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) fail(where, "expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        if (section.empty()) fail(where, "key '" + std::string(key) + "' outside any [section]");
        cfg.assign(section + "." + std::string(key), trim(line.substr(eq + 1)), where);
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.filename().string());
}

void RunConfig::set(std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("--set expects section.key=value, got '" + std::string(assignment) + "'");
    }
    assign(std::string(trim(assignment.substr(0, eq))), trim(assignment.substr(eq + 1)), "--set");
}

void RunConfig::assign(std::string key, std::string_view raw, std::string_view where)
{
    const KeySpec *spec = find_spec(key);
    if (spec == nullptr) fail(where, "unknown key '" + key + "'");
    if (raw.empty()) fail(where, "missing value for '" + key + "'");

    Value v;
    v.raw = std::string(raw);
    if (spec->kind == Kind::text) {
        if (std::find(spec->choices.begin(), spec->choices.end(), raw) == spec->choices.end()) {
            std::string allowed;
            for (auto c : spec->choices) allowed += (allowed.empty() ? "" : ", ") + std::string(c);
            fail(where, "'" + key + "' must be one of: " + allowed);
        }
        v.text = std::string(raw);
        values_[key] = std::move(v);
        return;
    }

    if (spec->kind == Kind::integer) {
        std::uint64_t n = 0;
        const auto [end, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), n);
        if (ec != std::errc() || end != raw.data() + raw.size()) {
            fail(where, "'" + key + "' needs a non-negative integer, got '" + std::string(raw) + "'");
        }
        v.integer = n;
        v.si = static_cast<double>(n);
        values_[key] = std::move(v);
        return;
    }

    double number = 0.0;
    const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), number);
    if (ec != std::errc() || !std::isfinite(number)) {
        fail(where, "'" + key + "' needs a finite number, got '" + std::string(raw) + "'");
    }
    const std::string_view unit = trim(raw.substr(static_cast<std::size_t>(ptr - raw.data())));
    const auto scale = unit_scale(spec->kind, unit);
    if (!scale) {
        fail(where, "'" + key + "' has unit '" + std::string(unit) + "'; expected " +
                        std::string(unit_hint(spec->kind)));
    }
    v.si = number * *scale;
    v.unit = std::string(unit);
    values_[key] = std::move(v);
}

bool RunConfig::has(std::string_view key) const
{
    return values_.find(key) != values_.end();
}

const Value &RunConfig::at(std::string_view key) const
{
    const auto it = values_.find(key);
    if (it == values_.end()) {
        throw ConfigError("missing required key '" + std::string(key) + "'");
    }
    return it->second;
}

double RunConfig::number(std::string_view key) const
{
    return at(key).si;
}

double RunConfig::number_or(std::string_view key, double fallback) const
{
    return has(key) ? at(key).si : fallback;
}

std::uint64_t RunConfig::integer_or(std::string_view key, std::uint64_t fallback) const
{
    return has(key) ? at(key).integer : fallback;
}

std::string RunConfig::text_or(std::string_view key, std::string_view fallback) const
{
    return has(key) ? at(key).text : std::string(fallback);
}

std::string RunConfig::canonical() const
{
    std::string out;
    for (const auto &[k, v] : values_) {
        out += k + " = " + v.raw + "\n";
    }
    return out;
}

std::uint64_t RunConfig::hash() const
{
    return fnv1a(canonical());
}

std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace hlock::cli
