#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hlock::cli
{

inline constexpr const char *kVersion = "0.1.0";

struct Column
{
    std::string name;
    std::vector<double> values;
};

struct Provenance
{
    std::string command;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> notes;  // extra "# ..." lines
};

// %.12e, so identical doubles always give identical bytes.
std::string format_number(double x);

std::string render_csv(const Provenance &prov, const std::vector<Column> &columns);
void write_text(const std::filesystem::path &path, const std::string &content);

struct Series
{
    std::string name;
    const std::vector<double> *y = nullptr;
};

// Minimal static line plot.
std::string render_svg(const std::string &title, const std::string &x_label,
                       const std::vector<double> &x, const std::vector<Series> &series);

}  // namespace hlock::cli
