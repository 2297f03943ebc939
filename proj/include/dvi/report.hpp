#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dvi/errors.hpp"
#include "dvi/fields.hpp"
#include "dvi/grid.hpp"
#include "dvi/mc.hpp"

namespace dvi {

// All numeric output goes through one formatter so reruns are byte-identical.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_value_csv(const std::string& path, const SpaceTimeGrid& grid,
                            const ScalarField& field) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "t,x1";
    if (grid.dim() == 2) out << ",x2";
    out << ",value\n";
    for (std::size_t k = 0; k < grid.n_slices(); ++k) {
        const double* s = field.slice(k);
        for (std::size_t i = 0; i < grid.n_space(); ++i) {
            const auto p = grid.point(i);
            out << format_double(grid.time(k)) << ',' << format_double(p[0]);
            if (grid.dim() == 2) out << ',' << format_double(p[1]);
            out << ',' << format_double(s[i]) << '\n';
        }
    }
    if (!out) throw Error("write failed: " + path);
}

inline void write_mask_csv(const std::string& path, const SpaceTimeGrid& grid,
                           const std::vector<std::uint8_t>& mask) {
    if (mask.size() != grid.n_slices() * grid.n_space()) {
        throw Error("mask size does not match the grid");
    }
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << "t,x1";
    if (grid.dim() == 2) out << ",x2";
    out << ",value\n";
    for (std::size_t k = 0; k < grid.n_slices(); ++k) {
        for (std::size_t i = 0; i < grid.n_space(); ++i) {
            const auto p = grid.point(i);
            out << format_double(grid.time(k)) << ',' << format_double(p[0]);
            if (grid.dim() == 2) out << ',' << format_double(p[1]);
            out << ',' << (mask[k * grid.n_space() + i] ? '1' : '0') << '\n';
        }
    }
    if (!out) throw Error("write failed: " + path);
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw Error("write failed: " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("parse error in " + path + ": " + e.what());
    }
}

inline nlohmann::json check_to_json(const McCheck& c) {
    nlohmann::json j;
    j["name"] = c.name;
    j["estimate"] = c.estimate;
    j["std_error"] = c.std_error;
    j["bound"] = c.bound;
    j["pass"] = c.pass;
    return j;
}

}  // namespace dvi
