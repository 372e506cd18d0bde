#pragma once

// Field files hold real samples on a TorusGrid.
//
// Binary (.bin), little-endian:
//   uint64 dim
//   uint64 points, repeated dim times (all equal)
//   float64 samples[points^dim], row-major, last axis fastest
//
// JSON (.json):
//   {"dim": N, "points_per_dim": P, "samples": nested arrays of depth N}

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "subdiff/errors.hpp"
#include "subdiff/torus_spectral.hpp"

namespace subdiff::io {

static_assert(std::endian::native == std::endian::little, "field files assume a little-endian host");

struct FieldSamples {
    TorusGrid grid;
    std::vector<double> samples;
};

enum class FieldFormat { binary, json };

inline FieldFormat format_for(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".bin") return FieldFormat::binary;
    if (ext == ".json") return FieldFormat::json;
    throw ConfigError("field file '" + path.string() + "' must end in .bin or .json");
}

namespace detail {

inline void check_shape(const FieldSamples& f) {
    f.grid.validate();
    if (f.samples.size() != f.grid.size())
        throw ShapeError("field has " + std::to_string(f.samples.size()) + " samples, grid needs " +
                         std::to_string(f.grid.size()));
}

inline nlohmann::json nest(const std::vector<double>& s, std::size_t dim, std::size_t p, std::size_t offset,
                           std::size_t level) {
    nlohmann::json arr = nlohmann::json::array();
    if (level + 1 == dim) {
        for (std::size_t i = 0; i < p; ++i) arr.push_back(s[offset + i]);
        return arr;
    }
    std::size_t block = 1;
    for (std::size_t d = level + 1; d < dim; ++d) block *= p;
    for (std::size_t i = 0; i < p; ++i) arr.push_back(nest(s, dim, p, offset + i * block, level + 1));
    return arr;
}

inline void flatten(const nlohmann::json& j, std::size_t dim, std::size_t p, std::size_t level,
                    std::vector<double>& out) {
    if (!j.is_array() || j.size() != p)
        throw IOError("field JSON: samples at depth " + std::to_string(level) + " must be an array of length " +
                      std::to_string(p));
    for (const auto& v : j) {
        if (level + 1 == dim) {
            if (!v.is_number()) throw IOError("field JSON: non-numeric sample");
            out.push_back(v.get<double>());
        } else {
            flatten(v, dim, p, level + 1, out);
        }
    }
}

} // namespace detail

inline void write_binary(const std::filesystem::path& path, const FieldSamples& f) {
    detail::check_shape(f);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IOError("cannot open '" + path.string() + "' for writing");
    const std::uint64_t dim = f.grid.dim;
    const std::uint64_t p = f.grid.points;
    out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    for (std::uint64_t d = 0; d < dim; ++d) out.write(reinterpret_cast<const char*>(&p), sizeof p);
    out.write(reinterpret_cast<const char*>(f.samples.data()),
              static_cast<std::streamsize>(f.samples.size() * sizeof(double)));
    if (!out) throw IOError("write to '" + path.string() + "' failed");
}

inline FieldSamples read_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IOError("cannot open '" + path.string() + "'");
    std::uint64_t dim = 0;
    if (!in.read(reinterpret_cast<char*>(&dim), sizeof dim)) throw IOError("'" + path.string() + "': truncated header");
    if (dim < 1 || dim > 16) throw IOError("'" + path.string() + "': implausible dimension " + std::to_string(dim));
    std::vector<std::uint64_t> points(dim);
    if (!in.read(reinterpret_cast<char*>(points.data()), static_cast<std::streamsize>(dim * sizeof(std::uint64_t))))
        throw IOError("'" + path.string() + "': truncated header");
    for (const auto p : points)
        if (p != points[0]) throw IOError("'" + path.string() + "': grids must have equal points per axis");
    FieldSamples f;
    try {
        f.grid = TorusGrid{static_cast<std::size_t>(dim), static_cast<std::size_t>(points[0])};
    } catch (const ShapeError& e) {
        throw IOError("'" + path.string() + "': " + e.what());
    }
    f.samples.resize(f.grid.size());
    if (!in.read(reinterpret_cast<char*>(f.samples.data()),
                 static_cast<std::streamsize>(f.samples.size() * sizeof(double))))
        throw IOError("'" + path.string() + "': truncated payload");
    if (in.peek() != std::char_traits<char>::eof()) throw IOError("'" + path.string() + "': trailing bytes");
    return f;
}

inline nlohmann::json to_json(const FieldSamples& f) {
    detail::check_shape(f);
    return {{"dim", f.grid.dim},
            {"points_per_dim", f.grid.points},
            {"samples", detail::nest(f.samples, f.grid.dim, f.grid.points, 0, 0)}};
}

inline FieldSamples from_json(const nlohmann::json& j) {
    try {
        FieldSamples f;
        f.grid = TorusGrid{j.at("dim").get<std::size_t>(), j.at("points_per_dim").get<std::size_t>()};
        f.samples.reserve(f.grid.size());
        detail::flatten(j.at("samples"), f.grid.dim, f.grid.points, 0, f.samples);
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw IOError(std::string("field JSON: ") + e.what());
    } catch (const ShapeError& e) {
        throw IOError(std::string("field JSON: ") + e.what());
    }
}

inline void write_field(const std::filesystem::path& path, const FieldSamples& f) {
    if (format_for(path) == FieldFormat::binary) return write_binary(path, f);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IOError("cannot open '" + path.string() + "' for writing");
    out << to_json(f).dump() << '\n';
    if (!out) throw IOError("write to '" + path.string() + "' failed");
}

inline FieldSamples read_field(const std::filesystem::path& path) {
    if (format_for(path) == FieldFormat::binary) return read_binary(path);
    std::ifstream in(path);
    if (!in) throw IOError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IOError("'" + path.string() + "': " + e.what());
    }
    return from_json(j);
}

} // namespace subdiff::io
