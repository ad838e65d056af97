#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "evdiag/errors.hpp"
#include "evdiag/grid.hpp"

namespace evdiag::io {

// EVDG snapshot layout, all little-endian:
//   offset  0  magic "EVDG"
//           4  u32 version (1)
//           8  u32 ndim
//          12  u32 nx, ny, nz
//          24  f64 dx, dy, dz
//          48  f64 time
//          56  u32 field_mask
//          60  payload: masked fields in bit order, each component as
//              nx*ny*nz f64 with x fastest
inline constexpr std::array<unsigned char, 4> kMagic{0x45, 0x56, 0x44, 0x47};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 60;

enum FieldBit : std::uint32_t {
    kVelocity = 1u << 0,
    kNuTurb = 1u << 1,
    kMixingLength = 1u << 2,
    kKPrime = 1u << 3,
    kForcing = 1u << 4,
};
inline constexpr std::uint32_t kKnownBits = 0x1f;

/// Everything one snapshot file can carry.
struct SnapshotFile {
    Grid grid;
    double time = 0.0;
    std::optional<Field> velocity;
    std::optional<Field> nu_turb;
    std::optional<Field> mixing_length;
    std::optional<Field> kprime;
    std::optional<Field> forcing;

    [[nodiscard]] std::uint32_t mask() const {
        std::uint32_t m = 0;
        if (velocity) m |= kVelocity;
        if (nu_turb) m |= kNuTurb;
        if (mixing_length) m |= kMixingLength;
        if (kprime) m |= kKPrime;
        if (forcing) m |= kForcing;
        return m;
    }
};

namespace detail {

inline void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
inline void put_f64(std::vector<unsigned char>& b, double v) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>(u >> (8 * i)));
}
inline std::uint32_t get_u32(const unsigned char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}
inline double get_f64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return std::bit_cast<double>(v);
}

}  // namespace detail

inline std::vector<unsigned char> encode_snapshot(const SnapshotFile& s) {
    s.grid.validate();
    std::vector<unsigned char> b;
    b.insert(b.end(), kMagic.begin(), kMagic.end());
    detail::put_u32(b, kVersion);
    detail::put_u32(b, static_cast<std::uint32_t>(s.grid.ndim));
    for (int a = 0; a < 3; ++a) detail::put_u32(b, static_cast<std::uint32_t>(s.grid.shape[a]));
    for (int a = 0; a < 3; ++a) detail::put_f64(b, s.grid.spacing[a]);
    detail::put_f64(b, s.time);
    detail::put_u32(b, s.mask());
    auto put_field = [&](const std::optional<Field>& f, int rank, const char* name) {
        if (!f) return;
        if (!(f->grid.shape == s.grid.shape) || f->grid.ndim != s.grid.ndim || f->rank != rank)
            throw ValidationError(std::string("write_snapshot: ") + name + " does not match the header grid");
        for (const auto& comp : f->components)
            for (double v : comp) detail::put_f64(b, v);
    };
    put_field(s.velocity, 1, "velocity");
    put_field(s.nu_turb, 0, "nu_turb");
    put_field(s.mixing_length, 0, "l");
    put_field(s.kprime, 0, "kprime");
    put_field(s.forcing, 1, "forcing");
    return b;
}

/// `periodic` supplies the axis flags, which the file format does not carry.
inline SnapshotFile decode_snapshot(const std::vector<unsigned char>& b,
                                    std::array<bool, 3> periodic = {true, true, true}) {
    auto fail = [](std::size_t offset, const std::string& what) -> FormatError {
        return FormatError("snapshot: " + what + " at byte offset " + std::to_string(offset));
    };
    if (b.size() < kHeaderSize)
        throw LengthError("snapshot: truncated header (" + std::to_string(b.size()) + " of " +
                          std::to_string(kHeaderSize) + " bytes)");
    if (!std::equal(kMagic.begin(), kMagic.end(), b.begin())) throw fail(0, "bad magic");
    const auto version = detail::get_u32(&b[4]);
    if (version != kVersion) throw fail(4, "unsupported version " + std::to_string(version));
    const auto ndim = detail::get_u32(&b[8]);
    if (ndim != 2 && ndim != 3) throw fail(8, "ndim must be 2 or 3");
    SnapshotFile s;
    s.grid.ndim = static_cast<int>(ndim);
    for (int a = 0; a < 3; ++a) s.grid.shape[a] = detail::get_u32(&b[12 + 4 * a]);
    for (int a = 0; a < 3; ++a) s.grid.spacing[a] = detail::get_f64(&b[24 + 8 * a]);
    s.grid.periodic = periodic;
    if (ndim == 2 && s.grid.shape[2] != 1) throw fail(20, "nz must be 1 when ndim is 2");
    try {
        s.grid.validate();
    } catch (const ValidationError& e) {
        throw fail(12, e.what());
    }
    s.time = detail::get_f64(&b[48]);
    if (!std::isfinite(s.time)) throw fail(48, "non-finite time");
    const auto mask = detail::get_u32(&b[56]);
    if (mask & ~kKnownBits) throw fail(56, "unknown field_mask bits");

    const std::size_t cells = s.grid.size();
    const std::size_t vec = Field::component_count(s.grid.ndim, 1);
    std::size_t comps = 0;
    if (mask & kVelocity) comps += vec;
    if (mask & kNuTurb) comps += 1;
    if (mask & kMixingLength) comps += 1;
    if (mask & kKPrime) comps += 1;
    if (mask & kForcing) comps += vec;
    const std::size_t expected = kHeaderSize + comps * cells * 8;
    if (b.size() != expected)
        throw LengthError("snapshot: payload length " + std::to_string(b.size() - kHeaderSize) + " bytes, expected " +
                          std::to_string(expected - kHeaderSize));

    std::size_t off = kHeaderSize;
    auto take = [&](std::uint32_t bit, int rank, const char* name) -> std::optional<Field> {
        if (!(mask & bit)) return std::nullopt;
        Field f(s.grid, rank, s.time);
        for (auto& comp : f.components)
            for (double& v : comp) {
                v = detail::get_f64(&b[off]);
                off += 8;
            }
        f.validate(name);
        return f;
    };
    s.velocity = take(kVelocity, 1, "velocity");
    s.nu_turb = take(kNuTurb, 0, "nu_turb");
    s.mixing_length = take(kMixingLength, 0, "l");
    s.kprime = take(kKPrime, 0, "kprime");
    s.forcing = take(kForcing, 1, "forcing");
    return s;
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + path.string());
}

inline SnapshotFile read_snapshot(const std::filesystem::path& path, std::array<bool, 3> periodic = {true, true, true}) {
    return decode_snapshot(read_bytes(path), periodic);
}

inline void write_snapshot(const std::filesystem::path& path, const SnapshotFile& s) {
    write_bytes(path, encode_snapshot(s));
}

}  // namespace evdiag::io
