#pragma once

// Binary kernel files.
//
// Layout, all little-endian:
//   0  char[4]  magic "UGWK"
//   4  u32      version (1)
//   8  u32      dim
//  12  u32      grid points per axis
//  16  f64      half_width
//  24  u32      flags (bit 0: decay envelope present)
//  28  u32      reserved, 0
//  32  f64      decay C   (0 when absent)
//  40  f64      decay beta (0 when absent)
//  48  complex128[n*n] kernel entries, row-major, (re, im) pairs

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ugwb/errors.hpp"
#include "ugwb/kernel_projection.hpp"

namespace ugwb {

inline constexpr std::array<char, 4> kKernelMagic{'U', 'G', 'W', 'K'};
inline constexpr std::uint32_t kKernelVersion = 1;
inline constexpr std::size_t kKernelHeaderBytes = 48;

namespace detail {

template <class T>
void put_le(std::vector<unsigned char>& buf, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t b = 0; b < sizeof(U); ++b) buf.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xFFu));
}

template <class T>
T get_le(const unsigned char* p) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U bits = 0;
    for (std::size_t b = 0; b < sizeof(U); ++b) bits |= static_cast<U>(p[b]) << (8 * b);
    return std::bit_cast<T>(bits);
}

}  // namespace detail

/// Serializes a projection to the in-memory file image.
inline std::vector<unsigned char> encode_kernel(const KernelProjection& p) {
    const auto& g = p.grid();
    const auto n = static_cast<Eigen::Index>(p.size());
    std::vector<unsigned char> buf;
    buf.reserve(kKernelHeaderBytes + static_cast<std::size_t>(n * n) * 16);
    buf.insert(buf.end(), kKernelMagic.begin(), kKernelMagic.end());
    detail::put_le<std::uint32_t>(buf, kKernelVersion);
    detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.dim()));
    detail::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(g.points_per_axis()));
    detail::put_le<double>(buf, g.half_width());
    const auto& d = p.decay();
    detail::put_le<std::uint32_t>(buf, d ? 1u : 0u);
    detail::put_le<std::uint32_t>(buf, 0u);
    detail::put_le<double>(buf, d ? d->c : 0.0);
    detail::put_le<double>(buf, d ? d->beta : 0.0);
    const auto& k = p.kernel();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            detail::put_le<double>(buf, k(i, j).real());
            detail::put_le<double>(buf, k(i, j).imag());
        }
    }
    return buf;
}

inline KernelProjection decode_kernel(const std::vector<unsigned char>& buf) {
    if (buf.size() < kKernelHeaderBytes) throw KernelFormatError("kernel file: truncated header");
    if (std::memcmp(buf.data(), kKernelMagic.data(), 4) != 0) throw KernelFormatError("kernel file: bad magic");
    const auto* p = buf.data();
    const auto version = detail::get_le<std::uint32_t>(p + 4);
    if (version != kKernelVersion) throw KernelFormatError("kernel file: unsupported version " + std::to_string(version));
    const auto dim = detail::get_le<std::uint32_t>(p + 8);
    const auto ppa = detail::get_le<std::uint32_t>(p + 12);
    const double half_width = detail::get_le<double>(p + 16);
    const auto flags = detail::get_le<std::uint32_t>(p + 24);
    const double dc = detail::get_le<double>(p + 32);
    const double dbeta = detail::get_le<double>(p + 40);
    GridSpec grid;
    try {
        grid = GridSpec(static_cast<int>(dim), half_width, static_cast<int>(ppa));
    } catch (const std::invalid_argument& e) {
        throw KernelFormatError(std::string("kernel file: ") + e.what());
    }
    const auto n = static_cast<Eigen::Index>(grid.total_points());
    const std::size_t expected = kKernelHeaderBytes + static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * 16;
    if (buf.size() != expected) {
        throw KernelFormatError("kernel file: expected " + std::to_string(expected) + " bytes, found " +
                                std::to_string(buf.size()));
    }
    Eigen::MatrixXcd k(n, n);
    const unsigned char* data = p + kKernelHeaderBytes;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double re = detail::get_le<double>(data);
            const double im = detail::get_le<double>(data + 8);
            k(i, j) = cplx(re, im);
            data += 16;
        }
    }
    std::optional<DecayEnvelope> decay;
    if (flags & 1u) decay = DecayEnvelope{dc, dbeta};
    return KernelProjection(std::move(k), grid, decay);
}

/// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open " + tmp.string() + " for writing");
        os.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!os) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_kernel_file(const std::filesystem::path& path, const KernelProjection& p) {
    const auto buf = encode_kernel(p);
    write_file_atomic(path, buf.data(), buf.size());
}

inline KernelProjection read_kernel_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw KernelFormatError("cannot open kernel file " + path.string());
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return decode_kernel(buf);
}

}  // namespace ugwb
