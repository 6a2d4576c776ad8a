#pragma once

#include "das/common.hpp"
#include "das/waterfall.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>

namespace das::io {

enum class IoErrorKind {
    Open,
    BadMagic,
    VersionMismatch,
    Truncated,
    BadHeader,
    Format,
};

/// File-level failure; `kind()` distinguishes the cause.
class IoError : public Error {
public:
    IoError(IoErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
    IoErrorKind kind() const { return kind_; }

private:
    IoErrorKind kind_;
};

inline constexpr char kWaterfallMagic[4] = {'D', 'A', 'S', 'W'};
inline constexpr std::uint16_t kWaterfallVersion = 1;
/// magic(4) + version(2) + n_channels(4) + n_time(4) + spacing(8) + rate(8) + flag(1)
inline constexpr std::size_t kWaterfallHeaderBytes = 31;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

// Little-endian primitives shared by the binary formats.
void put_u8(std::string& buf, std::uint8_t v);
void put_u16(std::string& buf, std::uint16_t v);
void put_u32(std::string& buf, std::uint32_t v);
void put_f32(std::string& buf, float v);
void put_f64(std::string& buf, double v);

/// Sequential little-endian reader over an in-memory byte buffer; throws
/// IoError(Truncated) when a read runs past the end.
class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    float f32();
    double f64();
    std::string_view raw(std::size_t n);
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

std::string encode_waterfall(const Waterfall& w);
Waterfall decode_waterfall(std::string_view bytes);

void write_waterfall(const Waterfall& w, const std::filesystem::path& path);
Waterfall read_waterfall(const std::filesystem::path& path);

/// Binary PGM (P5, maxval 255); pixel = floor(255 * v^gamma + 0.5).
std::string encode_pgm(const Waterfall& w, double gamma);
void render_pgm(const Waterfall& w, const std::filesystem::path& path, double gamma);

/// One row per channel, comma-separated.
void write_csv(const Waterfall& w, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temporary file and renames it into place, so the
/// target either keeps its old content or holds the complete new content.
void write_atomic(const std::filesystem::path& path, std::string_view bytes);
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer);

} // namespace das::io
