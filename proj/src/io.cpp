#include "das/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

namespace das::io {

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, res.ptr};
}

double parse_double(std::string_view text)
{
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (text == "inf" || text == "+inf") return HUGE_VAL;
    if (text == "-inf") return -HUGE_VAL;
    if (text == "nan") return std::nan("");
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw IoError(IoErrorKind::Format, "not a number: '" + std::string(text) + "'");
    return v;
}

void put_u8(std::string& buf, std::uint8_t v) { buf.push_back(static_cast<char>(v)); }

void put_u16(std::string& buf, std::uint16_t v)
{
    for (int i = 0; i < 2; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& buf, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& buf, float v) { put_u32(buf, std::bit_cast<std::uint32_t>(v)); }

void put_f64(std::string& buf, double v)
{
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

std::string_view ByteReader::raw(std::size_t n)
{
    if (remaining() < n) throw IoError(IoErrorKind::Truncated, "unexpected end of data");
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(raw(1)[0]); }

std::uint16_t ByteReader::u16()
{
    auto b = raw(2);
    return static_cast<std::uint16_t>(static_cast<std::uint8_t>(b[0])
                                      | (static_cast<std::uint8_t>(b[1]) << 8));
}

std::uint32_t ByteReader::u32()
{
    auto b = raw(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
    return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

double ByteReader::f64()
{
    auto b = raw(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(b[static_cast<std::size_t>(i)]);
    return std::bit_cast<double>(v);
}

std::string encode_waterfall(const Waterfall& w)
{
    if (w.n_channels() == 0 || w.n_time() == 0)
        throw IoError(IoErrorKind::BadHeader, "waterfall dimensions must be nonzero");
    std::string buf;
    buf.reserve(kWaterfallHeaderBytes + 4 * w.size());
    buf.append(kWaterfallMagic, 4);
    put_u16(buf, kWaterfallVersion);
    put_u32(buf, static_cast<std::uint32_t>(w.n_channels()));
    put_u32(buf, static_cast<std::uint32_t>(w.n_time()));
    put_f64(buf, w.channel_spacing);
    put_f64(buf, w.sample_rate);
    put_u8(buf, w.normalized ? 1 : 0);
    for (double v : w.values()) put_f32(buf, static_cast<float>(v));
    return buf;
}

Waterfall decode_waterfall(std::string_view bytes)
{
    ByteReader in(bytes);
    if (bytes.size() < 4) throw IoError(IoErrorKind::Truncated, "file shorter than the magic");
    if (std::memcmp(in.raw(4).data(), kWaterfallMagic, 4) != 0)
        throw IoError(IoErrorKind::BadMagic, "not a DASW waterfall file (bad magic)");
    if (bytes.size() < kWaterfallHeaderBytes)
        throw IoError(IoErrorKind::Truncated, "truncated waterfall header");
    const auto version = in.u16();
    if (version != kWaterfallVersion)
        throw IoError(IoErrorKind::VersionMismatch,
                      "unsupported waterfall format version " + std::to_string(version));
    const std::uint32_t n_channels = in.u32();
    const std::uint32_t n_time = in.u32();
    const double spacing = in.f64();
    const double rate = in.f64();
    const std::uint8_t flag = in.u8();
    if (n_channels == 0 || n_time == 0)
        throw IoError(IoErrorKind::BadHeader, "waterfall header has a zero dimension");
    if (flag > 1) throw IoError(IoErrorKind::BadHeader, "invalid normalized flag");
    const std::uint64_t payload = std::uint64_t{n_channels} * n_time * 4;
    if (in.remaining() < payload)
        throw IoError(IoErrorKind::Truncated, "truncated waterfall payload");
    if (in.remaining() > payload)
        throw IoError(IoErrorKind::Format, "trailing bytes after waterfall payload");
    Waterfall w(n_channels, n_time, spacing, rate);
    w.normalized = flag == 1;
    for (double& v : w.values()) v = static_cast<double>(in.f32());
    return w;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(IoErrorKind::Open, "cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_atomic(const std::filesystem::path& path, std::string_view bytes)
{
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError(IoErrorKind::Open, "cannot write " + tmp.string());
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        os.flush();
        if (!os) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw IoError(IoErrorKind::Open, "write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError(IoErrorKind::Open, "cannot move output into place: " + path.string());
    }
}

void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer)
{
    std::ostringstream os;
    writer(os);
    write_atomic(path, os.str());
}

void write_waterfall(const Waterfall& w, const std::filesystem::path& path)
{
    write_atomic(path, encode_waterfall(w));
}

Waterfall read_waterfall(const std::filesystem::path& path)
{
    const std::string bytes = read_file(path);
    try {
        return decode_waterfall(bytes);
    } catch (const IoError& e) {
        throw IoError(e.kind(), path.string() + ": " + e.what());
    }
}

std::string encode_pgm(const Waterfall& w, double gamma)
{
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    for (double v : w.values())
        if (!(v >= 0.0 && v <= 1.0))
            throw ConfigError("render requires a waterfall normalized to [0, 1]");
    std::string out = "P5\n" + std::to_string(w.n_time()) + " " + std::to_string(w.n_channels())
                      + "\n255\n";
    out.reserve(out.size() + w.size());
    for (double v : w.values()) {
        const double level = std::floor(255.0 * std::pow(v, gamma) + 0.5);
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(level, 0.0, 255.0))));
    }
    return out;
}

void render_pgm(const Waterfall& w, const std::filesystem::path& path, double gamma)
{
    write_atomic(path, encode_pgm(w, gamma));
}

void write_csv(const Waterfall& w, const std::filesystem::path& path)
{
    write_atomic(path, [&](std::ostream& os) {
        for (std::size_t c = 0; c < w.n_channels(); ++c) {
            const auto row = w.channel_row(c);
            for (std::size_t t = 0; t < row.size(); ++t) {
                if (t) os << ',';
                os << format_double(row[t]);
            }
            os << '\n';
        }
    });
}

} // namespace das::io
