#include "das/hdlnet/checkpoint.hpp"

#include "das/io.hpp"

#include <cstring>

namespace das::hdl {

using io::IoError;
using io::IoErrorKind;

std::string encode_checkpoint(const NetConfig& c, const ModelParams& params)
{
    const HdlNet net(c);
    if (!net.compatible(params)) throw ConfigError("parameters do not match the net config");
    std::string buf(kCheckpointMagic, 4);
    io::put_u16(buf, kCheckpointVersion);
    for (std::size_t v : {c.input_channels, c.input_time, c.base_channels, c.depth, c.conv_h,
                          c.conv_w, c.pool_h, c.pool_w, c.lstm_units, c.dense_width})
        io::put_u32(buf, static_cast<std::uint32_t>(v));
    io::put_u8(buf, static_cast<std::uint8_t>(c.lstm_axis));
    io::put_u32(buf, static_cast<std::uint32_t>(params.size()));
    for (const auto& t : params) {
        io::put_u16(buf, static_cast<std::uint16_t>(t.name.size()));
        buf += t.name;
        io::put_u8(buf, static_cast<std::uint8_t>(t.value.rank()));
        for (std::size_t d : t.value.shape()) io::put_u32(buf, static_cast<std::uint32_t>(d));
        for (double v : t.value.span()) io::put_f32(buf, static_cast<float>(v));
    }
    return buf;
}

Checkpoint decode_checkpoint(std::string_view bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kCheckpointMagic, 4) != 0)
        throw IoError(IoErrorKind::BadMagic, "not a checkpoint file (bad magic)");
    io::ByteReader r(bytes.substr(4));
    const std::uint16_t version = r.u16();
    if (version != kCheckpointVersion)
        throw IoError(IoErrorKind::VersionMismatch,
                      "unsupported checkpoint version " + std::to_string(version));
    Checkpoint ck;
    NetConfig& c = ck.config;
    for (std::size_t* f : {&c.input_channels, &c.input_time, &c.base_channels, &c.depth, &c.conv_h,
                           &c.conv_w, &c.pool_h, &c.pool_w, &c.lstm_units, &c.dense_width})
        *f = r.u32();
    const std::uint8_t axis = r.u8();
    if (axis > 1) throw IoError(IoErrorKind::BadHeader, "bad lstm axis in checkpoint");
    c.lstm_axis = static_cast<LstmAxis>(axis);
    try {
        c.validate();
    } catch (const ConfigError& e) {
        throw IoError(IoErrorKind::BadHeader, std::string("bad checkpoint config: ") + e.what());
    }
    const HdlNet net(c);
    const ModelParams layout = net.zero_params();

    const std::uint32_t count = r.u32();
    if (count != layout.size())
        throw IoError(IoErrorKind::Format, "checkpoint has " + std::to_string(count)
                                               + " tensors, expected " + std::to_string(layout.size()));
    for (std::uint32_t k = 0; k < count; ++k) {
        const std::uint16_t len = r.u16();
        std::string name(r.raw(len));
        const std::uint8_t rank = r.u8();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = r.u32();
        if (name != layout[k].name || shape != layout[k].value.shape())
            throw IoError(IoErrorKind::Format, "checkpoint tensor " + std::to_string(k) + " ("
                                                   + name + ") does not match the net layout");
        Tensor t(shape);
        for (double& v : t.span()) v = r.f32();
        ck.params.add(std::move(name), std::move(t));
    }
    if (r.remaining() != 0) throw IoError(IoErrorKind::Format, "trailing bytes after checkpoint");
    return ck;
}

void write_checkpoint(const std::filesystem::path& path, const NetConfig& config,
                      const ModelParams& params)
{
    io::write_atomic(path, encode_checkpoint(config, params));
}

Checkpoint read_checkpoint(const std::filesystem::path& path)
{
    return decode_checkpoint(io::read_file(path));
}

} // namespace das::hdl
