#include "har/model_io.hpp"

#include <cstring>
#include <fstream>

#include "har/errors.hpp"

namespace har {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}

void put_u16(std::string& out, std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    put_bytes(out, b, 2);
}

void put_u32(std::string& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    put_bytes(out, b, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    put_bytes(out, b, 8);
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw FormatError("model file: unexpected end of data");
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint8_t>(buf[pos]) |
                          (static_cast<std::uint16_t>(static_cast<std::uint8_t>(buf[pos + 1])) << 8);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i)
            v = (v << 8) | static_cast<std::uint8_t>(buf[pos + static_cast<std::size_t>(i)]);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i)
            v = (v << 8) | static_cast<std::uint8_t>(buf[pos + static_cast<std::size_t>(i)]);
        pos += 8;
        return v;
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

}  // namespace

std::string serialize_model(const NetworkParams& params, const Hyperparameters& hp,
                            const NormStats& norm) {
    std::string out;
    put_bytes(out, kModelMagic, sizeof(kModelMagic));
    put_u16(out, kModelVersion);
    put_u32(out, static_cast<std::uint32_t>(hp.window_size));
    put_u32(out, static_cast<std::uint32_t>(hp.stride));
    put_u32(out, static_cast<std::uint32_t>(hp.batch_size));
    put_u32(out, static_cast<std::uint32_t>(hp.epochs));
    put_f64(out, hp.learning_rate);
    put_f64(out, hp.l2_coeff);
    put_u32(out, static_cast<std::uint32_t>(hp.hidden));
    put_u32(out, static_cast<std::uint32_t>(hp.layers));
    put_u64(out, hp.seed);
    out.push_back(hp.aggregation == Aggregation::last ? '\1' : '\0');
    out.push_back(norm.enabled ? '\1' : '\0');
    for (double v : norm.mean) put_f64(out, v);
    for (double v : norm.stddev) put_f64(out, v);

    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes;
    std::vector<const std::vector<double>*> buffers;
    for_each_tensor(params, [&](const std::string&, const std::vector<double>& buf,
                                std::size_t rows, std::size_t cols, bool) {
        shapes.emplace_back(static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(cols));
        buffers.push_back(&buf);
    });
    put_u32(out, static_cast<std::uint32_t>(shapes.size()));
    for (auto [r, c] : shapes) {
        put_u32(out, r);
        put_u32(out, c);
    }
    for (const auto* buf : buffers)
        for (double v : *buf) put_f64(out, v);

    put_u64(out, fnv1a64(out.data(), out.size()));
    return out;
}

ModelData deserialize_model(const std::string& bytes) {
    constexpr std::size_t kMinSize = sizeof(kModelMagic) + 2 + 8;
    if (bytes.size() < kMinSize) throw ChecksumError("model file: truncated");

    if (std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0)
        throw FormatError("model file: bad magic");

    std::uint64_t stored = 0;
    for (int i = 7; i >= 0; --i)
        stored = (stored << 8) |
                 static_cast<std::uint8_t>(bytes[bytes.size() - 8 + static_cast<std::size_t>(i)]);
    if (fnv1a64(bytes.data(), bytes.size() - 8) != stored)
        throw ChecksumError("model file: checksum mismatch");

    Reader r{bytes, sizeof(kModelMagic)};
    std::uint16_t version = r.u16();
    if (version != kModelVersion)
        throw FormatError("model file: unsupported version " + std::to_string(version));

    ModelData m;
    m.hp.window_size = r.u32();
    m.hp.stride = r.u32();
    m.hp.batch_size = r.u32();
    m.hp.epochs = r.u32();
    m.hp.learning_rate = r.f64();
    m.hp.l2_coeff = r.f64();
    m.hp.hidden = r.u32();
    m.hp.layers = r.u32();
    m.hp.seed = r.u64();
    std::uint8_t agg = r.u8();
    if (agg > 1) throw FormatError("model file: bad aggregation mode");
    m.hp.aggregation = agg == 1 ? Aggregation::last : Aggregation::sum;
    m.norm.enabled = r.u8() != 0;
    for (double& v : m.norm.mean) v = r.f64();
    for (double& v : m.norm.stddev) v = r.f64();

    std::uint32_t count = r.u32();
    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(count);
    for (auto& [rows, cols] : shapes) {
        rows = r.u32();
        cols = r.u32();
    }
    if (count < 2) throw FormatError("model file: shape table too short");
    // widths come from the table itself: layer1.w_xi is hidden x input,
    // head_w is classes x hidden
    std::size_t hidden = shapes[0].first;
    std::size_t input = shapes[0].second;
    std::size_t classes = shapes[count - 2].first;
    if (hidden != m.hp.hidden)
        throw FormatError("model file: shape table disagrees with hidden size");

    m.params = NetworkParams(input, hidden, classes);
    std::size_t idx = 0;
    for_each_tensor(m.params, [&](const std::string& name, std::vector<double>& buf,
                                  std::size_t rows, std::size_t cols, bool) {
        if (idx >= shapes.size())
            throw FormatError("model file: shape table too short");
        if (shapes[idx].first != rows || shapes[idx].second != cols)
            throw FormatError("model file: unexpected shape for " + name);
        ++idx;
        for (double& v : buf) v = r.f64();
    });
    if (idx != shapes.size()) throw FormatError("model file: extra shape table entries");
    if (r.pos != bytes.size() - 8)
        throw FormatError("model file: trailing bytes in payload");
    return m;
}

void save_model(const NetworkParams& params, const Hyperparameters& hp,
                const NormStats& norm, const std::string& path) {
    std::string bytes = serialize_model(params, hp, norm);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open model file for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing model file: " + path);
}

ModelData load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(bytes);
}

}  // namespace har
