#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "mgd/common.hpp"
#include "mgd/tensor.hpp"

// Flat parameter file, all integers little-endian:
//   magic   "MGD1"                     4 bytes
//   count   u64                        number of records
// then per record:
//   nlen    u32
//   name    nlen bytes UTF-8
//   rank    u32
//   extents rank x u64
//   data    prod(extents) x f32
// Records appear in registration order, which makes writes byte-stable.

namespace mgd {

namespace detail {

inline void put_bytes(std::vector<uint8_t>& out, const void* p, size_t n) {
    const auto* b = static_cast<const uint8_t*>(p);
    out.insert(out.end(), b, b + n);
}

template <typename T>
void put_le(std::vector<uint8_t>& out, T v) {
    for (size_t i = 0; i < sizeof(T); ++i) out.push_back(uint8_t((uint64_t(v) >> (8 * i)) & 0xff));
}

inline void put_f32(std::vector<uint8_t>& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_le(out, bits);
}

struct Reader {
    const std::vector<uint8_t>& buf;
    size_t pos = 0;
    std::string ctx;

    void need(size_t n) const {
        if (pos + n > buf.size()) throw IoError("truncated parameter file: " + ctx);
    }
    template <typename T>
    T get_le() {
        need(sizeof(T));
        uint64_t v = 0;
        for (size_t i = 0; i < sizeof(T); ++i) v |= uint64_t(buf[pos + i]) << (8 * i);
        pos += sizeof(T);
        return T(v);
    }
    float get_f32() {
        uint32_t bits = get_le<uint32_t>();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string get_str(size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(buf.data() + pos), n);
        pos += n;
        return s;
    }
};

inline void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open for write: " + path);
    size_t wrote = bytes.empty() ? 0 : std::fwrite(bytes.data(), 1, bytes.size(), f);
    std::fclose(f);
    if (wrote != bytes.size()) throw IoError("short write on " + path);
}

inline std::vector<uint8_t> read_bytes(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw MissingArtifact("cannot open " + path);
    std::fseek(f, 0, SEEK_END);
    long n = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<uint8_t> buf(size_t(n));
    size_t got = n > 0 ? std::fread(buf.data(), 1, size_t(n), f) : 0;
    std::fclose(f);
    if (got != size_t(n)) throw IoError("short read on " + path);
    return buf;
}

}  // namespace detail

template <typename S>
std::vector<uint8_t> serialize_params(const ParamStore<S>& store) {
    std::vector<uint8_t> out;
    out.reserve(64 + size_t(store.total_elems()) * 4);
    detail::put_bytes(out, "MGD1", 4);
    detail::put_le<uint64_t>(out, store.size());
    for (const auto& p : store.params()) {
        detail::put_le<uint32_t>(out, uint32_t(p.name.size()));
        detail::put_bytes(out, p.name.data(), p.name.size());
        const Shape& sh = p.tensor.shape();
        detail::put_le<uint32_t>(out, uint32_t(sh.size()));
        for (int64_t d : sh) detail::put_le<uint64_t>(out, uint64_t(d));
        for (S v : p.tensor.data()) detail::put_f32(out, float(v));
    }
    return out;
}

template <typename S>
void save_params(const std::string& path, const ParamStore<S>& store) {
    detail::write_bytes(path, serialize_params(store));
}

// Loads a checkpoint into an already-constructed store; every record must
// match an existing parameter, and every parameter must be covered.
template <typename S>
void load_params(const std::string& path, ParamStore<S>& store) {
    auto buf = detail::read_bytes(path);
    detail::Reader r{buf, 0, path};
    if (r.get_str(4) != "MGD1") throw IoError("bad magic in " + path);
    uint64_t count = r.get_le<uint64_t>();
    size_t filled = 0;
    for (uint64_t i = 0; i < count; ++i) {
        uint32_t nlen = r.get_le<uint32_t>();
        std::string name = r.get_str(nlen);
        uint32_t rank = r.get_le<uint32_t>();
        Shape sh(rank);
        for (uint32_t d = 0; d < rank; ++d) sh[d] = int64_t(r.get_le<uint64_t>());
        if (!store.has(name)) throw MissingArtifact("checkpoint " + path + " has unknown parameter " + name);
        Tensor<S>& t = store.at(name);
        if (t.shape() != sh)
            throw ShapeError("checkpoint " + path + ": parameter " + name + " has shape " + shape_str(sh) +
                             ", model wants " + shape_str(t.shape()));
        auto dst = t.data();
        for (int64_t j = 0; j < t.numel(); ++j) dst[size_t(j)] = S(r.get_f32());
        ++filled;
    }
    if (filled != store.size())
        throw MissingArtifact("checkpoint " + path + " covers " + std::to_string(filled) + " of " +
                              std::to_string(store.size()) + " parameters");
}

template <typename S>
uint64_t params_hash(const ParamStore<S>& store) {
    auto bytes = serialize_params(store);
    return fnv1a(bytes.data(), bytes.size());
}

// Byte snapshot used by the freeze-contract tests.
template <typename S>
std::vector<uint8_t> snapshot_params(const ParamStore<S>& store, const std::string& prefix = "") {
    std::vector<uint8_t> out;
    for (const auto& p : store.params()) {
        if (!prefix.empty() && p.name.rfind(prefix, 0) != 0) continue;
        for (S v : p.tensor.data()) {
            float f = float(v);
            detail::put_f32(out, f);
        }
    }
    return out;
}

}  // namespace mgd
