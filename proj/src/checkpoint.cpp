#include "fgsim/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "fgsim/errors.hpp"

namespace fgsim {

namespace {

constexpr char kMagic[6] = {'F', 'G', 'S', 'I', 'M', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32_le(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void put_u64_le(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

std::uint32_t get_u32_le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

std::uint64_t get_u64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

} // namespace

void save_checkpoint(const ParamVector& model, const std::string& path) {
    if (!model.all_finite())
        throw ContractViolation("save_checkpoint: model contains non-finite values");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw PersistenceError("save_checkpoint: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    put_u32_le(out, kVersion);
    put_u64_le(out, static_cast<std::uint64_t>(model.dim()));
    for (std::size_t i = 0; i < model.dim(); ++i) {
        put_u64_le(out, std::bit_cast<std::uint64_t>(model[i]));
    }
    out.flush();
    if (!out) throw PersistenceError("save_checkpoint: write failed for " + path);
}

ParamVector load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PersistenceError("load_checkpoint: cannot open " + path);
    char magic[6];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw PersistenceError("load_checkpoint: bad magic in " + path);
    const std::uint32_t version = get_u32_le(in);
    if (version != kVersion)
        throw PersistenceError("load_checkpoint: unsupported version " + std::to_string(version) +
                               " in " + path);
    const std::uint64_t dim = get_u64_le(in);
    if (!in) throw PersistenceError("load_checkpoint: truncated header in " + path);
    ParamVector model(static_cast<std::size_t>(dim));
    for (std::uint64_t i = 0; i < dim; ++i) {
        const std::uint64_t bits = get_u64_le(in);
        if (!in) throw PersistenceError("load_checkpoint: truncated values in " + path);
        model[static_cast<std::size_t>(i)] = std::bit_cast<double>(bits);
    }
    return model;
}

} // namespace fgsim
