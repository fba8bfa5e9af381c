#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "hwymarl/errors.hpp"
#include "hwymarl/nn.hpp"

namespace hwy::nn {

namespace {

constexpr char kMagic[4] = {'H', 'W', 'N', 'N'};
constexpr std::size_t kHeaderBytes = 4 + 6 * 4 + 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t take(int width) {
        if (pos_ + static_cast<std::size_t>(width) > bytes_.size()) throw LoadError("checkpoint truncated");
        std::uint64_t x = 0;
        for (int i = 0; i < width; ++i) x |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
        return x;
    }
    std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
    std::uint64_t u64() { return take(8); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize(const NetworkParams& params) {
    const Architecture& a = params.architecture();
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + 8 * params.size());
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32(out, kCheckpointVersion);
    put_u32(out, static_cast<std::uint32_t>(a.n_obs));
    put_u32(out, static_cast<std::uint32_t>(a.encoder_width));
    put_u32(out, static_cast<std::uint32_t>(a.fusion_width));
    put_u32(out, static_cast<std::uint32_t>(a.n_actions));
    put_u32(out, static_cast<std::uint32_t>(a.trunk));
    put_u64(out, params.size());
    for (double x : params.values()) put_u64(out, std::bit_cast<std::uint64_t>(x));
    return out;
}

NetworkParams deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw LoadError("not a network checkpoint");
    Reader r(bytes.subspan(4));
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw LoadError("unsupported checkpoint version " + std::to_string(version));
    }
    Architecture a;
    a.n_obs = static_cast<int>(r.u32());
    a.encoder_width = static_cast<int>(r.u32());
    a.fusion_width = static_cast<int>(r.u32());
    a.n_actions = static_cast<int>(r.u32());
    const std::uint32_t trunk = r.u32();
    if (trunk > 1) throw LoadError("unknown trunk mode in checkpoint");
    a.trunk = static_cast<TrunkMode>(trunk);
    const std::uint64_t count = r.u64();

    NetworkParams params = [&] {
        try {
            return NetworkParams(a);
        } catch (const ContractError& e) {
            throw LoadError(std::string("checkpoint architecture invalid: ") + e.what());
        }
    }();
    if (count != params.size()) throw LoadError("checkpoint parameter count does not match its architecture");
    if (r.remaining() != 8 * count) throw LoadError("checkpoint truncated or has trailing bytes");
    for (double& x : params.values()) x = std::bit_cast<double>(r.u64());
    return params;
}

void save_checkpoint(const NetworkParams& params, const std::filesystem::path& path) {
    const auto bytes = serialize(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

NetworkParams load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace hwy::nn
