#ifndef FIST_DIGEST_HPP
#define FIST_DIGEST_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <openssl/evp.h>

namespace fist::digest {

namespace detail {

template <std::size_t N>
std::array<std::uint8_t, N> evp_digest(const EVP_MD* md, std::string_view data) {
    std::array<std::uint8_t, EVP_MAX_MD_SIZE> buf{};
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), buf.data(), &len, md, nullptr);
    std::array<std::uint8_t, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = buf[i];
    return out;
}

inline std::string hex(const std::uint8_t* bytes, std::size_t n) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(kHex[bytes[i] >> 4]);
        out.push_back(kHex[bytes[i] & 0x0f]);
    }
    return out;
}

} // namespace detail

inline std::string sha256_hex(std::string_view data) {
    auto d = detail::evp_digest<32>(EVP_sha256(), data);
    return detail::hex(d.data(), d.size());
}

/// RFC 4122 name-based (SHA-1, version 5) UUID in its 8-4-4-4-12 text form.
inline std::string uuid_v5(const std::array<std::uint8_t, 16>& ns, std::string_view name) {
    std::string input(reinterpret_cast<const char*>(ns.data()), ns.size());
    input.append(name);
    auto d = detail::evp_digest<20>(EVP_sha1(), input);
    d[6] = static_cast<std::uint8_t>((d[6] & 0x0f) | 0x50);
    d[8] = static_cast<std::uint8_t>((d[8] & 0x3f) | 0x80);
    std::string h = detail::hex(d.data(), 16);
    return h.substr(0, 8) + "-" + h.substr(8, 4) + "-" + h.substr(12, 4) + "-" + h.substr(16, 4) +
           "-" + h.substr(20, 12);
}

} // namespace fist::digest

#endif
