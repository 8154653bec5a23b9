#include "strand/core/hash.hpp"

#include <openssl/evp.h>

#include <array>
#include <memory>
#include <stdexcept>

namespace strand {

namespace {

using Digest = std::array<unsigned char, 32>;

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("sha256 init failed");
        }
    }
    void update(std::string_view data) { EVP_DigestUpdate(ctx_.get(), data.data(), data.size()); }
    Digest finish() {
        Digest out{};
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_.get(), out.data(), &len);
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(std::string_view data) {
    Sha256 h;
    h.update(data);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned char b : h.finish()) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xf]);
    }
    return out;
}

std::uint64_t derive_seed(std::initializer_list<std::string_view> parts) {
    Sha256 h;
    for (auto p : parts) {
        const auto n = std::to_string(p.size()) + ":";
        h.update(n);
        h.update(p);
    }
    const auto d = h.finish();
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) {
        seed = (seed << 8) | d[static_cast<std::size_t>(i)];
    }
    return seed;
}

}  // namespace strand
