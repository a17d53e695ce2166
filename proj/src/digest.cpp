#include "advx/digest.hpp"

#include <openssl/sha.h>

#include <array>
#include <cstdio>

namespace advx {

std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, SHA256_DIGEST_LENGTH> md{};
    SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md.data());
    std::string out;
    out.reserve(2 * md.size());
    char buf[3];
    for (auto b : md) {
        std::snprintf(buf, sizeof buf, "%02x", b);
        out += buf;
    }
    return out;
}

}  // namespace advx
