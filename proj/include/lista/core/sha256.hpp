#pragma once

#include <cstdint>
#include <string>

namespace lista {

/// Minimal SHA-256 (FIPS 180-4), enough to fingerprint artifacts in manifests.
class Sha256 {
public:
    Sha256();
    void update(const void* data, std::size_t len);
    std::string hex_digest();  // finalizes; object must not be reused

    static std::string of_file(const std::string& path);  // throws on IO failure
    static std::string of_string(const std::string& s);

private:
    void process_block(const std::uint8_t* p);
    std::uint32_t h_[8];
    std::uint8_t buf_[64];
    std::size_t buf_len_ = 0;
    std::uint64_t total_ = 0;
};

}  // namespace lista
