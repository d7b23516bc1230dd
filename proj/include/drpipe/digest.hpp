#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace drpipe {

using Digest256 = std::array<std::uint8_t, 32>;

/// Incremental SHA-256. Backed by OpenSSL's EVP interface.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(const void* data, std::size_t len);
  Sha256& update(std::string_view s) { return update(s.data(), s.size()); }
  Digest256 finish();

 private:
  void* ctx_;
};

Digest256 sha256(std::string_view data);
Digest256 sha256_file(const std::filesystem::path& path);

std::string to_hex(const Digest256& d);
Digest256 from_hex(std::string_view hex);  // throws ParseError on bad input

}  // namespace drpipe
