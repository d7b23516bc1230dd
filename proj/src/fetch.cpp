#include "drpipe/pipeline.hpp"

#include <fstream>

#include "drpipe/digest.hpp"
#include "drpipe/error.hpp"

// Last: its transitive system includes leak macros that break Eigen headers.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

namespace drpipe {
namespace {

struct UrlParts {
  std::string scheme_host;  // "http://host:port" as httplib::Client wants it
  std::string path;
};

UrlParts parse_url(const std::string& url) {
  std::size_t scheme_len = 0;
  if (url.rfind("https://", 0) == 0)
    scheme_len = 8;
  else if (url.rfind("http://", 0) == 0)
    scheme_len = 7;
  else
    throw ParseError("weights URL must start with http:// or https://");

  const auto slash = url.find('/', scheme_len);
  UrlParts parts;
  parts.scheme_host = slash == std::string::npos ? url : url.substr(0, slash);
  parts.path = slash == std::string::npos ? "/" : url.substr(slash);
  if (parts.scheme_host.size() == scheme_len) throw ParseError("weights URL has no host");
  return parts;
}

}  // namespace

void download_to_file(const std::string& url, const std::filesystem::path& dest,
                      const std::string& sha256_hex) {
  const UrlParts parts = parse_url(url);
  if (dest.has_parent_path()) std::filesystem::create_directories(dest.parent_path());
  const std::filesystem::path partial = dest.string() + ".part";

  {
    std::ofstream out(partial, std::ios::binary);
    if (!out) throw IoError("cannot write to " + partial.string());

    httplib::Client client(parts.scheme_host);
    client.set_follow_location(true);
    client.set_read_timeout(300, 0);
    auto res = client.Get(parts.path, [&](const char* data, std::size_t len) {
      out.write(data, static_cast<std::streamsize>(len));
      return static_cast<bool>(out);
    });
    if (!res || res->status != 200) {
      out.close();
      std::filesystem::remove(partial);
      throw IoError("download failed from " + url +
                    (res ? " (status " + std::to_string(res->status) + ")" : " (no response)"));
    }
  }

  const std::string actual = to_hex(sha256_file(partial));
  if (actual != sha256_hex) {
    std::filesystem::remove(partial);
    throw IntegrityError("downloaded asset digest mismatch: expected " + sha256_hex + ", got " +
                         actual);
  }
  std::filesystem::rename(partial, dest);
}

}  // namespace drpipe
