#pragma once

#include <openssl/evp.h>

#include <cstdio>
#include <stdexcept>
#include <string>

namespace clab::tool {

/// SHA-1 of "blob <size>\0<content>", the object id git assigns to a file.
inline std::string git_blob_hash(const std::string& content) {
  const std::string data = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

}  // namespace clab::tool
