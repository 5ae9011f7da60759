#include <openssl/evp.h>

#include <array>
#include <memory>
#include <string>

#include "predname/errors.hpp"
#include "predname/gateway.hpp"

namespace predname {

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0f]);
  }
  return out;
}

std::string exchange_digest(std::string_view model_id, int round_index, std::string_view prompt_text) {
  // Length-prefixed fields, so no choice of separator can make two different
  // triples collide.
  std::string buffer = "predname-exchange-v1\n";
  auto field = [&buffer](std::string_view value) {
    buffer += std::to_string(value.size());
    buffer += ':';
    buffer += value;
    buffer += '\n';
  };
  field(model_id);
  field(std::to_string(round_index));
  field(prompt_text);
  return sha256_hex(buffer);
}

}  // namespace predname
