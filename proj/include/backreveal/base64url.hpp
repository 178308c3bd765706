#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace backreveal {

/// Base64url (RFC 4648 §5) without padding.
std::string base64url_encode(std::string_view bytes);

/// Inverse of base64url_encode. Rejects padding, characters outside the
/// url-safe alphabet, and impossible lengths (len % 4 == 1).
std::optional<std::string> base64url_decode(std::string_view s);

}  // namespace backreveal
