#pragma once

#include <string>
#include <string_view>

namespace sleuth {

/// Lower-case hex SHA-256; used for content-addressed caches and recordings.
std::string sha256_hex(std::string_view data);

}  // namespace sleuth
