#include "gsplat/core.hpp"

#include <cstdio>

namespace gsplat {

std::string hex_string(std::uint64_t value) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(value));
    return buf;
}

}  // namespace gsplat
