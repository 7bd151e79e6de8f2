#include "pal/replay.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace pal {

std::string replay(const TaskDef& task, const std::vector<std::string>& commands, SessionOptions options,
                   double seconds_per_command) {
    Session session(options);
    session.load(task);
    double now = 0;
    std::string out = session.handle("START", now) + "\n";
    for (const auto& c : commands) {
        now += seconds_per_command;
        out += session.handle(c, now) + "\n";
    }
    out += session.status(now).dump() + "\n";
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 15];
    }
    return out;
}

}  // namespace pal
