#pragma once

// Blocking newline-framed TCP client, used by the agents, the tournament
// manager's control link and the tests.

#include <json.hpp>

#include <string>

namespace pal {

class LineClient {
public:
    LineClient() = default;
    ~LineClient();
    LineClient(LineClient&& other) noexcept;
    LineClient& operator=(LineClient&& other) noexcept;
    LineClient(const LineClient&) = delete;
    LineClient& operator=(const LineClient&) = delete;

    // Retries refused connections until `timeout_sec` has passed.
    void connect(const std::string& host, int port, double timeout_sec = 5.0);
    bool connected() const { return fd_ >= 0; }
    void close();

    void send_line(const std::string& line);
    // Throws std::runtime_error when the peer closes or `timeout_sec` passes.
    // A negative timeout waits forever.
    std::string read_line(double timeout_sec = -1);

    std::string request(const std::string& line, double timeout_sec = -1) {
        send_line(line);
        return read_line(timeout_sec);
    }
    nlohmann::json request_json(const std::string& line, double timeout_sec = -1) {
        return nlohmann::json::parse(request(line, timeout_sec));
    }

private:
    int fd_ = -1;
    std::string buffer_;
};

}  // namespace pal
