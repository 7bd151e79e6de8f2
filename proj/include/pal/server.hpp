#pragma once

// TCP front end for a Session: the agent port speaks the PAL line protocol,
// the control port takes newline-delimited JSON from the tournament manager.

#include "pal/protocol.hpp"

#include <json.hpp>

#include <atomic>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

namespace pal {

struct ServerConfig {
    std::string host = "127.0.0.1";
    int agent_port = 9000;    // 0 picks a free port
    int control_port = 9005;  // 0 picks a free port
    int fps = 20;             // 1..1000
    SessionOptions session;
    int window_x = -1;  // accepted for compatibility, unused headless
    int window_y = -1;

    // Reads SENSE_SCREEN_FORMAT, AIGYM_REPORTING, REPORT_SCREEN,
    // PAL_AGENT_PORT, PAL_TM_PORT, PAL_FPS, PAL_X, PAL_Y, PAL_WIDTH and
    // PAL_HEIGHT over the defaults. Throws std::invalid_argument on bad values.
    static ServerConfig from_env();
    void validate() const;
};

class Server {
public:
    explicit Server(ServerConfig config, std::ostream* game_log = nullptr);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds both ports. Throws std::runtime_error when a port is taken.
    void listen();
    int agent_port() const;
    int control_port() const;

    // Installs an instance before run(); START then goes straight to it.
    void preload(TaskDef def, std::optional<double> time_limit_sec = std::nullopt);

    // Serves until stop() or a SHUTDOWN control message.
    void run();
    // Safe to call from any thread or a signal handler.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pal
