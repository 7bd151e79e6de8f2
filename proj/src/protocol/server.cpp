#include "pal/server.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <list>
#include <optional>
#include <stdexcept>

namespace pal {

using nlohmann::json;

namespace {

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

int env_int(const char* name, int fallback) {
    auto v = env(name);
    if (!v) return fallback;
    char* end = nullptr;
    long n = std::strtol(v->c_str(), &end, 10);
    if (*end != '\0') throw std::invalid_argument(std::string(name) + " must be an integer, got '" + *v + "'");
    return static_cast<int>(n);
}

bool env_flag(const char* name) {
    auto v = env(name);
    if (!v) return false;
    std::string s = *v;
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s == "true" || s == "1" || s == "yes";
}

double now_seconds() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void set_nonblocking(int fd) { fcntl(fd, F_SETFL, fcntl(fd, F_GETFL) | O_NONBLOCK); }

int listen_on(const std::string& host, int port) {
    int fd = socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        close(fd);
        throw std::runtime_error("bad listen address " + host);
    }
    if (bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 8) < 0) {
        int err = errno;
        close(fd);
        throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port) + ": " +
                                 std::strerror(err));
    }
    set_nonblocking(fd);
    return fd;
}

int bound_port(int fd) {
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
}

struct Conn {
    int fd = -1;
    std::string in;
    std::string out;
    bool closing = false;
};

// Returns false when the peer is gone.
bool fill(Conn& c) {
    char buf[65536];
    for (;;) {
        ssize_t n = recv(c.fd, buf, sizeof buf, 0);
        if (n > 0) {
            c.in.append(buf, static_cast<std::size_t>(n));
            continue;
        }
        if (n == 0) return false;
        if (errno == EINTR) continue;
        return errno == EAGAIN || errno == EWOULDBLOCK;
    }
}

bool drain(Conn& c) {
    while (!c.out.empty()) {
        ssize_t n = send(c.fd, c.out.data(), c.out.size(), MSG_NOSIGNAL);
        if (n > 0) {
            c.out.erase(0, static_cast<std::size_t>(n));
            continue;
        }
        if (n < 0 && errno == EINTR) continue;
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) return true;
        return false;
    }
    return true;
}

std::optional<std::string> take_line(std::string& buf) {
    auto nl = buf.find('\n');
    if (nl == std::string::npos) return std::nullopt;
    std::string line = buf.substr(0, nl);
    buf.erase(0, nl + 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

}  // namespace

ServerConfig ServerConfig::from_env() {
    ServerConfig c;
    if (auto f = env("SENSE_SCREEN_FORMAT")) {
        auto parsed = parse_image_format(*f);
        if (!parsed) throw std::invalid_argument("SENSE_SCREEN_FORMAT must be one of PNG BMP JPEG JPG WBMP GIF");
        c.session.screen_format = *parsed;
    }
    c.session.aigym_reporting = env_flag("AIGYM_REPORTING");
    c.session.report_screen = env_flag("REPORT_SCREEN");
    c.agent_port = env_int("PAL_AGENT_PORT", c.agent_port);
    c.control_port = env_int("PAL_TM_PORT", c.control_port);
    c.fps = env_int("PAL_FPS", c.fps);
    c.window_x = env_int("PAL_X", c.window_x);
    c.window_y = env_int("PAL_Y", c.window_y);
    c.session.screen_width = env_int("PAL_WIDTH", c.session.screen_width);
    c.session.screen_height = env_int("PAL_HEIGHT", c.session.screen_height);
    c.validate();
    return c;
}

void ServerConfig::validate() const {
    if (fps < 1 || fps > 1000) throw std::invalid_argument("PAL_FPS must be in 1..1000");
    auto port_ok = [](int p) { return p >= 0 && p <= 65535; };
    if (!port_ok(agent_port) || !port_ok(control_port)) throw std::invalid_argument("ports must be in 0..65535");
    if (session.screen_width < 1 || session.screen_height < 1 || session.screen_width > 4096 ||
        session.screen_height > 4096) {
        throw std::invalid_argument("PAL_WIDTH and PAL_HEIGHT must be in 1..4096");
    }
}

struct Server::Impl {
    ServerConfig config;
    std::ostream* log;
    Session session;
    int agent_listen = -1;
    int control_listen = -1;
    int wake[2] = {-1, -1};
    std::optional<Conn> agent;
    std::list<Conn> controls;
    int agent_connections = 0;
    int refused_connections = 0;
    std::optional<std::string> pending;  // response waiting for its tick to end
    double release_at = 0;
    bool shutting_down = false;
    std::atomic<bool> stop_requested{false};

    Impl(ServerConfig c, std::ostream* game_log)
        : config(std::move(c)), log(game_log), session(config.session, game_log) {}

    void note(const std::string& line) {
        if (!log) return;
        *log << line << '\n';
        log->flush();
    }

    double tick() const { return 1.0 / config.fps; }

    void drop_agent(double now) {
        if (!agent) return;
        close(agent->fd);
        agent.reset();
        pending.reset();
        session.agent_lost(now);
        note("AGENT disconnected");
    }

    void accept_agent() {
        for (;;) {
            int fd = accept4(agent_listen, nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK);
            if (fd < 0) return;
            if (agent) {
                // Single-agent server: a second connection is closed at once.
                close(fd);
                ++refused_connections;
                note("AGENT refused second connection");
                continue;
            }
            int one = 1;
            setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            agent = Conn{fd, {}, {}, false};
            ++agent_connections;
            note("AGENT connected");
        }
    }

    void accept_control() {
        for (;;) {
            int fd = accept4(control_listen, nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK);
            if (fd < 0) return;
            int one = 1;
            setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
            controls.push_back(Conn{fd, {}, {}, false});
        }
    }

    json control_reply(const std::string& line, double now) {
        json msg;
        try {
            msg = json::parse(line);
        } catch (const json::exception& e) {
            return {{"ok", false}, {"error", std::string("malformed control message: ") + e.what()}};
        }
        if (!msg.is_object() || !msg.contains("cmd") || !msg["cmd"].is_string()) {
            return {{"ok", false}, {"error", "control message needs a string \"cmd\""}};
        }
        const std::string cmd = msg["cmd"];
        if (cmd == "STATUS") {
            json s = session.status(now);
            s["agentConnected"] = agent.has_value();
            s["agentConnections"] = agent_connections;
            s["refusedConnections"] = refused_connections;
            return s;
        }
        if (cmd == "LOAD") {
            if (!msg.contains("path") || !msg["path"].is_string()) return {{"ok", false}, {"error", "LOAD needs path"}};
            if (session.busy()) return {{"ok", false}, {"error", "busy"}};
            std::optional<double> limit;
            if (msg.contains("timeLimitSec")) {
                if (!msg["timeLimitSec"].is_number() || msg["timeLimitSec"].get<double>() <= 0) {
                    return {{"ok", false}, {"error", "timeLimitSec must be a positive number"}};
                }
                limit = msg["timeLimitSec"].get<double>();
            }
            try {
                TaskDef def = load_task(msg["path"].get<std::string>());
                std::string name = def.name;
                session.load(std::move(def), limit);
                return {{"ok", true}, {"instance", name}, {"phase", phase_name(session.phase())}};
            } catch (const std::exception& e) {
                return {{"ok", false}, {"error", e.what()}};
            }
        }
        if (cmd == "SHUTDOWN") {
            shutting_down = true;
            return {{"ok", true}};
        }
        return {{"ok", false}, {"error", "unknown control command " + cmd}};
    }

    void run() {
        while (!stop_requested) {
            double now = now_seconds();
            if (pending && now >= release_at) {
                agent->out += *pending;
                pending.reset();
                if (!drain(*agent)) drop_agent(now);
            }
            if (agent && !pending) {
                if (auto line = take_line(agent->in)) {
                    double started = now_seconds();
                    pending = session.handle(*line, started) + "\n";
                    release_at = started + tick();
                    continue;
                }
            }
            for (auto it = controls.begin(); it != controls.end();) {
                while (auto line = take_line(it->in)) it->out += control_reply(*line, now).dump() + "\n";
                if (!drain(*it) || (it->closing && it->out.empty())) {
                    close(it->fd);
                    it = controls.erase(it);
                } else {
                    ++it;
                }
            }
            if (shutting_down) {
                bool flushed = std::all_of(controls.begin(), controls.end(), [](const Conn& c) { return c.out.empty(); });
                if (flushed) break;
            }

            std::vector<pollfd> fds;
            fds.push_back({wake[0], POLLIN, 0});
            fds.push_back({agent_listen, POLLIN, 0});
            fds.push_back({control_listen, POLLIN, 0});
            if (agent) {
                short events = POLLIN;
                if (!agent->out.empty()) events |= POLLOUT;
                fds.push_back({agent->fd, events, 0});
            }
            const std::size_t first_control = fds.size();
            for (const auto& c : controls) {
                short events = POLLIN;
                if (!c.out.empty()) events |= POLLOUT;
                fds.push_back({c.fd, events, 0});
            }
            timespec timeout{};
            timespec* tp = nullptr;
            if (pending) {
                double wait = std::max(0.0, release_at - now_seconds());
                timeout.tv_sec = static_cast<time_t>(wait);
                timeout.tv_nsec = static_cast<long>((wait - static_cast<double>(timeout.tv_sec)) * 1e9);
                tp = &timeout;
            } else if (shutting_down) {
                timeout.tv_nsec = 10'000'000;
                tp = &timeout;
            }
            int rc = ppoll(fds.data(), fds.size(), tp, nullptr);
            if (rc < 0) {
                if (errno == EINTR) continue;
                throw std::runtime_error(std::string("poll: ") + std::strerror(errno));
            }
            now = now_seconds();
            if (fds[0].revents & POLLIN) {
                char buf[64];
                while (read(wake[0], buf, sizeof buf) > 0) {
                }
            }
            if (fds[1].revents & POLLIN) accept_agent();
            if (fds[2].revents & POLLIN) accept_control();
            if (agent && fds.size() > 3 && fds[3].fd == agent->fd) {
                const short re = fds[3].revents;
                bool alive = true;
                if (re & (POLLIN | POLLHUP | POLLERR)) alive = fill(*agent);
                if (alive && (re & POLLOUT)) alive = drain(*agent);
                if (!alive) drop_agent(now);
            }
            std::size_t i = first_control;
            for (auto& c : controls) {
                if (i >= fds.size() || fds[i].fd != c.fd) break;
                const short re = fds[i].revents;
                if (re & (POLLIN | POLLHUP | POLLERR)) {
                    if (!fill(c)) c.closing = true;
                }
                if (re & POLLOUT) drain(c);
                ++i;
            }
        }
        note("SHUTDOWN");
    }
};

Server::Server(ServerConfig config, std::ostream* game_log) : impl_(std::make_unique<Impl>(std::move(config), game_log)) {
    impl_->config.validate();
    if (pipe2(impl_->wake, O_CLOEXEC | O_NONBLOCK) < 0) throw std::runtime_error("pipe failed");
}

Server::~Server() {
    if (impl_->agent) close(impl_->agent->fd);
    for (auto& c : impl_->controls) close(c.fd);
    for (int fd : {impl_->agent_listen, impl_->control_listen, impl_->wake[0], impl_->wake[1]}) {
        if (fd >= 0) close(fd);
    }
}

void Server::listen() {
    impl_->agent_listen = listen_on(impl_->config.host, impl_->config.agent_port);
    try {
        impl_->control_listen = listen_on(impl_->config.host, impl_->config.control_port);
    } catch (...) {
        close(impl_->agent_listen);
        impl_->agent_listen = -1;
        throw;
    }
}

int Server::agent_port() const { return bound_port(impl_->agent_listen); }
int Server::control_port() const { return bound_port(impl_->control_listen); }

void Server::preload(TaskDef def, std::optional<double> time_limit_sec) {
    impl_->session.load(std::move(def), time_limit_sec);
}

void Server::run() {
    if (impl_->agent_listen < 0) listen();
    impl_->run();
}

void Server::stop() {
    impl_->stop_requested = true;
    char b = 1;
    [[maybe_unused]] auto n = write(impl_->wake[1], &b, 1);
}

}  // namespace pal
