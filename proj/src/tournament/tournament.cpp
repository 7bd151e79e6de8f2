#include "pal/tournament.hpp"

#include "pal/client.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pal {

using nlohmann::json;
namespace fs = std::filesystem;

void TournamentConfig::validate() const {
    if (games < 1) throw std::invalid_argument("game count must be >= 1");
    if (seconds_per_game < 1) throw std::invalid_argument("seconds per game must be >= 1");
    if (max_minutes <= 0) throw std::invalid_argument("max tournament minutes must be > 0");
    if (agent_command.empty()) throw std::invalid_argument("agent command is required");
    if (games_dir.empty()) throw std::invalid_argument("games folder is required");
}

json to_json(const InstanceRecord& r) {
    return {{"instance", r.instance},           {"start", r.start},
            {"end", r.end},                     {"endReason", r.end_reason},
            {"steps", r.steps},                 {"cost", r.cost},
            {"goalAchieved", r.goal_achieved},  {"noveltyReports", r.novelty_reports},
            {"wallSeconds", r.wall_seconds}};
}

double TournamentSummary::success_rate() const {
    if (records.empty()) return 0;
    auto n = std::count_if(records.begin(), records.end(), [](const InstanceRecord& r) { return r.goal_achieved; });
    return static_cast<double>(n) / static_cast<double>(records.size());
}

std::string ready_line(int agent_port, int control_port) {
    return "READY agent=" + std::to_string(agent_port) + " control=" + std::to_string(control_port);
}

namespace {

using Clock = std::chrono::steady_clock;

std::string iso_now() {
    auto now = std::chrono::system_clock::now();
    auto t = std::chrono::system_clock::to_time_t(now);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03lldZ", buf, static_cast<long long>(ms));
    return out;
}

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

// A child in its own process group with stdout and stderr on one pipe.
struct Child {
    pid_t pid = -1;
    int out = -1;
    std::optional<int> status;

    static Child spawn(const std::vector<std::string>& argv, const fs::path& cwd,
                       const std::vector<std::pair<std::string, std::string>>& env) {
        int fds[2];
        if (pipe2(fds, O_CLOEXEC) != 0) throw std::runtime_error("pipe failed");
        pid_t pid = fork();
        if (pid < 0) throw std::runtime_error("fork failed");
        if (pid == 0) {
            setpgid(0, 0);
            dup2(fds[1], 1);
            dup2(fds[1], 2);
            if (!cwd.empty() && chdir(cwd.c_str()) != 0) _exit(126);
            for (const auto& [k, v] : env) setenv(k.c_str(), v.c_str(), 1);
            std::vector<char*> args;
            for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
            args.push_back(nullptr);
            execvp(args[0], args.data());
            _exit(127);
        }
        setpgid(pid, pid);
        close(fds[1]);
        return {pid, fds[0], std::nullopt};
    }

    bool running() {
        if (pid < 0 || status) return false;
        int st = 0;
        if (waitpid(pid, &st, WNOHANG) == pid) status = st;
        return !status;
    }

    // SIGTERM to the group, SIGKILL after `grace` seconds.
    void stop(double grace = 2.0) {
        if (pid < 0) return;
        if (running()) {
            kill(-pid, SIGTERM);
            auto t = Clock::now();
            while (running() && since(t) < grace) std::this_thread::sleep_for(std::chrono::milliseconds(10));
            if (running()) {
                kill(-pid, SIGKILL);
                int st = 0;
                waitpid(pid, &st, 0);
                status = st;
            }
        }
        kill(-pid, SIGKILL);  // stragglers left in the group
    }

    std::string describe_exit() const {
        if (!status) return "running";
        if (WIFEXITED(*status)) return "exit status " + std::to_string(WEXITSTATUS(*status));
        if (WIFSIGNALED(*status)) return "signal " + std::to_string(WTERMSIG(*status));
        return "unknown status";
    }
};

// Reads lines from a pipe on a background thread.
class LineReader {
public:
    LineReader(int fd, std::string pending, std::function<void(const std::string&)> sink)
        : fd_(fd), thread_([this, pending = std::move(pending), sink = std::move(sink)]() mutable {
              std::string buf = std::move(pending);
              char chunk[4096];
              for (;;) {
                  std::size_t nl;
                  while ((nl = buf.find('\n')) != std::string::npos) {
                      sink(buf.substr(0, nl));
                      buf.erase(0, nl + 1);
                  }
                  ssize_t n = read(fd_, chunk, sizeof chunk);
                  if (n < 0 && errno == EINTR) continue;
                  if (n <= 0) break;
                  buf.append(chunk, static_cast<std::size_t>(n));
              }
              if (!buf.empty()) sink(buf);
          }) {}
    ~LineReader() { join(); }
    void join() {
        if (thread_.joinable()) thread_.join();
        if (fd_ >= 0) close(fd_);
        fd_ = -1;
    }

private:
    int fd_;
    std::thread thread_;
};

// Reads the server's first line, skipping nothing. Returns the line and any
// bytes read past it.
std::pair<std::string, std::string> read_first_line(int fd, double timeout_sec) {
    std::string buf;
    auto start = Clock::now();
    for (;;) {
        auto nl = buf.find('\n');
        if (nl != std::string::npos) return {buf.substr(0, nl), buf.substr(nl + 1)};
        double left = timeout_sec - since(start);
        if (left <= 0) throw std::runtime_error("server did not report ready");
        pollfd p{fd, POLLIN, 0};
        if (poll(&p, 1, static_cast<int>(left * 1000) + 1) <= 0) continue;
        char chunk[1024];
        ssize_t n = read(fd, chunk, sizeof chunk);
        if (n <= 0) throw std::runtime_error("server exited before reporting ready: " + buf);
        buf.append(chunk, static_cast<std::size_t>(n));
    }
}

// Per-instance files for the three tracks plus the tournament-level manager log.
class Tracks {
public:
    Tracks(fs::path dir, std::vector<std::string> stems) : dir_(std::move(dir)), stems_(std::move(stems)) {
        overall_.open(dir_ / "manager.log", std::ios::app);
    }

    void manager(const std::string& text) {
        std::lock_guard lock(mu_);
        std::string line = iso_now() + " " + text;
        overall_ << line << std::endl;
        if (auto* f = file("manager", current_)) *f << line << std::endl;
    }
    void game(const std::string& line) {
        std::lock_guard lock(mu_);
        // The game track rolls over on the server's own LOAD lines.
        if (line.starts_with("LOAD ")) {
            if (seen_load_) ++game_index_;
            seen_load_ = true;
        }
        if (auto* f = file("game", game_index_)) *f << line << std::endl;
    }
    void agent(const std::string& line) {
        std::lock_guard lock(mu_);
        if (auto* f = file("agent", current_)) *f << iso_now() << " " << line << std::endl;
    }
    void roll_to(std::size_t instance) {
        std::lock_guard lock(mu_);
        current_ = instance;
    }

private:
    std::ofstream* file(const std::string& track, std::size_t index) {
        if (index >= stems_.size()) return nullptr;
        auto key = std::make_pair(track, index);
        auto it = files_.find(key);
        if (it == files_.end()) {
            it = files_.emplace(key, std::ofstream(dir_ / (stems_[index] + "." + track + ".log"), std::ios::app)).first;
        }
        return &it->second;
    }

    std::mutex mu_;
    fs::path dir_;
    std::vector<std::string> stems_;
    std::ofstream overall_;
    std::map<std::pair<std::string, std::size_t>, std::ofstream> files_;
    std::size_t current_ = 0;
    std::size_t game_index_ = 0;
    bool seen_load_ = false;
};

std::string self_exe() {
    std::error_code ec;
    auto p = fs::read_symlink("/proc/self/exe", ec);
    if (ec) throw std::runtime_error("cannot locate own executable");
    return p.string();
}

void write_summaries(const TournamentConfig& config, const TournamentSummary& s) {
    std::ofstream csv(config.output_dir / "summary.csv", std::ios::trunc);
    csv << "instance,end_reason,steps,cost,success\n";
    for (const auto& r : s.records) {
        std::ostringstream cost;
        cost << r.cost;
        csv << r.instance << ',' << r.end_reason << ',' << r.steps << ',' << cost.str() << ','
            << (r.goal_achieved ? 1 : 0) << '\n';
    }
    json j{{"tournament", config.name},
           {"agent", config.agent_name},
           {"gamesRequested", config.games},
           {"gamesPlayed", s.records.size()},
           {"complete", s.complete},
           {"abortReason", s.abort_reason},
           {"successRate", s.success_rate()},
           {"wallSeconds", s.wall_seconds}};
    std::ofstream(config.output_dir / "summary.json", std::ios::trunc) << j.dump(2) << '\n';
}

}  // namespace

TournamentSummary run_tournament(const TournamentConfig& config) {
    config.validate();
    const auto started = Clock::now();
    TournamentSummary summary;

    std::vector<fs::path> games;
    if (fs::is_directory(config.games_dir)) {
        for (const auto& e : fs::directory_iterator(config.games_dir)) {
            if (e.is_regular_file() && e.path().extension() == ".json") games.push_back(fs::absolute(e.path()));
        }
    }
    std::sort(games.begin(), games.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
    });
    fs::create_directories(config.output_dir);
    std::vector<std::string> stems;
    for (int i = 0; i < std::min<int>(config.games, static_cast<int>(games.size())); ++i) {
        stems.push_back(games[i].stem().string());
    }
    Tracks tracks(config.output_dir, stems);
    std::ofstream results(config.output_dir / "results.jsonl", std::ios::trunc);

    auto finish = [&](std::string abort_reason) {
        summary.complete = abort_reason.empty();
        summary.abort_reason = std::move(abort_reason);
        summary.wall_seconds = since(started);
        tracks.manager(summary.complete ? "tournament complete"
                                        : "tournament aborted: " + summary.abort_reason);
        write_summaries(config, summary);
        return summary;
    };

    tracks.manager("tournament " + config.name + " agent " + config.agent_name);
    if (static_cast<int>(games.size()) < config.games) {
        return finish("games folder " + config.games_dir.string() + " holds " + std::to_string(games.size()) +
                      " instances, " + std::to_string(config.games) + " requested");
    }

    std::vector<std::string> server_argv = config.server_command;
    if (server_argv.empty()) {
        server_argv = {self_exe(), "serve", "--agent-port", "0", "--control-port", "0", "--fps",
                       std::to_string(config.fps)};
    }
    Child server;
    Child agent;
    std::unique_ptr<LineReader> server_reader;
    std::unique_ptr<LineReader> agent_reader;
    LineClient control;

    auto cleanup = [&] {
        if (agent.pid > 0) {
            agent.stop();
            tracks.manager("agent stopped: " + agent.describe_exit());
        }
        if (control.connected()) {
            try {
                control.request(R"({"cmd":"SHUTDOWN"})", 5);
            } catch (const std::exception&) {
            }
            control.close();
        }
        if (server.pid > 0) {
            auto t = Clock::now();
            while (server.running() && since(t) < 5) std::this_thread::sleep_for(std::chrono::milliseconds(10));
            server.stop();
        }
        if (agent_reader) agent_reader->join();
        if (server_reader) server_reader->join();
    };

    try {
        server = Child::spawn(server_argv, {}, {});
        auto [first, rest] = read_first_line(server.out, 10);
        int agent_port = 0, control_port = 0;
        if (std::sscanf(first.c_str(), "READY agent=%d control=%d", &agent_port, &control_port) != 2) {
            throw std::runtime_error("unexpected server greeting: " + first);
        }
        tracks.manager("server pid " + std::to_string(server.pid) + " agent port " + std::to_string(agent_port) +
                       " control port " + std::to_string(control_port));
        server_reader = std::make_unique<LineReader>(server.out, rest, [&](const std::string& l) { tracks.game(l); });
        control.connect("127.0.0.1", control_port, 10);

        auto status = [&] { return control.request_json(R"({"cmd":"STATUS"})", 10); };
        auto load = [&](std::size_t i) {
            json msg{{"cmd", "LOAD"}, {"path", games[i].string()}, {"timeLimitSec", config.seconds_per_game}};
            json r = control.request_json(msg.dump(), 10);
            if (!r.value("ok", false)) throw std::runtime_error("LOAD " + stems[i] + " failed: " + r.value("error", ""));
            tracks.manager("loaded " + stems[i]);
        };

        load(0);
        agent = Child::spawn({"/bin/sh", "-c", config.agent_command}, config.agent_dir,
                             {{"PAL_AGENT_PORT", std::to_string(agent_port)}, {"PAL_HOST", "127.0.0.1"}});
        tracks.manager("agent launched pid " + std::to_string(agent.pid) + ": " + config.agent_command);
        agent_reader = std::make_unique<LineReader>(agent.out, "", [&](const std::string& l) { tracks.agent(l); });
        agent.out = -1;  // owned by the reader

        const double watchdog = config.watchdog_factor * config.seconds_per_game;
        const double cap = config.max_minutes * 60;
        std::string abort_reason;
        for (std::size_t i = 0; i < stems.size() && abort_reason.empty(); ++i) {
            if (i > 0) {
                tracks.roll_to(i);
                load(i);
            }
            InstanceRecord rec;
            rec.instance = stems[i];
            rec.start = iso_now();
            const auto t0 = Clock::now();
            auto progress_at = Clock::now();
            long long last_step = -1;
            std::string last_phase;
            json st;
            // Phase one: until an ending condition fires.
            for (;;) {
                st = status();
                long long step = st.value("step", 0LL);
                std::string phase = st.value("phase", "");
                if (step != last_step || phase != last_phase) progress_at = Clock::now();
                last_step = step;
                last_phase = phase;
                const bool loaded_this = st.value("loads", 0) == static_cast<int>(i) + 1;
                if (loaded_this && !st["endReason"].is_null()) break;
                std::string stop_why;
                if (!agent.running()) stop_why = "agent exited (" + agent.describe_exit() + ")";
                else if (since(progress_at) > watchdog) stop_why = "watchdog: no progress for " + std::to_string(watchdog) + " s";
                else if (since(started) > cap) stop_why = "tournament time cap reached";
                if (!stop_why.empty()) {
                    abort_reason = stop_why;
                    tracks.manager(stop_why);
                    agent.stop();
                    // The server notices the dropped connection and ends the instance.
                    for (int k = 0; k < 50; ++k) {
                        st = status();
                        if (!st["endReason"].is_null()) break;
                        std::this_thread::sleep_for(std::chrono::milliseconds(20));
                    }
                    break;
                }
                std::this_thread::sleep_for(std::chrono::duration<double>(config.poll_interval));
            }
            // A dropped connection ends the instance before the process is reaped.
            if (abort_reason.empty() && !st.value("agentConnected", true)) {
                auto t = Clock::now();
                while (agent.running() && since(t) < 2.0) std::this_thread::sleep_for(std::chrono::milliseconds(10));
                abort_reason = agent.running() ? "agent disconnected" : "agent exited (" + agent.describe_exit() + ")";
                tracks.manager(abort_reason);
            }
            rec.end = iso_now();
            rec.wall_seconds = since(t0);
            rec.end_reason = st["endReason"].is_null() ? "NONRESPONSIVE" : st["endReason"].get<std::string>();
            rec.steps = st.value("step", 0LL);
            rec.cost = st.value("cost", 0.0);
            rec.goal_achieved = rec.end_reason == "GOAL";
            rec.novelty_reports = st.value("noveltyReports", json::array());
            results << to_json(rec).dump() << std::endl;
            summary.records.push_back(rec);
            tracks.manager("instance " + rec.instance + " ended " + rec.end_reason + " steps " +
                           std::to_string(rec.steps));
            if (!abort_reason.empty() || i + 1 == stems.size()) break;

            // Phase two: wait for the acknowledgment before loading the next one.
            auto ack_wait = Clock::now();
            for (;;) {
                st = status();
                if (st.value("phase", "") == "AwaitingReset") break;
                if (!agent.running()) abort_reason = "agent exited (" + agent.describe_exit() + ")";
                else if (since(ack_wait) > watchdog) abort_reason = "watchdog: no acknowledgment";
                else if (since(started) > cap) abort_reason = "tournament time cap reached";
                if (!abort_reason.empty()) {
                    tracks.manager(abort_reason);
                    break;
                }
                std::this_thread::sleep_for(std::chrono::duration<double>(config.poll_interval));
            }
        }
        cleanup();
        return finish(abort_reason);
    } catch (const std::exception& e) {
        tracks.manager(std::string("error: ") + e.what());
        cleanup();
        return finish(e.what());
    }
}

}  // namespace pal
