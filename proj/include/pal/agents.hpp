#pragma once

// Reference agents: a planner-driven POGO crafter and a BFS navigator for
// HUGA. Both talk to the server through a line transport only.

#include "pal/planner.hpp"
#include "pal/world.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace pal::agents {

// Sends one command line, returns the reply line. Throws when the peer is gone.
using Transport = std::function<std::string(const std::string&)>;

enum class Nav { Teleport, Walk };

struct SensedEntity {
    int id = 0;
    std::string kind;
    BlockPos pos;
    std::string item;
};

// The parts of a SENSE_ALL reply the agents use.
struct Sensed {
    std::map<BlockPos, std::string> blocks;
    std::set<BlockPos> accessible;
    BlockPos player;
    int yaw = 0;
    std::map<std::string, int> items;
    std::vector<SensedEntity> entities;
    std::string goal_type;
    std::optional<BlockPos> target_location;

    int count(const std::string& item) const {
        auto it = items.find(item);
        return it == items.end() ? 0 : it->second;
    }
};

Sensed parse_sense(const nlohmann::json& reply);

// Passable cells on one horizontal layer, 4-connected.
struct NavGraph {
    int y = 0;
    std::set<std::pair<int, int>> cells;  // (x, z)

    static NavGraph from(const Sensed& sensed);
    bool contains(const BlockPos& p) const { return p.y == y && cells.contains({p.x, p.z}); }
};

// Shortest path, excluding `from` and ending at `to`. Neighbours expand in
// N (+z), E (+x), S (-z), W (-x) order. nullopt when unreachable.
std::optional<std::vector<BlockPos>> bfs_path(const NavGraph& graph, const BlockPos& from, const BlockPos& to);

// Relative MOVE commands walking `path` from `from` without turning.
std::vector<std::string> walk_commands(const BlockPos& from, const std::vector<BlockPos>& path, int yaw);
// TURN that brings `yaw` to `target`, or nothing when already there.
std::optional<std::string> turn_command(int yaw, int target);

struct PogoProblem {
    std::string text;
    std::map<std::string, BlockPos> places;  // object name -> block position
};

// Object names are tree_<x>_<z>, table_<x>_<z> and stock_<i>.
PogoProblem build_pogo_problem(const Sensed& sensed);

class ExpansionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Low-level commands for one plan step, navigating with TP_TO.
std::vector<std::string> expand_macro(const planner::GroundAction& action, const PogoProblem& problem);

struct AgentOptions {
    Nav nav = Nav::Teleport;
    std::ostream* log = nullptr;
    int max_replans = 3;
    int phase_budget = 450;
    std::filesystem::path domain_file;  // empty: the shipped POGO domain
};

struct Outcome {
    bool game_over = false;
    bool goal_achieved = false;
    bool gave_up = false;
    int commands = 0;
};

// Plays the running instance until a gameOver envelope arrives. Does not send
// the acknowledgment.
Outcome play_pogo(const Transport& send, const AgentOptions& options);
Outcome play_huga(const Transport& send, const AgentOptions& options);

std::filesystem::path default_pogo_domain();

// Connects, starts, optionally resets into `task`, then plays every instance
// the server hands out until the connection closes. With a task, stops after
// that instance. Returns a process exit status.
int run_agent(const std::string& kind, const std::string& host, int port, const AgentOptions& options,
              const std::optional<std::filesystem::path>& task = std::nullopt);

}  // namespace pal::agents
