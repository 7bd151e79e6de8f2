#pragma once

// Task definitions: schema, JSON files, seeded POGO/HUGA generators and goal
// evaluation.

#include "pal/world.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pal {

inline constexpr int kTaskSchemaVersion = 1;

struct GoalSpec {
    std::string goal_type = "POGOSTICK";  // POGOSTICK | ITEM | BLOCK_TO_LOCATION
    std::optional<ItemId> target_item;
    std::optional<BlockPos> target_location;
    std::string distribution = "Uninformed";  // Uninformed | PreNovelty | Novelty

    bool operator==(const GoalSpec&) const = default;
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    bool operator==(const Rgb&) const = default;
};

using Palette = std::map<BlockId, Rgb>;

struct BlockPlacement {
    BlockPos pos;
    BlockId block;

    bool operator==(const BlockPlacement&) const = default;
};

struct TaskDef {
    std::string name;
    Arena arena;
    // When set, the bottom layer of the arena is filled with this block
    // before `blocks` are applied.
    std::optional<BlockId> floor;
    std::vector<BlockId> unbreakable;
    std::vector<BlockPlacement> blocks;
    std::vector<Entity> entities;
    BlockPos spawn;
    int spawn_yaw = 0;
    std::map<ItemId, int> inventory;
    std::vector<Recipe> recipes;
    std::optional<CostTable> costs;  // defaults when absent
    GoalSpec goal;
    double time_limit_sec = 300;
    std::uint64_t seed = 0;
    Palette palette;
    // Reserved for extended task families; carried through verbatim as JSON text.
    std::string extensions;

    bool operator==(const TaskDef&) const = default;
};

// Raised for files that are not well-formed JSON. Carries the position.
class TaskParseError : public std::runtime_error {
public:
    TaskParseError(const std::string& what, std::size_t line, std::size_t column)
        : std::runtime_error(what), line_(line), column_(column) {}
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

// Raised for well-formed files that violate the schema or task invariants.
class TaskSchemaError : public std::runtime_error {
public:
    TaskSchemaError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

std::string task_to_json(const TaskDef& def);
TaskDef task_from_json(std::string_view text);
TaskDef load_task(const std::filesystem::path& path);
void save_task(const TaskDef& def, const std::filesystem::path& path);

// Standalone cost configuration in the same JSON vocabulary as the task
// file's "costs" key. Missing keys keep their defaults.
std::string cost_table_to_json(const CostTable& costs);
CostTable cost_table_from_json(std::string_view text);

// Throws TaskSchemaError when placements leave the arena, the spawn is blocked
// or the goal lacks the fields its type needs.
void validate(const TaskDef& def);

Rules rules_for(const TaskDef& def);
WorldState initial_state(const TaskDef& def);

std::vector<Recipe> pogo_recipes();
TaskDef generate_pogo(std::uint64_t seed);
TaskDef generate_huga(std::uint64_t seed);

// Fixed room geometry of the HUGA arena, shared with tests and the agent.
namespace huga {
inline constexpr int kSize = 32;
inline constexpr int kRoom = 14;
// Along each horizontal axis: 0 bedrock | 1..14 room | 15 inner wall |
// 16 open alignment row | 17..30 room | 31 bedrock.
inline constexpr int kWall = 15;
inline constexpr int kLowRoomMin = 1;
inline constexpr int kHighRoomMin = 17;
inline constexpr int kFloorY = 3;
inline constexpr int kGroundY = 4;

struct RoomBounds {
    int x0, x1, z0, z1;  // inclusive
    bool contains(const BlockPos& p) const { return p.x >= x0 && p.x <= x1 && p.z >= z0 && p.z <= z1; }
};
// Rooms as laid out on the top-down raster (+z at the top):
// 1 bottom-left, 2 top-left, 3 top-right, 4 bottom-right.
RoomBounds room(int number);
}  // namespace huga

namespace pogo {
inline constexpr int kSize = 32;
inline constexpr int kFloorY = 3;
inline constexpr int kGroundY = 4;
inline constexpr int kTrees = 5;
}  // namespace pogo

// True when the goal holds in `state`. Callers that need the latched
// (monotone) view wrap this in a GoalTracker.
bool goal_check(const TaskDef& def, const WorldState& state);

class GoalTracker {
public:
    explicit GoalTracker(const TaskDef& def) : def_(&def) {}
    bool update(const WorldState& state) {
        achieved_ = achieved_ || goal_check(*def_, state);
        return achieved_;
    }
    bool achieved() const { return achieved_; }

private:
    const TaskDef* def_;
    bool achieved_ = false;
};

// <TASK>_L<..>_T<..>_S<..>_X<..>_U<..>_V<..>_G<..>_I<..>_N<..>
struct InstanceName {
    std::string task;
    std::string level;
    std::string tournament;
    std::string seed;
    std::string count;
    std::string u;
    std::string v;
    std::string g;
    std::string instance;
    std::string n;

    bool operator==(const InstanceName&) const = default;
};

std::string format_instance_name(const InstanceName& name);
InstanceName parse_instance_name(std::string_view text);

// Writes `count` instances into `dir`; returns the written paths sorted.
std::vector<std::filesystem::path> generate_instances(const std::string& task, std::uint64_t base_seed,
                                                      int count, const std::filesystem::path& dir);

// Deterministic 64-bit generator used by the generators. Independent of the
// standard library's distribution implementations.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    // Uniform in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    int range(int lo, int hi_inclusive) {
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi_inclusive - lo + 1)));
    }

private:
    std::uint64_t state_;
};

}  // namespace pal
