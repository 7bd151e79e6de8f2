#pragma once

// Grid-world state and the transition function for every movement and
// interaction command.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pal {

struct BlockPos {
    int x = 0;
    int y = 0;
    int z = 0;

    auto operator<=>(const BlockPos&) const = default;
};

// "x,y,z"
std::string to_string(const BlockPos& p);
BlockPos parse_block_pos(std::string_view text);

double distance(const BlockPos& a, const BlockPos& b);

// Namespaced identifier, e.g. "minecraft:log". Used for both blocks and items.
class BlockId {
public:
    BlockId() : value_("minecraft:air") {}
    explicit BlockId(std::string value);

    static bool is_valid(std::string_view text);

    const std::string& str() const { return value_; }
    bool is_air() const { return value_ == "minecraft:air"; }

    auto operator<=>(const BlockId&) const = default;

private:
    std::string value_;
};

using ItemId = BlockId;

namespace ids {
inline const BlockId air{"minecraft:air"};
inline const BlockId bedrock{"minecraft:bedrock"};
inline const BlockId grass{"minecraft:grass"};
inline const BlockId log{"minecraft:log"};
inline const BlockId planks{"minecraft:planks"};
inline const BlockId stick{"minecraft:stick"};
inline const BlockId crafting_table{"minecraft:crafting_table"};
inline const BlockId iron_pickaxe{"minecraft:iron_pickaxe"};
inline const BlockId tree_tap{"polycraft:tree_tap"};
inline const BlockId sack{"polycraft:sack_polyisoprene_pellets"};
inline const BlockId pogo_stick{"polycraft:wooden_pogo_stick"};
inline const BlockId macguffin{"polycraft:macguffin"};
inline const BlockId target{"polycraft:target"};
inline const BlockId stone{"minecraft:stone"};
inline const BlockId wool{"minecraft:wool"};
}  // namespace ids

// Axis-aligned box of valid block positions.
struct Arena {
    BlockPos min;
    int width = 0;   // x extent
    int height = 0;  // y extent
    int depth = 0;   // z extent

    bool contains(const BlockPos& p) const {
        return p.x >= min.x && p.x < min.x + width && p.y >= min.y && p.y < min.y + height &&
               p.z >= min.z && p.z < min.z + depth;
    }

    auto operator<=>(const Arena&) const = default;
};

class WorldGrid {
public:
    WorldGrid() = default;
    explicit WorldGrid(Arena arena) : arena_(arena) {}

    const Arena& arena() const { return arena_; }
    bool in_bounds(const BlockPos& p) const { return arena_.contains(p); }

    // Air for empty or out-of-bounds cells.
    const BlockId& at(const BlockPos& p) const;
    // Throws std::out_of_range for positions outside the arena.
    void set(const BlockPos& p, const BlockId& id);

    // In bounds and not solid. Only air and open doors are walkable.
    bool passable(const BlockPos& p) const;

    void set_unbreakable(std::set<BlockId> ids) { unbreakable_ = std::move(ids); }
    const std::set<BlockId>& unbreakable() const { return unbreakable_; }
    bool is_unbreakable(const BlockId& id) const { return unbreakable_.contains(id); }

    const std::map<BlockPos, BlockId>& cells() const { return cells_; }

    bool operator==(const WorldGrid&) const = default;

private:
    Arena arena_;
    std::map<BlockPos, BlockId> cells_;
    std::set<BlockId> unbreakable_;
};

struct AgentPose {
    BlockPos pos;
    int yaw = 0;    // degrees, multiple of 15 in [0, 360); 0 faces +z, 90 faces +x
    int pitch = 0;  // 0 or -45

    bool operator==(const AgentPose&) const = default;
};

class Inventory {
public:
    int count(const ItemId& item) const;
    void add(const ItemId& item, int n = 1);
    // Throws std::logic_error when fewer than n are held.
    void remove(const ItemId& item, int n = 1);

    const std::map<ItemId, int>& items() const { return items_; }
    const std::optional<ItemId>& selected() const { return selected_; }
    void select(const ItemId& item);

    bool operator==(const Inventory&) const = default;

private:
    std::map<ItemId, int> items_;
    std::optional<ItemId> selected_;
};

inline constexpr std::string_view kEmptySlot = "0";

struct ItemStack {
    ItemId item;
    int count = 1;

    bool operator==(const ItemStack&) const = default;
};

struct Recipe {
    std::vector<std::string> grid;  // 4 or 9 entries, "0" marks an empty slot
    ItemStack output;

    bool is_table_recipe() const { return grid.size() == 9; }
    std::map<ItemId, int> ingredients() const;
    int filled_slots() const;

    bool operator==(const Recipe&) const = default;
};

void validate(const Recipe& recipe);

struct Entity {
    int id = 0;
    std::string kind;  // "item-entity" or "npc"
    BlockPos pos;
    std::optional<ItemId> item;

    bool operator==(const Entity&) const = default;
};

inline constexpr std::string_view kItemEntity = "item-entity";
inline constexpr std::string_view kNpc = "npc";

struct ActorAction {
    int entity_id = 0;
    std::string action;

    bool operator==(const ActorAction&) const = default;
};

// Per-command charges. Teleport and diagonal costs are derived from `move`, so
// the distance rules cannot be broken by a loaded table.
struct CostTable {
    double move = 12;
    double turn = 3;
    double tilt = 3;
    double break_block = 600;
    double place = 120;
    double craft_per_slot = 120;
    double extract_rubber = 120;
    double select_item = 120;
    double use = 120;
    double collect = 120;
    double delete_item = 120;
    double interact = 120;
    double trade = 120;
    double nop = 0;
    double sense = 0;
    double check_cost = 0;
    double report_novelty = 0;
    double give_up = 0;
    // Hooks for block- and tool-dependent break costs. An entry in
    // break_by_block replaces break_block; the tool factor multiplies it.
    std::map<BlockId, double> break_by_block;
    std::map<ItemId, double> break_tool_factor;

    double teleport(double euclidean_distance) const { return move * euclidean_distance; }
    double break_cost(const BlockId& block, const std::optional<ItemId>& tool) const;

    bool operator==(const CostTable&) const = default;
};

// Throws std::invalid_argument naming the offending entry.
void validate(const CostTable& costs);

struct Rules {
    std::vector<Recipe> recipes;
    CostTable costs;
};

enum class Outcome { Success, Fail };

struct CommandResult {
    std::string command;   // lower-cased verb
    std::string argument;  // raw argument text
    Outcome result = Outcome::Success;
    std::string message;
    double step_cost = 0;

    bool ok() const { return result == Outcome::Success; }
};

struct WorldState {
    WorldGrid grid;
    AgentPose agent;
    Inventory inventory;
    std::vector<Entity> entities;
    double cumulative_cost = 0;
    std::int64_t step = 0;
    std::vector<ActorAction> actor_actions;

    const Entity* find_entity(int id) const;
    bool occupied_by_entity(const BlockPos& p) const;
    // Walkable: passable grid cell without a blocking (non-item) entity.
    bool walkable(const BlockPos& p) const;

    bool operator==(const WorldState&) const = default;
};

// Unit step (dx, dz) for a heading in degrees, snapped to the nearest 45.
struct Heading {
    int dx = 0;
    int dz = 0;
};
Heading heading_for_yaw(int yaw);

enum class MoveDir { Forward, Left, Right, Back, ForwardLeft, ForwardRight, BackLeft, BackRight };
std::optional<MoveDir> parse_move_dir(std::string_view token);
char move_key(MoveDir dir);

enum class TiltMode { Forward, Down };

// The cell one block ahead of the agent along its yaw, at foot level.
BlockPos facing_cell(const WorldState& state);

// Transition functions. Each one applies its effect (if any), adds the charged
// step cost to state.cumulative_cost and returns the outcome. Failed commands
// are still charged.
CommandResult apply_move(WorldState& state, const Rules& rules, MoveDir dir);
CommandResult apply_turn(WorldState& state, const Rules& rules, int delta);
CommandResult apply_tilt(WorldState& state, const Rules& rules, TiltMode mode);
CommandResult apply_tp_to(WorldState& state, const Rules& rules, const BlockPos& target,
                          int distance = 1);
CommandResult apply_tp_to_entity(WorldState& state, const Rules& rules, int entity_id);
CommandResult apply_break_block(WorldState& state, const Rules& rules);
CommandResult apply_select_item(WorldState& state, const Rules& rules, const ItemId& item);
CommandResult apply_craft(WorldState& state, const Rules& rules,
                          const std::vector<std::string>& slots);
CommandResult apply_place(WorldState& state, const Rules& rules, const ItemId& item);
CommandResult apply_extract_rubber(WorldState& state, const Rules& rules);

enum class MiscCommand { UseHand, Use, Collect, Delete, Interact, Trade, Nop };
CommandResult apply_misc(WorldState& state, const Rules& rules, MiscCommand command,
                         std::string_view argument = {});

double check_cost(const WorldState& state);

// Adds a charge for commands handled outside the transition functions
// (sensing, game commands, malformed input).
void charge(WorldState& state, double cost);

}  // namespace pal
