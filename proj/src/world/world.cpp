#include "pal/world.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace pal {

std::string to_string(const BlockPos& p) {
    return std::to_string(p.x) + "," + std::to_string(p.y) + "," + std::to_string(p.z);
}

namespace {

int parse_int(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
    }
    return value;
}

}  // namespace

BlockPos parse_block_pos(std::string_view text) {
    auto first = text.find(',');
    auto second = first == std::string_view::npos ? first : text.find(',', first + 1);
    if (second == std::string_view::npos || text.find(',', second + 1) != std::string_view::npos) {
        throw std::invalid_argument("expected x,y,z: '" + std::string(text) + "'");
    }
    return {parse_int(text.substr(0, first)), parse_int(text.substr(first + 1, second - first - 1)),
            parse_int(text.substr(second + 1))};
}

double distance(const BlockPos& a, const BlockPos& b) {
    double dx = a.x - b.x;
    double dy = a.y - b.y;
    double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

BlockId::BlockId(std::string value) : value_(std::move(value)) {
    if (!is_valid(value_)) throw std::invalid_argument("malformed identifier: '" + value_ + "'");
}

bool BlockId::is_valid(std::string_view text) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) return false;
    auto ok = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-' ||
               c == '/';
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (i != colon && !ok(text[i])) return false;
    }
    return true;
}

const BlockId& WorldGrid::at(const BlockPos& p) const {
    auto it = cells_.find(p);
    return it == cells_.end() ? ids::air : it->second;
}

void WorldGrid::set(const BlockPos& p, const BlockId& id) {
    if (!in_bounds(p)) throw std::out_of_range("block position out of arena: " + to_string(p));
    if (id.is_air()) {
        cells_.erase(p);
    } else {
        cells_[p] = id;
    }
}

namespace {

bool is_open_door(const BlockId& id) {
    const auto& s = id.str();
    return s.size() > 10 && s.ends_with("_door_open");
}

}  // namespace

bool WorldGrid::passable(const BlockPos& p) const {
    if (!in_bounds(p)) return false;
    const auto& id = at(p);
    return id.is_air() || is_open_door(id);
}

int Inventory::count(const ItemId& item) const {
    auto it = items_.find(item);
    return it == items_.end() ? 0 : it->second;
}

void Inventory::add(const ItemId& item, int n) {
    if (n < 0) throw std::invalid_argument("negative inventory delta");
    if (n == 0) return;
    items_[item] += n;
}

void Inventory::remove(const ItemId& item, int n) {
    auto it = items_.find(item);
    if (it == items_.end() || it->second < n) {
        throw std::logic_error("not enough " + item.str() + " in inventory");
    }
    it->second -= n;
    if (it->second == 0) {
        items_.erase(it);
        if (selected_ == item) selected_.reset();
    }
}

void Inventory::select(const ItemId& item) {
    if (count(item) < 1) throw std::logic_error("cannot select absent item " + item.str());
    selected_ = item;
}

std::map<ItemId, int> Recipe::ingredients() const {
    std::map<ItemId, int> out;
    for (const auto& slot : grid) {
        if (slot != kEmptySlot) ++out[ItemId(slot)];
    }
    return out;
}

int Recipe::filled_slots() const {
    return static_cast<int>(std::count_if(grid.begin(), grid.end(),
                                          [](const std::string& s) { return s != kEmptySlot; }));
}

void validate(const Recipe& recipe) {
    if (recipe.grid.size() != 4 && recipe.grid.size() != 9) {
        throw std::invalid_argument("recipe grid must have 4 or 9 slots");
    }
    for (const auto& slot : recipe.grid) {
        if (slot != kEmptySlot && !BlockId::is_valid(slot)) {
            throw std::invalid_argument("recipe slot is not an item id: '" + slot + "'");
        }
    }
    if (recipe.output.count < 1) throw std::invalid_argument("recipe output count must be >= 1");
}

double CostTable::break_cost(const BlockId& block, const std::optional<ItemId>& tool) const {
    double base = break_block;
    if (auto it = break_by_block.find(block); it != break_by_block.end()) base = it->second;
    if (tool) {
        if (auto it = break_tool_factor.find(*tool); it != break_tool_factor.end()) base *= it->second;
    }
    return base;
}

void validate(const CostTable& c) {
    auto check = [](const char* name, double v) {
        if (!std::isfinite(v) || v < 0) {
            throw std::invalid_argument(std::string("cost '") + name + "' must be a non-negative number");
        }
    };
    check("move", c.move);
    check("turn", c.turn);
    check("tilt", c.tilt);
    check("breakBlock", c.break_block);
    check("place", c.place);
    check("craftPerSlot", c.craft_per_slot);
    check("extractRubber", c.extract_rubber);
    check("selectItem", c.select_item);
    check("use", c.use);
    check("collect", c.collect);
    check("delete", c.delete_item);
    check("interact", c.interact);
    check("trade", c.trade);
    check("nop", c.nop);
    check("sense", c.sense);
    check("checkCost", c.check_cost);
    check("reportNovelty", c.report_novelty);
    check("giveUp", c.give_up);
    for (const auto& [id, v] : c.break_by_block) check(id.str().c_str(), v);
    for (const auto& [id, v] : c.break_tool_factor) check(id.str().c_str(), v);
    if (c.select_item != 120) throw std::invalid_argument("cost 'selectItem' must be exactly 120");
    if (c.nop != 0) throw std::invalid_argument("cost 'nop' must be exactly 0");
}

const Entity* WorldState::find_entity(int id) const {
    auto it = std::find_if(entities.begin(), entities.end(), [id](const Entity& e) { return e.id == id; });
    return it == entities.end() ? nullptr : &*it;
}

bool WorldState::occupied_by_entity(const BlockPos& p) const {
    return std::any_of(entities.begin(), entities.end(), [&](const Entity& e) { return e.pos == p; });
}

bool WorldState::walkable(const BlockPos& p) const {
    if (!grid.passable(p)) return false;
    return std::none_of(entities.begin(), entities.end(),
                        [&](const Entity& e) { return e.pos == p && e.kind != kItemEntity; });
}

Heading heading_for_yaw(int yaw) {
    static constexpr Heading kOctants[8] = {{0, 1}, {1, 1}, {1, 0}, {1, -1},
                                            {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}};
    int norm = ((yaw % 360) + 360) % 360;
    // Yaws are multiples of 15, so no heading ever sits on an octant boundary.
    return kOctants[((norm + 22) / 45) % 8];
}

std::optional<MoveDir> parse_move_dir(std::string_view token) {
    if (token.size() != 1) return std::nullopt;
    switch (token[0] | 0x20) {
        case 'w': return MoveDir::Forward;
        case 'a': return MoveDir::Left;
        case 'd': return MoveDir::Right;
        case 'x': return MoveDir::Back;
        case 'q': return MoveDir::ForwardLeft;
        case 'e': return MoveDir::ForwardRight;
        case 'z': return MoveDir::BackLeft;
        case 'c': return MoveDir::BackRight;
        default: return std::nullopt;
    }
}

char move_key(MoveDir dir) {
    switch (dir) {
        case MoveDir::Forward: return 'w';
        case MoveDir::Left: return 'a';
        case MoveDir::Right: return 'd';
        case MoveDir::Back: return 'x';
        case MoveDir::ForwardLeft: return 'q';
        case MoveDir::ForwardRight: return 'e';
        case MoveDir::BackLeft: return 'z';
        case MoveDir::BackRight: return 'c';
    }
    return '?';
}

BlockPos facing_cell(const WorldState& state) {
    auto h = heading_for_yaw(state.agent.yaw);
    const auto& p = state.agent.pos;
    return {p.x + h.dx, p.y, p.z + h.dz};
}

void charge(WorldState& state, double cost) { state.cumulative_cost += cost; }

double check_cost(const WorldState& state) { return state.cumulative_cost; }

namespace {

CommandResult settle(WorldState& state, std::string command, double cost, std::string fail_message = {},
                     std::string success_message = {}) {
    CommandResult r;
    r.command = std::move(command);
    r.step_cost = cost;
    if (fail_message.empty()) {
        r.result = Outcome::Success;
        r.message = std::move(success_message);
    } else {
        r.result = Outcome::Fail;
        r.message = std::move(fail_message);
    }
    charge(state, cost);
    return r;
}

int yaw_offset(MoveDir dir) {
    switch (dir) {
        case MoveDir::Forward: return 0;
        case MoveDir::ForwardRight: return 45;
        case MoveDir::Right: return 90;
        case MoveDir::BackRight: return 135;
        case MoveDir::Back: return 180;
        case MoveDir::BackLeft: return 225;
        case MoveDir::Left: return 270;
        case MoveDir::ForwardLeft: return 315;
    }
    return 0;
}

void pick_up_item_entities(WorldState& state, const BlockPos& at) {
    auto& es = state.entities;
    for (auto it = es.begin(); it != es.end();) {
        if (it->pos == at && it->kind == kItemEntity) {
            if (it->item) state.inventory.add(*it->item);
            it = es.erase(it);
        } else {
            ++it;
        }
    }
}

bool has_adjacent(const WorldGrid& grid, const BlockPos& p, const BlockId& id) {
    static constexpr int kDx[4] = {1, -1, 0, 0};
    static constexpr int kDz[4] = {0, 0, 1, -1};
    for (int i = 0; i < 4; ++i) {
        if (grid.at({p.x + kDx[i], p.y, p.z + kDz[i]}) == id) return true;
    }
    return false;
}

bool crafting_table_near(const WorldState& state, double radius) {
    const auto& me = state.agent.pos;
    int r = static_cast<int>(std::ceil(radius));
    for (int dx = -r; dx <= r; ++dx) {
        for (int dy = -r; dy <= r; ++dy) {
            for (int dz = -r; dz <= r; ++dz) {
                BlockPos p{me.x + dx, me.y + dy, me.z + dz};
                if (distance(me, p) <= radius && state.grid.at(p) == ids::crafting_table) return true;
            }
        }
    }
    return false;
}

}  // namespace

CommandResult apply_move(WorldState& state, const Rules& rules, MoveDir dir) {
    auto h = heading_for_yaw(state.agent.yaw + yaw_offset(dir));
    const auto from = state.agent.pos;
    BlockPos to{from.x + h.dx, from.y, from.z + h.dz};
    double cost = rules.costs.teleport(distance(from, to));
    if (!state.walkable(to)) return settle(state, "move", cost, "obstructed");
    state.agent.pos = to;
    pick_up_item_entities(state, to);
    return settle(state, "move", cost);
}

CommandResult apply_turn(WorldState& state, const Rules& rules, int delta) {
    if (delta % 15 != 0) return settle(state, "turn", rules.costs.turn, "invalid increment");
    state.agent.yaw = (((state.agent.yaw + delta) % 360) + 360) % 360;
    return settle(state, "turn", rules.costs.turn);
}

CommandResult apply_tilt(WorldState& state, const Rules& rules, TiltMode mode) {
    state.agent.pitch = mode == TiltMode::Down ? -45 : 0;
    return settle(state, "smooth_tilt", rules.costs.tilt);
}

CommandResult apply_tp_to(WorldState& state, const Rules& rules, const BlockPos& target, int dist) {
    if (dist < 1) return settle(state, "tp_to", rules.costs.move, "bad distance");
    BlockPos to{target.x, target.y, target.z - dist};
    double cost = rules.costs.teleport(distance(state.agent.pos, to));
    if (!state.walkable(to)) return settle(state, "tp_to", cost, "obstructed");
    state.agent.pos = to;
    state.agent.yaw = 0;
    state.agent.pitch = 0;
    return settle(state, "tp_to", cost);
}

CommandResult apply_tp_to_entity(WorldState& state, const Rules& rules, int entity_id) {
    const Entity* e = state.find_entity(entity_id);
    if (!e) return settle(state, "tp_to", rules.costs.move, "no such entity");
    return apply_tp_to(state, rules, e->pos, 1);
}

CommandResult apply_break_block(WorldState& state, const Rules& rules) {
    auto target = facing_cell(state);
    const BlockId block = state.grid.at(target);
    double cost = rules.costs.break_cost(block, state.inventory.selected());
    if (block.is_air()) return settle(state, "break_block", cost, "air");
    if (state.grid.is_unbreakable(block)) return settle(state, "break_block", cost, "unbreakable");
    state.grid.set(target, ids::air);
    state.inventory.add(block);
    return settle(state, "break_block", cost);
}

CommandResult apply_select_item(WorldState& state, const Rules& rules, const ItemId& item) {
    double cost = rules.costs.select_item;
    if (state.inventory.count(item) < 1) return settle(state, "select_item", cost, "item not in inventory");
    state.inventory.select(item);
    return settle(state, "select_item", cost, {}, "selected item");
}

CommandResult apply_craft(WorldState& state, const Rules& rules, const std::vector<std::string>& slots) {
    int filled = static_cast<int>(std::count_if(slots.begin(), slots.end(),
                                                [](const std::string& s) { return s != kEmptySlot; }));
    double cost = rules.costs.craft_per_slot * filled;
    auto it = std::find_if(rules.recipes.begin(), rules.recipes.end(),
                           [&](const Recipe& r) { return r.grid == slots; });
    if (it == rules.recipes.end()) return settle(state, "craft", cost, "unknown recipe");
    const Recipe& recipe = *it;
    auto needed = recipe.ingredients();
    for (const auto& [item, n] : needed) {
        if (state.inventory.count(item) < n) return settle(state, "craft", cost, "missing ingredients");
    }
    if (recipe.is_table_recipe() && !crafting_table_near(state, 2.0)) {
        return settle(state, "craft", cost, "no crafting table nearby");
    }
    for (const auto& [item, n] : needed) state.inventory.remove(item, n);
    state.inventory.add(recipe.output.item, recipe.output.count);
    return settle(state, "craft", cost);
}

CommandResult apply_place(WorldState& state, const Rules& rules, const ItemId& item) {
    double cost = rules.costs.place;
    std::string name = "place_block";
    if (item == ids::tree_tap) name = "place_tree_tap";
    else if (item == ids::crafting_table) name = "place_crafting_table";
    else if (item == ids::macguffin) name = "place_macguffin";

    if (state.inventory.count(item) < 1) return settle(state, name, cost, "not held");
    auto target = facing_cell(state);
    if (!state.grid.in_bounds(target) || !state.grid.at(target).is_air() || state.occupied_by_entity(target)) {
        return settle(state, name, cost, "occupied");
    }
    if (item == ids::tree_tap && !has_adjacent(state.grid, target, ids::log)) {
        return settle(state, name, cost, "no adjacent log");
    }
    state.inventory.remove(item);
    state.grid.set(target, item);
    return settle(state, name, cost);
}

CommandResult apply_extract_rubber(WorldState& state, const Rules& rules) {
    auto target = facing_cell(state);
    double cost = rules.costs.extract_rubber;
    if (state.grid.at(target) != ids::tree_tap || !has_adjacent(state.grid, target, ids::log)) {
        return settle(state, "extract_rubber", cost, "no tree tap in front");
    }
    state.inventory.add(ids::sack);
    return settle(state, "extract_rubber", cost);
}

namespace {

const Entity* adjacent_npc(const WorldState& state, std::string_view argument) {
    int wanted = -1;
    if (!argument.empty()) {
        auto token = argument.substr(0, argument.find(' '));
        int value = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec == std::errc{} && ptr == token.data() + token.size()) wanted = value;
    }
    for (const auto& e : state.entities) {
        if (e.kind != kNpc) continue;
        if (wanted >= 0 && e.id != wanted) continue;
        int dx = std::abs(e.pos.x - state.agent.pos.x);
        int dz = std::abs(e.pos.z - state.agent.pos.z);
        if (e.pos.y == state.agent.pos.y && dx + dz == 1) return &e;
    }
    return nullptr;
}

}  // namespace

CommandResult apply_misc(WorldState& state, const Rules& rules, MiscCommand command, std::string_view argument) {
    const auto& c = rules.costs;
    switch (command) {
        case MiscCommand::Nop:
            return settle(state, "nop", c.nop);
        case MiscCommand::UseHand:
        case MiscCommand::Use: {
            const char* name = command == MiscCommand::UseHand ? "use_hand" : "use";
            auto target = facing_cell(state);
            const auto& block = state.grid.at(target).str();
            if (block.ends_with("_door")) {
                state.grid.set(target, BlockId(block + "_open"));
            } else if (block.ends_with("_door_open")) {
                state.grid.set(target, BlockId(block.substr(0, block.size() - 5)));
            } else {
                return settle(state, name, c.use, "nothing to use");
            }
            return settle(state, name, c.use);
        }
        case MiscCommand::Collect: {
            auto target = facing_cell(state);
            bool had_entity = std::any_of(state.entities.begin(), state.entities.end(), [&](const Entity& e) {
                return e.pos == target && e.kind == kItemEntity;
            });
            if (had_entity) {
                pick_up_item_entities(state, target);
                return settle(state, "collect", c.collect);
            }
            if (state.grid.at(target) == ids::macguffin) {
                state.grid.set(target, ids::air);
                state.inventory.add(ids::macguffin);
                return settle(state, "collect", c.collect);
            }
            return settle(state, "collect", c.collect, "nothing to collect");
        }
        case MiscCommand::Delete: {
            const auto selected = state.inventory.selected();
            if (!selected) return settle(state, "delete", c.delete_item, "no item selected");
            state.inventory.remove(*selected);
            return settle(state, "delete", c.delete_item);
        }
        case MiscCommand::Interact:
        case MiscCommand::Trade: {
            const bool trade = command == MiscCommand::Trade;
            const char* name = trade ? "trade" : "interact";
            double cost = trade ? c.trade : c.interact;
            const Entity* npc = adjacent_npc(state, argument);
            if (!npc) return settle(state, name, cost, "no entity");
            // NPC behaviours are not modelled; the request is recorded only.
            state.actor_actions.push_back({npc->id, std::string(name) + " requested"});
            return settle(state, name, cost, {}, "no response");
        }
    }
    return settle(state, "nop", 0, "unknown command");
}

}  // namespace pal
