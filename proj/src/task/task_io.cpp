#include "pal/task.hpp"
#include "pal/task_json.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace pal {

using nlohmann::json;

namespace {

json pos_json(const BlockPos& p) { return json::array({p.x, p.y, p.z}); }

BlockPos pos_from(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 3) throw TaskSchemaError(field, "expected [x, y, z]");
    for (const auto& v : j) {
        if (!v.is_number_integer()) throw TaskSchemaError(field, "coordinates must be integers");
    }
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) throw TaskSchemaError(path.empty() ? key : path + "." + key, "missing");
    return *it;
}

BlockId id_from(const json& j, const std::string& field) {
    if (!j.is_string() || !BlockId::is_valid(j.get<std::string>())) {
        throw TaskSchemaError(field, "expected a namespace:name identifier");
    }
    return BlockId(j.get<std::string>());
}

template <typename T>
T number_from(const json& j, const std::string& field) {
    if (!j.is_number()) throw TaskSchemaError(field, "expected a number");
    if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) throw TaskSchemaError(field, "expected an integer");
    }
    return j.get<T>();
}

struct CostField {
    const char* key;
    double CostTable::*member;
};

constexpr CostField kCostFields[] = {
    {"move", &CostTable::move},
    {"turn", &CostTable::turn},
    {"tilt", &CostTable::tilt},
    {"breakBlock", &CostTable::break_block},
    {"place", &CostTable::place},
    {"craftPerSlot", &CostTable::craft_per_slot},
    {"extractRubber", &CostTable::extract_rubber},
    {"selectItem", &CostTable::select_item},
    {"use", &CostTable::use},
    {"collect", &CostTable::collect},
    {"delete", &CostTable::delete_item},
    {"interact", &CostTable::interact},
    {"trade", &CostTable::trade},
    {"nop", &CostTable::nop},
    {"sense", &CostTable::sense},
    {"checkCost", &CostTable::check_cost},
    {"reportNovelty", &CostTable::report_novelty},
    {"giveUp", &CostTable::give_up},
};

}  // namespace

json cost_table_json(const CostTable& costs) {
    json j = json::object();
    for (const auto& f : kCostFields) j[f.key] = costs.*(f.member);
    json by_block = json::object();
    for (const auto& [id, v] : costs.break_by_block) by_block[id.str()] = v;
    json tool = json::object();
    for (const auto& [id, v] : costs.break_tool_factor) tool[id.str()] = v;
    j["breakByBlock"] = by_block;
    j["breakToolFactor"] = tool;
    return j;
}

CostTable cost_table_from(const json& j, const std::string& path) {
    if (!j.is_object()) throw TaskSchemaError(path, "expected an object");
    CostTable c;
    for (const auto& f : kCostFields) {
        if (auto it = j.find(f.key); it != j.end()) c.*(f.member) = number_from<double>(*it, path + "." + f.key);
    }
    for (auto [key, member] : {std::pair{"breakByBlock", &CostTable::break_by_block},
                               std::pair{"breakToolFactor", &CostTable::break_tool_factor}}) {
        auto it = j.find(key);
        if (it == j.end()) continue;
        if (!it->is_object()) throw TaskSchemaError(path + "." + key, "expected an object");
        for (const auto& [id, v] : it->items()) {
            (c.*member)[id_from(json(id), path + "." + key)] = number_from<double>(v, path + "." + key + "." + id);
        }
    }
    try {
        validate(c);
    } catch (const std::invalid_argument& e) {
        throw TaskSchemaError(path, e.what());
    }
    return c;
}

std::string cost_table_to_json(const CostTable& costs) { return cost_table_json(costs).dump(2) + "\n"; }

CostTable cost_table_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw TaskParseError(e.what(), 0, e.byte);
    }
    return cost_table_from(j, "costs");
}

json recipe_json(const Recipe& r) {
    return json{{"grid", r.grid}, {"output", {{"item", r.output.item.str()}, {"count", r.output.count}}}};
}

std::string task_to_json(const TaskDef& def) {
    json j;
    j["schemaVersion"] = kTaskSchemaVersion;
    j["name"] = def.name;
    json arena{{"min", pos_json(def.arena.min)},
               {"size", json::array({def.arena.width, def.arena.height, def.arena.depth})}};
    if (def.floor) arena["floor"] = def.floor->str();
    json unbreakable = json::array();
    for (const auto& id : def.unbreakable) unbreakable.push_back(id.str());
    arena["unbreakable"] = unbreakable;
    j["arena"] = arena;

    json blocks = json::array();
    for (const auto& b : def.blocks) blocks.push_back({{"pos", pos_json(b.pos)}, {"block", b.block.str()}});
    j["blocks"] = blocks;

    json entities = json::array();
    for (const auto& e : def.entities) {
        json ej{{"id", e.id}, {"kind", e.kind}, {"pos", pos_json(e.pos)}};
        if (e.item) ej["item"] = e.item->str();
        entities.push_back(ej);
    }
    j["entities"] = entities;
    j["spawn"] = {{"pos", pos_json(def.spawn)}, {"yaw", def.spawn_yaw}};

    json inventory = json::object();
    for (const auto& [id, n] : def.inventory) inventory[id.str()] = n;
    j["inventory"] = inventory;

    json recipes = json::array();
    for (const auto& r : def.recipes) recipes.push_back(recipe_json(r));
    j["recipes"] = recipes;
    if (def.costs) j["costs"] = cost_table_json(*def.costs);

    json goal{{"goalType", def.goal.goal_type}, {"Distribution", def.goal.distribution}};
    if (def.goal.target_item) goal["targetItem"] = def.goal.target_item->str();
    if (def.goal.target_location) goal["targetLocation"] = pos_json(*def.goal.target_location);
    j["goal"] = goal;
    j["timeLimitSec"] = def.time_limit_sec;
    j["seed"] = def.seed;

    json palette = json::object();
    for (const auto& [id, c] : def.palette) palette[id.str()] = json::array({c.r, c.g, c.b});
    j["palette"] = palette;
    if (!def.extensions.empty()) j["extensions"] = json::parse(def.extensions);
    return j.dump(2) + "\n";
}

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

TaskDef task_from(const json& j) {
    if (!j.is_object()) throw TaskSchemaError("(root)", "expected an object");
    const auto& version = require(j, "schemaVersion", "");
    if (!version.is_number_integer() || version.get<int>() != kTaskSchemaVersion) {
        throw TaskSchemaError("schemaVersion", "unsupported schema version");
    }
    TaskDef def;
    const auto& name = require(j, "name", "");
    if (!name.is_string()) throw TaskSchemaError("name", "expected a string");
    def.name = name.get<std::string>();

    const auto& arena = require(j, "arena", "");
    def.arena.min = pos_from(require(arena, "min", "arena"), "arena.min");
    const auto& size = require(arena, "size", "arena");
    if (!size.is_array() || size.size() != 3) throw TaskSchemaError("arena.size", "expected [w, h, d]");
    def.arena.width = number_from<int>(size[0], "arena.size");
    def.arena.height = number_from<int>(size[1], "arena.size");
    def.arena.depth = number_from<int>(size[2], "arena.size");
    if (auto it = arena.find("floor"); it != arena.end()) def.floor = id_from(*it, "arena.floor");
    if (auto it = arena.find("unbreakable"); it != arena.end()) {
        if (!it->is_array()) throw TaskSchemaError("arena.unbreakable", "expected an array");
        for (const auto& id : *it) def.unbreakable.push_back(id_from(id, "arena.unbreakable"));
    }

    const auto& blocks = require(j, "blocks", "");
    if (!blocks.is_array()) throw TaskSchemaError("blocks", "expected an array");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        std::string path = "blocks[" + std::to_string(i) + "]";
        def.blocks.push_back({pos_from(require(blocks[i], "pos", path), path + ".pos"),
                              id_from(require(blocks[i], "block", path), path + ".block")});
    }

    const auto& entities = require(j, "entities", "");
    if (!entities.is_array()) throw TaskSchemaError("entities", "expected an array");
    for (std::size_t i = 0; i < entities.size(); ++i) {
        std::string path = "entities[" + std::to_string(i) + "]";
        const auto& ej = entities[i];
        Entity e;
        e.id = number_from<int>(require(ej, "id", path), path + ".id");
        const auto& kind = require(ej, "kind", path);
        if (!kind.is_string()) throw TaskSchemaError(path + ".kind", "expected a string");
        e.kind = kind.get<std::string>();
        e.pos = pos_from(require(ej, "pos", path), path + ".pos");
        if (auto it = ej.find("item"); it != ej.end()) e.item = id_from(*it, path + ".item");
        def.entities.push_back(e);
    }

    const auto& spawn = require(j, "spawn", "");
    def.spawn = pos_from(require(spawn, "pos", "spawn"), "spawn.pos");
    def.spawn_yaw = number_from<int>(require(spawn, "yaw", "spawn"), "spawn.yaw");

    const auto& inventory = require(j, "inventory", "");
    if (!inventory.is_object()) throw TaskSchemaError("inventory", "expected an object");
    for (const auto& [id, n] : inventory.items()) {
        def.inventory[id_from(json(id), "inventory")] = number_from<int>(n, "inventory." + id);
    }

    const auto& recipes = require(j, "recipes", "");
    if (!recipes.is_array()) throw TaskSchemaError("recipes", "expected an array");
    for (std::size_t i = 0; i < recipes.size(); ++i) {
        std::string path = "recipes[" + std::to_string(i) + "]";
        Recipe r;
        const auto& grid = require(recipes[i], "grid", path);
        if (!grid.is_array()) throw TaskSchemaError(path + ".grid", "expected an array");
        for (const auto& slot : grid) {
            if (!slot.is_string()) throw TaskSchemaError(path + ".grid", "slots must be strings");
            r.grid.push_back(slot.get<std::string>());
        }
        const auto& out = require(recipes[i], "output", path);
        r.output.item = id_from(require(out, "item", path + ".output"), path + ".output.item");
        r.output.count = number_from<int>(require(out, "count", path + ".output"), path + ".output.count");
        try {
            validate(r);
        } catch (const std::invalid_argument& e) {
            throw TaskSchemaError(path, e.what());
        }
        def.recipes.push_back(r);
    }

    if (auto it = j.find("costs"); it != j.end()) def.costs = cost_table_from(*it, "costs");

    const auto& goal = require(j, "goal", "");
    const auto& type = require(goal, "goalType", "goal");
    if (!type.is_string()) throw TaskSchemaError("goal.goalType", "expected a string");
    def.goal.goal_type = type.get<std::string>();
    if (auto it = goal.find("Distribution"); it != goal.end()) {
        if (!it->is_string()) throw TaskSchemaError("goal.Distribution", "expected a string");
        def.goal.distribution = it->get<std::string>();
    }
    if (auto it = goal.find("targetItem"); it != goal.end()) def.goal.target_item = id_from(*it, "goal.targetItem");
    if (auto it = goal.find("targetLocation"); it != goal.end()) {
        def.goal.target_location = pos_from(*it, "goal.targetLocation");
    }

    if (auto it = j.find("timeLimitSec"); it != j.end()) def.time_limit_sec = number_from<double>(*it, "timeLimitSec");
    if (auto it = j.find("seed"); it != j.end()) {
        if (!it->is_number_integer()) throw TaskSchemaError("seed", "expected an integer");
        def.seed = it->get<std::uint64_t>();
    }
    if (auto it = j.find("palette"); it != j.end()) {
        if (!it->is_object()) throw TaskSchemaError("palette", "expected an object");
        for (const auto& [id, c] : it->items()) {
            if (!c.is_array() || c.size() != 3) throw TaskSchemaError("palette." + id, "expected [r, g, b]");
            Rgb rgb;
            std::uint8_t* channels[3] = {&rgb.r, &rgb.g, &rgb.b};
            for (int k = 0; k < 3; ++k) {
                int v = number_from<int>(c[k], "palette." + id);
                if (v < 0 || v > 255) throw TaskSchemaError("palette." + id, "channel out of range");
                *channels[k] = static_cast<std::uint8_t>(v);
            }
            def.palette[id_from(json(id), "palette")] = rgb;
        }
    }
    if (auto it = j.find("extensions"); it != j.end()) def.extensions = it->dump();
    validate(def);
    return def;
}

}  // namespace

TaskDef task_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, column] = line_column(text, e.byte);
        throw TaskParseError("parse error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                                 ": " + e.what(),
                             line, column);
    }
    return task_from(j);
}

TaskDef load_task(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open task file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return task_from_json(buffer.str());
}

void save_task(const TaskDef& def, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write task file " + path.string());
    out << task_to_json(def);
}

void validate(const TaskDef& def) {
    const auto& a = def.arena;
    if (a.width < 1 || a.height < 1 || a.depth < 1) throw TaskSchemaError("arena.size", "extents must be >= 1");
    for (std::size_t i = 0; i < def.blocks.size(); ++i) {
        if (!a.contains(def.blocks[i].pos)) {
            throw TaskSchemaError("blocks[" + std::to_string(i) + "].pos", "outside the arena");
        }
    }
    std::set<int> seen;
    for (std::size_t i = 0; i < def.entities.size(); ++i) {
        const auto& e = def.entities[i];
        std::string path = "entities[" + std::to_string(i) + "]";
        if (e.id < 1) throw TaskSchemaError(path + ".id", "must be positive");
        if (!seen.insert(e.id).second) throw TaskSchemaError(path + ".id", "duplicate entity id");
        if (!a.contains(e.pos)) throw TaskSchemaError(path + ".pos", "outside the arena");
    }
    for (const auto& [id, n] : def.inventory) {
        if (n < 0) throw TaskSchemaError("inventory." + id.str(), "negative count");
    }
    if (def.spawn_yaw % 15 != 0 || def.spawn_yaw < 0 || def.spawn_yaw >= 360) {
        throw TaskSchemaError("spawn.yaw", "must be a multiple of 15 in [0, 360)");
    }
    if (!(def.time_limit_sec > 0)) throw TaskSchemaError("timeLimitSec", "must be positive");

    const auto& type = def.goal.goal_type;
    if (type == "POGOSTICK" || type == "ITEM") {
        if (!def.goal.target_item) throw TaskSchemaError("goal.targetItem", "required for goalType " + type);
    } else if (type == "BLOCK_TO_LOCATION") {
        if (!def.goal.target_location) {
            throw TaskSchemaError("goal.targetLocation", "required for goalType BLOCK_TO_LOCATION");
        }
        if (!a.contains(*def.goal.target_location)) throw TaskSchemaError("goal.targetLocation", "outside the arena");
    } else {
        throw TaskSchemaError("goal.goalType", "unknown goal type '" + type + "'");
    }

    if (!a.contains(def.spawn)) throw TaskSchemaError("spawn.pos", "outside the arena");
    auto state = initial_state(def);
    if (!state.walkable(def.spawn)) throw TaskSchemaError("spawn.pos", "spawn cell is blocked");
}

Rules rules_for(const TaskDef& def) {
    Rules rules;
    rules.recipes = def.recipes;
    if (def.costs) rules.costs = *def.costs;
    return rules;
}

WorldState initial_state(const TaskDef& def) {
    WorldState s;
    s.grid = WorldGrid(def.arena);
    if (def.floor) {
        const auto& a = def.arena;
        for (int x = a.min.x; x < a.min.x + a.width; ++x) {
            for (int z = a.min.z; z < a.min.z + a.depth; ++z) s.grid.set({x, a.min.y, z}, *def.floor);
        }
    }
    for (const auto& b : def.blocks) s.grid.set(b.pos, b.block);
    s.grid.set_unbreakable({def.unbreakable.begin(), def.unbreakable.end()});
    s.agent.pos = def.spawn;
    s.agent.yaw = def.spawn_yaw;
    s.agent.pitch = 0;
    for (const auto& [id, n] : def.inventory) s.inventory.add(id, n);
    s.entities = def.entities;
    return s;
}

bool goal_check(const TaskDef& def, const WorldState& state) {
    const auto& g = def.goal;
    if (g.goal_type == "BLOCK_TO_LOCATION") {
        if (!g.target_location) return false;
        const ItemId& wanted = g.target_item ? *g.target_item : ids::macguffin;
        return state.grid.at(*g.target_location) == wanted;
    }
    if (!g.target_item) return false;
    return state.inventory.count(*g.target_item) >= 1;
}

}  // namespace pal
