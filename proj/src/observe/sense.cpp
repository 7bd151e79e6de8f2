#include "pal/observe.hpp"
#include "pal/task_json.hpp"

namespace pal {

using nlohmann::json;

const json* Observation::section(std::string_view name) const {
    for (const auto& [key, value] : sections) {
        if (key == name) return &value;
    }
    return nullptr;
}

std::string Observation::fragment() const {
    std::string out;
    for (const auto& [key, value] : sections) {
        if (!out.empty()) out += ',';
        out += json(key).dump();
        out += ':';
        out += value.dump();
    }
    return out;
}

json Observation::to_json() const {
    json j = json::object();
    for (const auto& [key, value] : sections) j[key] = value;
    return j;
}

namespace {

json pos_json(const BlockPos& p) { return json::array({p.x, p.y, p.z}); }

json entities_json(const WorldState& state) {
    std::vector<const Entity*> sorted;
    for (const auto& e : state.entities) sorted.push_back(&e);
    std::sort(sorted.begin(), sorted.end(), [](const Entity* a, const Entity* b) { return a->id < b->id; });
    json out = json::array();
    for (const Entity* e : sorted) {
        json ej{{"id", e->id}, {"kind", e->kind}, {"pos", pos_json(e->pos)}};
        if (e->item) ej["item"] = e->item->str();
        out.push_back(ej);
    }
    return out;
}

json recipes_json(const Rules& rules) {
    json out = json::array();
    for (const auto& r : rules.recipes) out.push_back(recipe_json(r));
    return out;
}

json actor_actions_json(const WorldState& state) {
    json out = json::array();
    for (const auto& a : state.actor_actions) out.push_back({{"entityId", a.entity_id}, {"action", a.action}});
    return out;
}

json map_json(const WorldState& state, bool nonav) {
    json out = json::object();
    const auto& a = state.grid.arena();
    for (int y = a.min.y; y < a.min.y + a.height; ++y) {
        for (int x = a.min.x; x < a.min.x + a.width; ++x) {
            for (int z = a.min.z; z < a.min.z + a.depth; ++z) {
                BlockPos p{x, y, z};
                const BlockId& id = state.grid.at(p);
                json cell{{"name", id.str()}};
                if (nonav) {
                    cell["attributes"] = {{"breakable", !id.is_air() && !state.grid.is_unbreakable(id)},
                                          {"solid", !state.grid.passable(p)}};
                } else {
                    cell["isAccessible"] = state.walkable(p);
                }
                out[to_string(p)] = std::move(cell);
            }
        }
    }
    return out;
}

json goal_json(const GoalSpec& goal) {
    json out{{"goalType", goal.goal_type}};
    if (goal.target_item) out["targetItem"] = goal.target_item->str();
    if (goal.target_location) out["targetLocation"] = pos_json(*goal.target_location);
    return out;
}

}  // namespace

json inventory_json(const Inventory& inventory) {
    json items = json::object();
    for (const auto& [id, n] : inventory.items()) items[id.str()] = n;
    return {{"selectedItem", inventory.selected() ? inventory.selected()->str() : std::string()}, {"items", items}};
}

json player_json(const AgentPose& pose) {
    return {{"pos", pos_json(pose.pos)}, {"yaw", pose.yaw}, {"pitch", pose.pitch}};
}

Observation sense_all(const SenseContext& ctx, bool nonav) {
    Observation o;
    o.kind = nonav ? SenseKind::AllNonav : SenseKind::All;
    o.sections.emplace_back("inventory", inventory_json(ctx.state.inventory));
    o.sections.emplace_back("player", player_json(ctx.state.agent));
    o.sections.emplace_back("entities", entities_json(ctx.state));
    o.sections.emplace_back("actorActions", actor_actions_json(ctx.state));
    o.sections.emplace_back("recipes", recipes_json(ctx.rules));
    o.sections.emplace_back("goalSpec", goal_json(ctx.goal));
    o.sections.emplace_back("map", map_json(ctx.state, nonav));
    return o;
}

Observation sense_part(const SenseContext& ctx, SenseKind kind) {
    Observation o;
    o.kind = kind;
    switch (kind) {
        case SenseKind::All: return sense_all(ctx, false);
        case SenseKind::AllNonav: return sense_all(ctx, true);
        case SenseKind::Inventory: o.sections.emplace_back("inventory", inventory_json(ctx.state.inventory)); break;
        case SenseKind::Locations: o.sections.emplace_back("player", player_json(ctx.state.agent)); break;
        case SenseKind::Recipes: o.sections.emplace_back("recipes", recipes_json(ctx.rules)); break;
        case SenseKind::Entities: o.sections.emplace_back("entities", entities_json(ctx.state)); break;
        case SenseKind::ActorActions: o.sections.emplace_back("actorActions", actor_actions_json(ctx.state)); break;
    }
    return o;
}

}  // namespace pal
