#include "pal/agents.hpp"

#include "pal/client.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <fstream>
#include <sstream>
#include <thread>

#ifndef PAL_ASSET_DIR
#define PAL_ASSET_DIR "assets"
#endif

namespace pal::agents {

using nlohmann::json;

namespace {

BlockPos pos_of(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

std::string place_name(const std::string& kind, const BlockPos& p) {
    return kind + "_" + std::to_string(p.x) + "_" + std::to_string(p.z);
}

const std::string kPlanksRecipe = "CRAFT 1 minecraft:log 0 0 0";
const std::string kSticksRecipe = "CRAFT 1 minecraft:planks 0 minecraft:planks 0";
const std::string kTapRecipe =
    "CRAFT 1 minecraft:planks minecraft:stick minecraft:planks minecraft:planks 0 minecraft:planks 0 minecraft:planks 0";
const std::string kPogoRecipe =
    "CRAFT 1 minecraft:stick minecraft:stick minecraft:stick minecraft:planks minecraft:stick minecraft:planks 0 "
    "polycraft:sack_polyisoprene_pellets 0";

}  // namespace

Sensed parse_sense(const json& reply) {
    Sensed s;
    if (reply.contains("map")) {
        for (const auto& [key, cell] : reply["map"].items()) {
            BlockPos p = parse_block_pos(key);
            s.blocks[p] = cell.value("name", "");
            if (cell.value("isAccessible", false)) s.accessible.insert(p);
        }
    }
    if (reply.contains("player")) {
        s.player = pos_of(reply["player"]["pos"]);
        s.yaw = reply["player"].value("yaw", 0);
    }
    if (reply.contains("inventory")) {
        for (const auto& [item, n] : reply["inventory"]["items"].items()) s.items[item] = n.get<int>();
    }
    if (reply.contains("entities")) {
        for (const auto& e : reply["entities"]) {
            s.entities.push_back({e.value("id", 0), e.value("kind", ""), pos_of(e["pos"]), e.value("item", "")});
        }
    }
    if (reply.contains("goalSpec")) {
        const auto& g = reply["goalSpec"];
        s.goal_type = g.value("goalType", "");
        if (g.contains("targetLocation")) s.target_location = pos_of(g["targetLocation"]);
    }
    return s;
}

NavGraph NavGraph::from(const Sensed& sensed) {
    NavGraph g;
    g.y = sensed.player.y;
    for (const auto& p : sensed.accessible) {
        if (p.y == g.y) g.cells.insert({p.x, p.z});
    }
    return g;
}

std::optional<std::vector<BlockPos>> bfs_path(const NavGraph& graph, const BlockPos& from, const BlockPos& to) {
    if (from == to) return std::vector<BlockPos>{};
    if (!graph.contains(to)) return std::nullopt;
    static constexpr int kDx[4] = {0, 1, 0, -1};
    static constexpr int kDz[4] = {1, 0, -1, 0};
    std::map<BlockPos, BlockPos> parent{{from, from}};
    std::deque<BlockPos> queue{from};
    while (!queue.empty()) {
        BlockPos p = queue.front();
        queue.pop_front();
        for (int i = 0; i < 4; ++i) {
            BlockPos n{p.x + kDx[i], p.y, p.z + kDz[i]};
            if (!graph.contains(n) || parent.contains(n)) continue;
            parent[n] = p;
            if (n == to) {
                std::vector<BlockPos> path;
                for (BlockPos c = to; c != from; c = parent[c]) path.push_back(c);
                std::reverse(path.begin(), path.end());
                return path;
            }
            queue.push_back(n);
        }
    }
    return std::nullopt;
}

std::vector<std::string> walk_commands(const BlockPos& from, const std::vector<BlockPos>& path, int yaw) {
    std::vector<std::string> out;
    BlockPos at = from;
    for (const auto& next : path) {
        int heading = 0;
        if (next.x > at.x) heading = 90;
        else if (next.z < at.z) heading = 180;
        else if (next.x < at.x) heading = 270;
        switch (((heading - yaw) % 360 + 360) % 360) {
            case 0: out.push_back("MOVE w"); break;
            case 90: out.push_back("MOVE d"); break;
            case 180: out.push_back("MOVE x"); break;
            case 270: out.push_back("MOVE a"); break;
            default: throw std::invalid_argument("walking needs a yaw that is a multiple of 90");
        }
        at = next;
    }
    return out;
}

std::optional<std::string> turn_command(int yaw, int target) {
    int delta = ((target - yaw) % 360 + 360) % 360;
    if (delta == 0) return std::nullopt;
    if (delta > 180) delta -= 360;
    return "TURN " + std::to_string(delta);
}

PogoProblem build_pogo_problem(const Sensed& sensed) {
    PogoProblem p;
    std::vector<std::string> trees, tables, stocks, init;
    for (const auto& [pos, name] : sensed.blocks) {
        if (name == ids::log.str()) {
            auto t = place_name("tree", pos);
            trees.push_back(t);
            p.places[t] = pos;
            init.push_back("(standing " + t + ")");
            auto south = sensed.blocks.find({pos.x, pos.y, pos.z - 1});
            if (south != sensed.blocks.end() && south->second == ids::tree_tap.str()) init.push_back("(tapped " + t + ")");
        } else if (name == ids::crafting_table.str()) {
            auto t = place_name("table", pos);
            tables.push_back(t);
            p.places[t] = pos;
            init.push_back("(usable " + t + ")");
        }
    }
    const int logs = sensed.count(ids::log.str());
    for (int i = 0; i < logs; ++i) {
        stocks.push_back("stock_" + std::to_string(i));
        init.push_back("(wood " + stocks.back() + ")");
    }
    const int planks0 = sensed.count(ids::planks.str());
    const int sticks0 = sensed.count(ids::stick.str());
    const int max_planks = planks0 + 4 * static_cast<int>(trees.size() + stocks.size());
    const int levels = std::max(max_planks, sticks0 + 2 * max_planks);
    init.push_back("(planks n" + std::to_string(planks0) + ")");
    init.push_back("(sticks n" + std::to_string(sticks0) + ")");
    for (int i = 0; i < levels; ++i) init.push_back("(succ n" + std::to_string(i) + " n" + std::to_string(i + 1) + ")");
    if (sensed.count(ids::tree_tap.str()) > 0) init.push_back("(have-tap)");
    if (sensed.count(ids::sack.str()) > 0) init.push_back("(have-sack)");
    if (sensed.count(ids::pogo_stick.str()) > 0) init.push_back("(have-pogo)");

    std::ostringstream out;
    auto objects = [&](const std::vector<std::string>& names, const char* type) {
        if (names.empty()) return;
        out << "   ";
        for (const auto& n : names) out << ' ' << n;
        out << " - " << type << "\n";
    };
    out << "(define (problem pogo-sensed)\n  (:domain pogo)\n  (:objects\n";
    objects(trees, "tree");
    objects(stocks, "stock");
    objects(tables, "table");
    std::vector<std::string> level_names;
    for (int i = 0; i <= levels; ++i) level_names.push_back("n" + std::to_string(i));
    objects(level_names, "level");
    out << "  )\n  (:init";
    for (const auto& a : init) out << "\n    " << a;
    out << ")\n  (:goal (and (have-pogo))))\n";
    p.text = out.str();
    return p;
}

std::vector<std::string> expand_macro(const planner::GroundAction& action, const PogoProblem& problem) {
    auto where = [&](std::size_t i) {
        if (i >= action.args.size()) throw ExpansionError(action.label() + ": missing argument");
        auto it = problem.places.find(action.args[i]);
        if (it == problem.places.end()) throw ExpansionError(action.label() + ": cannot locate " + action.args[i]);
        return it->second;
    };
    const auto& n = action.name;
    if (n == "get-wood") {
        if (action.args[0].starts_with("stock_")) return {};
        return {"TP_TO " + to_string(where(0)), "BREAK_BLOCK"};
    }
    if (n == "craft-planks") return {kPlanksRecipe};
    if (n == "craft-sticks") return {kSticksRecipe};
    if (n == "craft-tree-tap") return {"TP_TO " + to_string(where(0)), kTapRecipe};
    if (n == "place-tree-tap") {
        return {"TP_TO " + to_string(where(0)) + " 2", "SELECT_ITEM " + ids::tree_tap.str(), "PLACE_TREE_TAP"};
    }
    if (n == "extract-rubber") {
        BlockPos tree = where(0);
        return {"TP_TO " + to_string(BlockPos{tree.x, tree.y, tree.z - 1}) + " 1", "EXTRACT_RUBBER"};
    }
    if (n == "craft-pogo") return {"TP_TO " + to_string(where(0)), kPogoRecipe};
    throw ExpansionError("no expansion for " + action.label());
}

std::filesystem::path default_pogo_domain() { return std::filesystem::path(PAL_ASSET_DIR) / "pddl" / "pogo_domain.pddl"; }

namespace {

class Link {
public:
    Link(const Transport& send, const AgentOptions& options, Outcome& outcome)
        : send_(send), options_(options), outcome_(outcome) {}

    // Returns the decoded reply; records gameOver.
    json send(const std::string& line) {
        json reply = json::parse(send_(line));
        ++outcome_.commands;
        last_ok_ = reply.at("command_result").value("result", "") == "SUCCESS";
        if (reply.value("gameOver", false)) {
            outcome_.game_over = true;
            outcome_.goal_achieved = reply.at("goal").value("goalAchieved", false);
        }
        if (!last_ok_) note(line + " -> FAIL " + reply.at("command_result").value("message", ""));
        return reply;
    }
    bool ok() const { return last_ok_; }
    bool over() const { return outcome_.game_over; }

    Sensed sense() { return parse_sense(send("SENSE_ALL")); }

    void give_up(const std::string& why) {
        note("giving up: " + why);
        outcome_.gave_up = true;
        send("GIVE_UP");
    }

    void note(const std::string& text) const {
        if (options_.log) *options_.log << text << std::endl;
    }

    // Walks to the cell a TP_TO to `target` at `distance` would land on, then
    // faces +z. False when unreachable or a step fails.
    bool walk_to(const BlockPos& target, int distance) {
        Sensed s = sense();
        if (over()) return false;
        BlockPos stand{target.x, target.y, target.z - distance};
        auto path = bfs_path(NavGraph::from(s), s.player, stand);
        if (!path) return false;
        for (const auto& c : walk_commands(s.player, *path, s.yaw)) {
            send(c);
            if (over() || !ok()) return false;
        }
        if (auto t = turn_command(s.yaw, 0)) {
            send(*t);
            if (over() || !ok()) return false;
        }
        return true;
    }

    // Runs one low-level command, translating TP_TO when walking.
    bool run(const std::string& line) {
        if (options_.nav == Nav::Walk && line.starts_with("TP_TO ")) {
            std::istringstream in(line.substr(6));
            std::string where;
            int distance = 1;
            in >> where >> distance;
            return walk_to(parse_block_pos(where), distance);
        }
        send(line);
        return !over() && ok();
    }

private:
    const Transport& send_;
    const AgentOptions& options_;
    Outcome& outcome_;
    bool last_ok_ = true;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

Outcome play_pogo(const Transport& send, const AgentOptions& options) {
    Outcome outcome;
    Link link(send, options, outcome);
    const auto domain = pddl::parse_domain(
        read_file(options.domain_file.empty() ? default_pogo_domain() : options.domain_file));
    for (int attempt = 0;; ++attempt) {
        if (attempt > options.max_replans) {
            link.give_up("replan limit");
            return outcome;
        }
        Sensed s = link.sense();
        if (link.over()) return outcome;
        PogoProblem problem = build_pogo_problem(s);
        auto task = planner::ground(domain, pddl::parse_problem(problem.text, domain));
        auto steps = planner::plan(task);
        if (!steps) {
            link.give_up("no plan");
            return outcome;
        }
        link.note("plan " + std::to_string(steps->size()) + " steps");
        bool failed = false;
        for (int a : *steps) {
            const auto& action = task.actions[a];
            link.note(action.label());
            std::vector<std::string> commands;
            try {
                commands = expand_macro(action, problem);
            } catch (const ExpansionError& e) {
                link.note(e.what());
                failed = true;
                break;
            }
            for (const auto& c : commands) {
                if (!link.run(c)) {
                    failed = true;
                    break;
                }
            }
            if (link.over()) return outcome;
            if (failed) break;
        }
        link.note(failed ? "step failed, replanning" : "plan finished without the goal, replanning");
    }
}

Outcome play_huga(const Transport& send, const AgentOptions& options) {
    Outcome outcome;
    Link link(send, options, outcome);
    const std::string macguffin = ids::macguffin.str();

    // Reaches the cell chosen by `goal_of`, re-sensing after a failed step.
    // Spends at most the phase budget.
    auto go = [&](auto&& goal_of, const char* phase) {
        const int start = outcome.commands;
        for (;;) {
            Sensed s = link.sense();
            if (link.over()) return false;
            auto stand = goal_of(s);
            if (!stand) return true;
            if (options.nav == Nav::Teleport) {
                // Land just south of the cell, then step in so pickups happen.
                link.send("TP_TO " + to_string(*stand) + " 1");
                if (link.over()) return false;
                if (link.ok()) {
                    link.send("MOVE w");
                    if (link.over()) return false;
                    if (link.ok()) return true;
                }
            }
            auto path = bfs_path(NavGraph::from(s), s.player, *stand);
            if (!path) {
                link.give_up(std::string("no path in ") + phase);
                return false;
            }
            auto commands = walk_commands(s.player, *path, s.yaw);
            if (outcome.commands - start + static_cast<int>(commands.size()) > options.phase_budget) {
                link.give_up(std::string("action budget exhausted in ") + phase);
                return false;
            }
            bool failed = false;
            for (const auto& c : commands) {
                link.send(c);
                if (link.over()) return false;
                if (!link.ok()) {
                    failed = true;
                    break;
                }
            }
            if (!failed) return true;
        }
    };

    // Phase 1: walk into the MacGuffin.
    bool ok = go(
        [&](const Sensed& s) -> std::optional<BlockPos> {
            if (s.count(macguffin) > 0) return std::nullopt;
            for (const auto& e : s.entities) {
                if (e.item == macguffin) return e.pos;
            }
            return s.player;  // nothing visible; BFS to self succeeds trivially
        },
        "pickup");
    if (!ok) return outcome;

    // Phase 2: stand south of the placement cell, face it and place.
    Sensed s = link.sense();
    if (link.over()) return outcome;
    if (s.count(macguffin) == 0) {
        link.give_up("macguffin not found");
        return outcome;
    }
    if (!s.target_location) {
        link.give_up("no target location");
        return outcome;
    }
    const BlockPos place = *s.target_location;
    if (options.nav == Nav::Teleport) {
        link.send("TP_TO " + to_string(place) + " 1");
        if (link.over()) return outcome;
        if (!link.ok() && !go([&](const Sensed&) { return std::optional<BlockPos>({place.x, place.y, place.z - 1}); },
                              "delivery")) {
            return outcome;
        }
    } else if (!go([&](const Sensed&) { return std::optional<BlockPos>({place.x, place.y, place.z - 1}); },
                   "delivery")) {
        return outcome;
    }
    s = link.sense();
    if (link.over()) return outcome;
    if (auto t = turn_command(s.yaw, 0)) {
        link.send(*t);
        if (link.over()) return outcome;
    }
    for (const std::string c : {"SELECT_ITEM " + macguffin, std::string("PLACE_MACGUFFIN")}) {
        link.send(c);
        if (link.over()) return outcome;
    }
    link.give_up("placement did not reach the goal");
    return outcome;
}

int run_agent(const std::string& kind, const std::string& host, int port, const AgentOptions& options,
              const std::optional<std::filesystem::path>& task) {
    if (kind != "pogo" && kind != "huga") throw std::invalid_argument("unknown agent: " + kind);
    LineClient client;
    client.connect(host, port, 30.0);
    Transport send = [&](const std::string& line) { return client.request(line); };
    auto log = [&](const std::string& text) {
        if (options.log) *options.log << text << std::endl;
    };
    try {
        send("START");
        if (task) {
            json r = json::parse(send("RESET domain " + task->string()));
            if (r.at("command_result").value("result", "") != "SUCCESS") {
                log("reset failed: " + r.at("command_result").value("message", ""));
                return 1;
            }
        }
        for (;;) {
            // Wait until an instance is running.
            for (;;) {
                json r = json::parse(send("CHECK_COST"));
                if (r.at("command_result").value("result", "") == "SUCCESS") break;
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
            }
            log("instance started");
            Outcome o = kind == "pogo" ? play_pogo(send, options) : play_huga(send, options);
            if (!o.game_over) {
                json r = json::parse(send("GIVE_UP"));
                o.game_over = r.value("gameOver", false);
            }
            log(std::string("instance over, goal ") + (o.goal_achieved ? "achieved" : "missed") + " after " +
                std::to_string(o.commands) + " commands");
            send("CHECK_COST");  // acknowledgment
            if (task) return o.goal_achieved ? 0 : 2;
        }
    } catch (const std::runtime_error& e) {
        log(std::string("connection closed: ") + e.what());
        return 0;
    }
}

}  // namespace pal::agents
