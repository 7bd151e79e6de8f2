#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pal/agents.hpp"
#include "pal/protocol.hpp"
#include "support.hpp"

#include <queue>
#include <random>

using namespace pal;
using namespace pal::agents;

namespace {

struct Game {
    Session session;
    double now = 0;
    int commands = 0;
    int phase_one = -1;  // commands until the MacGuffin was held
    Transport transport() {
        return [this](const std::string& line) {
            now += 0.05;
            auto reply = session.handle(line, now);
            ++commands;
            if (phase_one < 0 && session.state() && session.state()->inventory.count(ids::macguffin) > 0) {
                phase_one = commands;
            }
            return reply;
        };
    }
};

struct Played {
    agents::Outcome outcome;
    EndReason reason;
    int phase_one;
    int total;
};

Played play(const TaskDef& def, bool huga, Nav nav) {
    Game g;
    g.session.load(def);
    g.session.handle("START", 0);
    AgentOptions o;
    o.nav = nav;
    auto t = g.transport();
    agents::Outcome out = huga ? play_huga(t, o) : play_pogo(t, o);
    return {out, g.session.end_reason(), g.phase_one, g.commands};
}

// Unit-weight Dijkstra with a binary heap; returns the distance only.
std::optional<int> dijkstra(const NavGraph& g, BlockPos from, BlockPos to) {
    using Item = std::pair<int, std::pair<int, int>>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    std::map<std::pair<int, int>, int> dist;
    dist[{from.x, from.z}] = 0;
    pq.push({0, {from.x, from.z}});
    while (!pq.empty()) {
        auto [d, c] = pq.top();
        pq.pop();
        if (d > dist[c]) continue;
        if (c == std::pair{to.x, to.z}) return d;
        for (auto n : {std::pair{c.first + 1, c.second}, std::pair{c.first - 1, c.second},
                       std::pair{c.first, c.second + 1}, std::pair{c.first, c.second - 1}}) {
            if (!g.cells.contains(n)) continue;
            if (!dist.contains(n) || dist[n] > d + 1) {
                dist[n] = d + 1;
                pq.push({d + 1, n});
            }
        }
    }
    return std::nullopt;
}

}  // namespace

TEST_CASE("BFS paths are shortest and connected") {
    std::mt19937_64 rng(12);
    int compared = 0;
    for (int trial = 0; trial < 200; ++trial) {
        NavGraph g;
        g.y = 4;
        for (int x = 0; x < 15; ++x) {
            for (int z = 0; z < 15; ++z) {
                if (rng() % 100 < 70) g.cells.insert({x, z});
            }
        }
        std::vector<std::pair<int, int>> cells(g.cells.begin(), g.cells.end());
        BlockPos a{cells[rng() % cells.size()].first, 4, 0}, b{0, 4, 0};
        a.z = cells[rng() % cells.size()].second;
        auto c = cells[rng() % cells.size()];
        b = {c.first, 4, c.second};
        if (!g.contains(a)) continue;
        auto path = bfs_path(g, a, b);
        auto oracle = dijkstra(g, a, b);
        REQUIRE(path.has_value() == oracle.has_value());
        if (!path) continue;
        REQUIRE(static_cast<int>(path->size()) == *oracle);
        BlockPos prev = a;
        for (const auto& p : *path) {
            REQUIRE(g.contains(p));
            REQUIRE(std::abs(p.x - prev.x) + std::abs(p.z - prev.z) == 1);
            prev = p;
        }
        if (!path->empty()) REQUIRE(path->back() == b);
        ++compared;
    }
    CHECK(compared > 100);
}

TEST_CASE("BFS tie-break expands north first") {
    NavGraph g;
    g.y = 4;
    for (int x = 0; x < 3; ++x) {
        for (int z = 0; z < 3; ++z) g.cells.insert({x, z});
    }
    auto p = bfs_path(g, {0, 4, 0}, {1, 4, 1});
    REQUIRE(p);
    CHECK(*p == std::vector<BlockPos>{{0, 4, 1}, {1, 4, 1}});
    CHECK(bfs_path(g, {0, 4, 0}, {0, 4, 0})->empty());
    CHECK_FALSE(bfs_path(g, {0, 4, 0}, {9, 4, 9}));
}

TEST_CASE("relative walking and turning") {
    const BlockPos o{5, 4, 5};
    CHECK(walk_commands(o, {{5, 4, 6}}, 0) == std::vector<std::string>{"MOVE w"});
    CHECK(walk_commands(o, {{6, 4, 5}}, 0) == std::vector<std::string>{"MOVE d"});
    CHECK(walk_commands(o, {{5, 4, 4}}, 0) == std::vector<std::string>{"MOVE x"});
    CHECK(walk_commands(o, {{4, 4, 5}}, 0) == std::vector<std::string>{"MOVE a"});
    CHECK(walk_commands(o, {{6, 4, 5}}, 90) == std::vector<std::string>{"MOVE w"});
    CHECK(walk_commands(o, {{5, 4, 6}, {5, 4, 7}}, 180) == std::vector<std::string>{"MOVE x", "MOVE x"});
    CHECK_FALSE(turn_command(90, 90));
    CHECK(turn_command(270, 0) == "TURN 90");
    CHECK(turn_command(0, 270) == "TURN -90");
    CHECK(turn_command(0, 180) == "TURN 180");

    // oracle: replaying the commands through the world lands on the path
    TaskDef def = testsupport::flat_task(12);
    Rules rules = rules_for(def);
    for (int yaw = 0; yaw < 360; yaw += 90) {
        WorldState s = initial_state(def);
        s.agent.yaw = yaw;
        NavGraph g;
        g.y = 4;
        for (int x = 1; x < 11; ++x) {
            for (int z = 1; z < 11; ++z) g.cells.insert({x, z});
        }
        auto path = bfs_path(g, s.agent.pos, {2, 4, 9});
        for (const auto& c : walk_commands(s.agent.pos, *path, yaw)) {
            REQUIRE(apply_move(s, rules, *parse_move_dir(c.substr(5))).ok());
        }
        CHECK(s.agent.pos == BlockPos{2, 4, 9});
    }
}

TEST_CASE("macro expansion") {
    PogoProblem p;
    p.places = {{"tree_4_10", {4, 4, 10}}, {"table_12_14", {12, 4, 14}}};
    auto act = [](std::string name, std::vector<std::string> args) {
        planner::GroundAction a;
        a.name = std::move(name);
        a.args = std::move(args);
        return a;
    };
    CHECK(expand_macro(act("get-wood", {"tree_4_10"}), p) == std::vector<std::string>{"TP_TO 4,4,10", "BREAK_BLOCK"});
    CHECK(expand_macro(act("get-wood", {"stock_0"}), p).empty());
    CHECK(expand_macro(act("craft-planks", {"tree_4_10", "n0", "n1", "n2", "n3", "n4"}), p) ==
          std::vector<std::string>{"CRAFT 1 minecraft:log 0 0 0"});
    CHECK(expand_macro(act("place-tree-tap", {"tree_4_10"}), p) ==
          std::vector<std::string>{"TP_TO 4,4,10 2", "SELECT_ITEM polycraft:tree_tap", "PLACE_TREE_TAP"});
    CHECK(expand_macro(act("extract-rubber", {"tree_4_10"}), p) ==
          std::vector<std::string>{"TP_TO 4,4,9 1", "EXTRACT_RUBBER"});
    auto pogo = expand_macro(act("craft-pogo", {"table_12_14"}), p);
    REQUIRE(pogo.size() == 2);
    CHECK(pogo[0] == "TP_TO 12,4,14");
    CHECK(pogo[1].starts_with("CRAFT 1 minecraft:stick"));
    CHECK_THROWS_AS(expand_macro(act("get-wood", {"tree_1_1"}), p), ExpansionError);
    CHECK_THROWS_AS(expand_macro(act("fly", {}), p), ExpansionError);
}

TEST_CASE("sensed problem names") {
    Game g;
    TaskDef def = generate_pogo(21);
    def.inventory[ids::log] = 2;
    g.session.load(def);
    g.session.handle("START", 0);
    auto sensed = parse_sense(nlohmann::json::parse(g.session.handle("SENSE_ALL", 0.1)));
    auto problem = build_pogo_problem(sensed);
    int trees = 0, tables = 0, stocks = 0;
    for (const auto& [name, pos] : problem.places) {
        trees += name.starts_with("tree_");
        tables += name.starts_with("table_");
        if (name.starts_with("tree_")) CHECK(name == "tree_" + std::to_string(pos.x) + "_" + std::to_string(pos.z));
    }
    for (auto at = problem.text.find("stock_"); at != std::string::npos; at = problem.text.find("stock_", at + 1)) ++stocks;
    CHECK(trees == 5);
    CHECK(tables == 1);
    CHECK(stocks > 0);
}

TEST_CASE("POGO agent wins 100 of 100 generated instances") {
    int wins = 0, most = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto r = play(generate_pogo(seed), false, Nav::Teleport);
        CAPTURE(seed);
        CHECK(r.reason == EndReason::Goal);
        wins += r.outcome.goal_achieved;
        most = std::max(most, r.total);
    }
    CHECK(wins == 100);
    MESSAGE("most commands in one game: " << most);
}

TEST_CASE("POGO agent also wins by walking") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        CAPTURE(seed);
        CHECK(play(generate_pogo(seed), false, Nav::Walk).outcome.goal_achieved);
    }
}

TEST_CASE("HUGA agent wins 100 of 100 within the phase budget") {
    int wins = 0, worst = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto r = play(generate_huga(seed), true, Nav::Walk);
        CAPTURE(seed);
        CHECK(r.reason == EndReason::Goal);
        REQUIRE(r.phase_one > 0);
        CHECK(r.phase_one <= 450);
        CHECK(r.total - r.phase_one <= 450);
        worst = std::max({worst, r.phase_one, r.total - r.phase_one});
        wins += r.outcome.goal_achieved;
    }
    CHECK(wins == 100);
    MESSAGE("largest phase: " << worst << " commands");
    for (std::uint64_t seed = 200; seed < 210; ++seed) {
        CHECK(play(generate_huga(seed), true, Nav::Teleport).outcome.goal_achieved);
    }
}

TEST_CASE("agents give up on impossible instances") {
    TaskDef no_trees = generate_pogo(5);
    std::erase_if(no_trees.blocks, [](const BlockPlacement& b) { return b.block == ids::log; });
    auto r = play(no_trees, false, Nav::Teleport);
    CHECK(r.outcome.gave_up);
    CHECK(r.reason == EndReason::GiveUp);

    TaskDef walled = generate_huga(5);
    const BlockPos m = walled.entities[0].pos;
    for (auto [dx, dz] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
        BlockPos p{m.x + dx, m.y, m.z + dz};
        std::erase_if(walled.blocks, [&](const BlockPlacement& b) { return b.pos == p; });
        walled.blocks.push_back({p, ids::stone});
    }
    auto w = play(walled, true, Nav::Walk);
    CHECK(w.outcome.gave_up);
    CHECK(w.reason == EndReason::GiveUp);
    CHECK(w.total < 10);
}
