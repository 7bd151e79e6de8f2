#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pal/task.hpp"
#include "pal/world.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace pal;
using testsupport::flat_task;

namespace {

struct Fixture {
    TaskDef def = flat_task();
    Rules rules = rules_for(def);
    WorldState s = initial_state(def);
};

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

const std::string kPlanks = "minecraft:log 0 0 0";
const std::string kSticks = "minecraft:planks 0 minecraft:planks 0";
const std::string kTap =
    "minecraft:planks minecraft:stick minecraft:planks minecraft:planks 0 minecraft:planks 0 minecraft:planks 0";
const std::string kPogo =
    "minecraft:stick minecraft:stick minecraft:stick minecraft:planks minecraft:stick minecraft:planks 0 "
    "polycraft:sack_polyisoprene_pellets 0";

}  // namespace

TEST_CASE("heading table for every 15 degree yaw") {
    // Written out by hand: octant centres at multiples of 45, yaw 0 faces +z, 90 faces +x.
    const std::pair<int, Heading> table[] = {
        {0, {0, 1}},     {15, {0, 1}},    {30, {1, 1}},    {45, {1, 1}},    {60, {1, 1}},    {75, {1, 0}},
        {90, {1, 0}},    {105, {1, 0}},   {120, {1, -1}},  {135, {1, -1}},  {150, {1, -1}},  {165, {0, -1}},
        {180, {0, -1}},  {195, {0, -1}},  {210, {-1, -1}}, {225, {-1, -1}}, {240, {-1, -1}}, {255, {-1, 0}},
        {270, {-1, 0}},  {285, {-1, 0}},  {300, {-1, 1}},  {315, {-1, 1}},  {330, {-1, 1}},  {345, {0, 1}},
    };
    for (const auto& [yaw, h] : table) {
        CAPTURE(yaw);
        auto got = heading_for_yaw(yaw);
        CHECK(got.dx == h.dx);
        CHECK(got.dz == h.dz);
    }
}

TEST_CASE("facing cell") {
    Fixture f;
    f.s.agent.pos = {5, 4, 5};
    f.s.agent.yaw = 0;
    CHECK(facing_cell(f.s) == BlockPos{5, 4, 6});
    f.s.agent.yaw = 45;
    CHECK(facing_cell(f.s) == BlockPos{6, 4, 6});
    f.s.agent.yaw = 90;
    CHECK(facing_cell(f.s) == BlockPos{6, 4, 5});
    f.s.agent.yaw = 180;
    CHECK(facing_cell(f.s) == BlockPos{5, 4, 4});
}

TEST_CASE("move") {
    Fixture f;
    SUBCASE("forward into air") {
        auto r = apply_move(f.s, f.rules, MoveDir::Forward);
        CHECK(r.ok());
        CHECK(f.s.agent.pos == BlockPos{5, 4, 6});
        CHECK(r.step_cost == doctest::Approx(12));
    }
    SUBCASE("relative keys do not change yaw") {
        apply_move(f.s, f.rules, MoveDir::Right);
        CHECK(f.s.agent.pos == BlockPos{6, 4, 5});
        apply_move(f.s, f.rules, MoveDir::Back);
        CHECK(f.s.agent.pos == BlockPos{6, 4, 4});
        apply_move(f.s, f.rules, MoveDir::Left);
        CHECK(f.s.agent.pos == BlockPos{5, 4, 4});
        CHECK(f.s.agent.yaw == 0);
    }
    SUBCASE("bedrock wall fails but is charged") {
        f.s.agent.pos = {5, 4, 8};
        auto r = apply_move(f.s, f.rules, MoveDir::Forward);
        CHECK_FALSE(r.ok());
        CHECK(f.s.agent.pos == BlockPos{5, 4, 8});
        CHECK(check_cost(f.s) == doctest::Approx(12));
    }
    SUBCASE("stepping onto an item entity picks it up") {
        f.s.entities.push_back({7, std::string(kItemEntity), {5, 4, 6}, ids::macguffin});
        CHECK(apply_move(f.s, f.rules, MoveDir::Forward).ok());
        CHECK(f.s.inventory.count(ids::macguffin) == 1);
        CHECK(f.s.entities.empty());
    }
    SUBCASE("an npc blocks the cell") {
        f.s.entities.push_back({8, std::string(kNpc), {5, 4, 6}, std::nullopt});
        CHECK_FALSE(apply_move(f.s, f.rules, MoveDir::Forward).ok());
    }
    SUBCASE("diagonal costs sqrt 2 times a cardinal step") {
        auto a = apply_move(f.s, f.rules, MoveDir::Forward);
        auto b = apply_move(f.s, f.rules, MoveDir::ForwardRight);
        CHECK(b.ok());
        CHECK(std::abs(b.step_cost / a.step_cost - std::sqrt(2.0)) < 1e-9);
    }
}

TEST_CASE("turn and tilt") {
    Fixture f;
    CHECK(apply_turn(f.s, f.rules, -90).ok());
    CHECK(f.s.agent.yaw == 270);
    CHECK(apply_turn(f.s, f.rules, 450).ok());
    CHECK(f.s.agent.yaw == 0);
    auto bad = apply_turn(f.s, f.rules, 10);
    CHECK_FALSE(bad.ok());
    CHECK(f.s.agent.yaw == 0);
    CHECK(apply_tilt(f.s, f.rules, TiltMode::Down).ok());
    CHECK(f.s.agent.pitch == -45);
    CHECK(apply_tilt(f.s, f.rules, TiltMode::Forward).ok());
    CHECK(f.s.agent.pitch == 0);
}

TEST_CASE("teleport") {
    TaskDef def = flat_task(32);
    Rules rules = rules_for(def);
    WorldState s = initial_state(def);
    s.agent.pos = {10, 4, 9};
    s.agent.yaw = 135;

    SUBCASE("lands d blocks short on z facing the target") {
        auto r = apply_tp_to(s, rules, {10, 4, 20}, 1);
        CHECK(r.ok());
        CHECK(s.agent.pos == BlockPos{10, 4, 19});
        CHECK(s.agent.yaw == 0);
        CHECK(facing_cell(s) == BlockPos{10, 4, 20});
        // 10 blocks costs exactly ten cardinal moves
        CHECK(r.step_cost == doctest::Approx(10 * rules.costs.move).epsilon(1e-12));
    }
    SUBCASE("distance argument") {
        CHECK(apply_tp_to(s, rules, {12, 4, 20}, 2).ok());
        CHECK(s.agent.pos == BlockPos{12, 4, 18});
    }
    SUBCASE("obstructed") {
        s.grid.set({10, 4, 19}, ids::log);
        CHECK_FALSE(apply_tp_to(s, rules, {10, 4, 20}, 1).ok());
        CHECK(s.agent.pos == BlockPos{10, 4, 9});
    }
    SUBCASE("bad distance") {
        CHECK_FALSE(apply_tp_to(s, rules, {10, 4, 20}, 0).ok());
    }
    SUBCASE("entity") {
        s.entities.push_back({3, std::string(kNpc), {20, 4, 20}, std::nullopt});
        CHECK(apply_tp_to_entity(s, rules, 3).ok());
        CHECK(s.agent.pos == BlockPos{20, 4, 19});
        CHECK_FALSE(apply_tp_to_entity(s, rules, 99).ok());
    }
}

TEST_CASE("break block") {
    Fixture f;
    f.s.grid.set({5, 4, 6}, ids::log);
    auto r = apply_break_block(f.s, f.rules);
    CHECK(r.ok());
    CHECK(r.step_cost == doctest::Approx(600));
    CHECK(f.s.inventory.count(ids::log) == 1);
    CHECK(f.s.grid.at({5, 4, 6}).is_air());
    CHECK_FALSE(apply_break_block(f.s, f.rules).ok());  // air now

    f.s.agent.pos = {5, 4, 8};
    auto wall = apply_break_block(f.s, f.rules);
    CHECK_FALSE(wall.ok());
    CHECK(f.s.grid.at({5, 4, 9}) == ids::bedrock);
}

TEST_CASE("break cost hooks") {
    CostTable c;
    c.break_by_block[ids::log] = 300;
    c.break_tool_factor[ids::iron_pickaxe] = 0.5;
    CHECK(c.break_cost(ids::log, std::nullopt) == doctest::Approx(300));
    CHECK(c.break_cost(ids::log, ids::iron_pickaxe) == doctest::Approx(150));
    CHECK(c.break_cost(ids::stone, std::nullopt) == doctest::Approx(600));
}

TEST_CASE("select item") {
    Fixture f;
    f.s.inventory.add(ids::tree_tap);
    auto r = apply_select_item(f.s, f.rules, ids::tree_tap);
    CHECK(r.ok());
    CHECK(r.step_cost == doctest::Approx(120));
    CHECK(f.s.inventory.selected() == ids::tree_tap);
    CHECK(apply_select_item(f.s, f.rules, ids::tree_tap).ok());
    CHECK(f.s.inventory.count(ids::tree_tap) == 1);
    CHECK_FALSE(apply_select_item(f.s, f.rules, ids::pogo_stick).ok());
    CHECK(f.s.inventory.selected() == ids::tree_tap);
}

TEST_CASE("craft") {
    Fixture f;
    SUBCASE("planks in the 2x2 grid") {
        f.s.inventory.add(ids::log, 1);
        auto r = apply_craft(f.s, f.rules, split(kPlanks));
        CHECK(r.ok());
        CHECK(r.step_cost == doctest::Approx(120));
        CHECK(f.s.inventory.count(ids::log) == 0);
        CHECK(f.s.inventory.count(ids::planks) == 4);
    }
    SUBCASE("sticks") {
        f.s.inventory.add(ids::planks, 2);
        CHECK(apply_craft(f.s, f.rules, split(kSticks)).ok());
        CHECK(f.s.inventory.count(ids::stick) == 4);
        CHECK(f.s.inventory.count(ids::planks) == 0);
    }
    SUBCASE("missing ingredients leave inventory unchanged") {
        auto before = f.s.inventory;
        auto r = apply_craft(f.s, f.rules, split(kPlanks));
        CHECK_FALSE(r.ok());
        CHECK(f.s.inventory == before);
    }
    SUBCASE("unknown recipe") {
        f.s.inventory.add(ids::log, 1);
        CHECK_FALSE(apply_craft(f.s, f.rules, split("minecraft:log minecraft:log 0 0")).ok());
    }
    SUBCASE("table recipes need a crafting table") {
        f.s.inventory.add(ids::planks, 5);
        f.s.inventory.add(ids::stick, 1);
        auto far = apply_craft(f.s, f.rules, split(kTap));
        CHECK_FALSE(far.ok());
        CHECK(far.step_cost == doctest::Approx(6 * 120));
        f.s.grid.set({5, 4, 6}, ids::crafting_table);
        CHECK(apply_craft(f.s, f.rules, split(kTap)).ok());
        CHECK(f.s.inventory.count(ids::tree_tap) == 1);
        CHECK(f.s.inventory.count(ids::planks) == 0);
        CHECK(f.s.inventory.count(ids::stick) == 0);
    }
    SUBCASE("pogo stick") {
        f.s.grid.set({5, 4, 6}, ids::crafting_table);
        f.s.inventory.add(ids::stick, 4);
        f.s.inventory.add(ids::planks, 2);
        f.s.inventory.add(ids::sack, 1);
        CHECK(apply_craft(f.s, f.rules, split(kPogo)).ok());
        CHECK(f.s.inventory.count(ids::pogo_stick) == 1);
        CHECK(goal_check(f.def, f.s));
    }
}

TEST_CASE("place and extract") {
    Fixture f;
    f.s.inventory.add(ids::tree_tap);
    SUBCASE("tree tap needs an adjacent log") {
        CHECK_FALSE(apply_place(f.s, f.rules, ids::tree_tap).ok());
        CHECK(f.s.inventory.count(ids::tree_tap) == 1);
        f.s.grid.set({5, 4, 7}, ids::log);
        auto r = apply_place(f.s, f.rules, ids::tree_tap);
        CHECK(r.ok());
        CHECK(r.command == "place_tree_tap");
        CHECK(f.s.grid.at({5, 4, 6}) == ids::tree_tap);
        CHECK(f.s.inventory.count(ids::tree_tap) == 0);

        CHECK(apply_extract_rubber(f.s, f.rules).ok());
        CHECK(apply_extract_rubber(f.s, f.rules).ok());
        CHECK(f.s.inventory.count(ids::sack) == 2);
    }
    SUBCASE("extract facing air fails") {
        CHECK_FALSE(apply_extract_rubber(f.s, f.rules).ok());
        CHECK(f.s.inventory.count(ids::sack) == 0);
    }
    SUBCASE("occupied cell") {
        f.s.grid.set({5, 4, 6}, ids::stone);
        CHECK_FALSE(apply_place(f.s, f.rules, ids::tree_tap).ok());
    }
    SUBCASE("macguffin onto the target satisfies a block goal") {
        TaskDef def = f.def;
        def.goal.goal_type = "BLOCK_TO_LOCATION";
        def.goal.target_item = ids::macguffin;
        def.goal.target_location = BlockPos{5, 4, 6};
        f.s.inventory.add(ids::macguffin);
        CHECK_FALSE(goal_check(def, f.s));
        CHECK(apply_place(f.s, f.rules, ids::macguffin).ok());
        CHECK(goal_check(def, f.s));
    }
}

TEST_CASE("misc commands") {
    Fixture f;
    CHECK(apply_misc(f.s, f.rules, MiscCommand::Nop).step_cost == 0);
    f.s.inventory.add(ids::stick, 3);
    CHECK_FALSE(apply_misc(f.s, f.rules, MiscCommand::Delete).ok());
    apply_select_item(f.s, f.rules, ids::stick);
    CHECK(apply_misc(f.s, f.rules, MiscCommand::Delete).ok());
    CHECK(f.s.inventory.count(ids::stick) == 2);
    CHECK_FALSE(apply_misc(f.s, f.rules, MiscCommand::Trade).ok());
    f.s.entities.push_back({4, std::string(kNpc), {5, 4, 6}, std::nullopt});
    CHECK(apply_misc(f.s, f.rules, MiscCommand::Interact, "4").ok());
    CHECK(f.s.actor_actions.size() == 1);

    f.s.grid.set({5, 4, 6}, BlockId("minecraft:oak_door"));
    f.s.entities.clear();
    CHECK(apply_misc(f.s, f.rules, MiscCommand::UseHand).ok());
    CHECK(f.s.walkable({5, 4, 6}));
}

TEST_CASE("cost table validation") {
    CostTable c;
    CHECK_NOTHROW(validate(c));
    c.nop = 1;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
    c = {};
    c.move = -1;
    CHECK_THROWS_AS(validate(c), std::invalid_argument);
}

namespace {

// Applies one random command; returns its result.
CommandResult random_command(std::mt19937_64& rng, WorldState& s, const Rules& rules) {
    static const ItemId items[] = {ids::log, ids::planks, ids::stick, ids::tree_tap, ids::sack, ids::crafting_table};
    static const std::string recipes[] = {kPlanks, kSticks, kTap, kPogo, "minecraft:log 0 0 minecraft:log"};
    auto pick = [&](int n) { return static_cast<int>(rng() % n); };
    switch (pick(10)) {
        case 0: return apply_move(s, rules, static_cast<MoveDir>(pick(8)));
        case 1: return apply_turn(s, rules, (pick(49) - 24) * (pick(5) == 0 ? 7 : 15));
        case 2: return apply_tilt(s, rules, pick(2) ? TiltMode::Down : TiltMode::Forward);
        case 3: return apply_tp_to(s, rules, {pick(12) - 1, 4, pick(12) - 1}, pick(3));
        case 4: return apply_break_block(s, rules);
        case 5: return apply_select_item(s, rules, items[pick(6)]);
        case 6: return apply_craft(s, rules, split(recipes[pick(5)]));
        case 7: return apply_place(s, rules, items[pick(6)]);
        case 8: return apply_extract_rubber(s, rules);
        default: return apply_misc(s, rules, static_cast<MiscCommand>(pick(7)));
    }
}

TaskDef cluttered() {
    TaskDef def = flat_task();
    std::mt19937_64 rng(99);
    for (int i = 0; i < 14; ++i) {
        BlockPos p{1 + static_cast<int>(rng() % 8), 4, 1 + static_cast<int>(rng() % 8)};
        if (p == def.spawn) continue;
        def.blocks.push_back({p, i % 3 == 0 ? ids::crafting_table : ids::log});
    }
    def.inventory = {{ids::log, 4}, {ids::tree_tap, 1}};
    return def;
}

}  // namespace

TEST_CASE("property: random command streams keep the world invariants") {
    TaskDef def = cluttered();
    Rules rules = rules_for(def);
    WorldState s = initial_state(def);
    std::mt19937_64 rng(20240611);
    double sum = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto before = s;
        auto r = random_command(rng, s, rules);
        sum += r.step_cost;

        REQUIRE(s.agent.yaw % 15 == 0);
        REQUIRE(s.agent.yaw >= 0);
        REQUIRE(s.agent.yaw < 360);
        REQUIRE((s.agent.pitch == 0 || s.agent.pitch == -45));
        REQUIRE(s.grid.passable(s.agent.pos));
        REQUIRE(r.step_cost >= 0);
        // a failure leaves everything except the cost untouched
        if (!r.ok()) {
            WorldState masked = s;
            masked.cumulative_cost = before.cumulative_cost;
            REQUIRE(masked == before);
        }
        // crafting conserves items per the recipe
        if (r.command == "craft" && r.ok()) {
            int total_before = 0, total_after = 0;
            for (const auto& [id, n] : before.inventory.items()) total_before += n;
            for (const auto& [id, n] : s.inventory.items()) total_after += n;
            bool matched = false;
            for (const auto& rec : rules.recipes) {
                int in = 0;
                for (const auto& [id, n] : rec.ingredients()) in += n;
                if (total_after - total_before == rec.output.count - in &&
                    s.inventory.count(rec.output.item) == before.inventory.count(rec.output.item) + rec.output.count) {
                    matched = true;
                }
            }
            REQUIRE(matched);
        }
        if (r.command == "tp_to" && r.ok()) REQUIRE(s.agent.yaw == 0);
    }
    // cumulative cost is the sum of step costs
    CHECK(check_cost(s) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("property: transitions are deterministic") {
    TaskDef def = cluttered();
    Rules rules = rules_for(def);
    WorldState a = initial_state(def), b = initial_state(def);
    std::mt19937_64 ra(5), rb(5);
    for (int i = 0; i < 3000; ++i) {
        random_command(ra, a, rules);
        random_command(rb, b, rules);
    }
    CHECK(a == b);
}
