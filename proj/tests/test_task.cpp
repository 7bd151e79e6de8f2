#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pal/task.hpp"
#include "support.hpp"

#include <json.hpp>

#include <deque>
#include <set>

using namespace pal;

namespace {

using Cell = std::pair<int, int>;

// Solid ground-level cells, straight from the block list.
std::set<Cell> solid_cells(const TaskDef& def, int y) {
    std::set<Cell> out;
    for (const auto& b : def.blocks) {
        if (b.pos.y == y && !b.block.is_air()) out.emplace(b.pos.x, b.pos.z);
    }
    return out;
}

std::set<Cell> flood(const TaskDef& def, Cell from) {
    auto solid = solid_cells(def, def.spawn.y);
    std::set<Cell> seen{from};
    std::deque<Cell> q{from};
    while (!q.empty()) {
        auto [x, z] = q.front();
        q.pop_front();
        for (Cell n : {Cell{x + 1, z}, Cell{x - 1, z}, Cell{x, z + 1}, Cell{x, z - 1}}) {
            if (n.first < 0 || n.second < 0 || n.first >= def.arena.width || n.second >= def.arena.depth) continue;
            if (solid.contains(n) || seen.contains(n)) continue;
            seen.insert(n);
            q.push_back(n);
        }
    }
    return seen;
}

int count_blocks(const TaskDef& def, const BlockId& id) {
    int n = 0;
    for (const auto& b : def.blocks) n += b.block == id;
    return n;
}

}  // namespace

TEST_CASE("SplitMix64 reference outputs") {
    SplitMix64 rng(0);
    CHECK(rng.next() == 0xE220A8397B1DCDAFULL);
    CHECK(rng.next() == 0x6E789E6AA1B965F4ULL);
    SplitMix64 b(7);
    for (int i = 0; i < 1000; ++i) {
        int v = b.range(-3, 3);
        REQUIRE(v >= -3);
        REQUIRE(v <= 3);
    }
}

TEST_CASE("POGO generator over 1000 seeds") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        CAPTURE(seed);
        TaskDef def = generate_pogo(seed);
        REQUIRE_NOTHROW(validate(def));
        REQUIRE(count_blocks(def, ids::log) == pogo::kTrees);
        REQUIRE(count_blocks(def, ids::crafting_table) == 1);
        REQUIRE(def.inventory.at(ids::iron_pickaxe) == 1);
        REQUIRE(def.goal.target_item == ids::pogo_stick);

        auto solid = solid_cells(def, pogo::kGroundY);
        REQUIRE_FALSE(solid.contains({def.spawn.x, def.spawn.z}));
        auto reach = flood(def, {def.spawn.x, def.spawn.z});
        for (const auto& b : def.blocks) {
            if (b.block != ids::log && b.block != ids::crafting_table) continue;
            // approach cells are open and reachable
            REQUIRE(reach.contains({b.pos.x, b.pos.z - 1}));
            if (b.block == ids::log) REQUIRE(reach.contains({b.pos.x, b.pos.z - 2}));
        }
    }
}

TEST_CASE("HUGA generator over 1000 seeds") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        CAPTURE(seed);
        TaskDef def = generate_huga(seed);
        REQUIRE_NOTHROW(validate(def));
        REQUIRE(def.entities.size() == 1);
        const auto& mg = def.entities[0];
        REQUIRE(mg.item == ids::macguffin);
        REQUIRE(huga::room(1).contains(def.spawn));
        REQUIRE(huga::room(2).contains(mg.pos));
        REQUIRE(def.goal.goal_type == "BLOCK_TO_LOCATION");
        const BlockPos place = *def.goal.target_location;
        REQUIRE(huga::room(4).contains(place));
        bool target_found = false;
        for (const auto& b : def.blocks) target_found |= b.block == ids::target && b.pos == BlockPos{place.x, place.y, place.z + 1};
        REQUIRE(target_found);

        auto reach = flood(def, {def.spawn.x, def.spawn.z});
        REQUIRE(reach.contains({mg.pos.x, mg.pos.z}));
        REQUIRE(reach.contains({place.x, place.z}));
        REQUIRE(reach.contains({place.x, place.z - 1}));
        // the stone walls keep rooms 1 and 3 apart except through doorways
        REQUIRE_FALSE(solid_cells(def, huga::kGroundY).contains({place.x, place.z}));
    }
}

TEST_CASE("generators are deterministic and seed-sensitive") {
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xFFFFFFFFFFFFFFFFULL}) {
        CHECK(generate_pogo(seed) == generate_pogo(seed));
        CHECK(generate_huga(seed) == generate_huga(seed));
        CHECK(task_to_json(generate_pogo(seed)) == task_to_json(generate_pogo(seed)));
    }
    CHECK_FALSE(generate_pogo(1) == generate_pogo(2));
    CHECK_FALSE(generate_huga(1) == generate_huga(2));
}

TEST_CASE("task files round trip") {
    auto dir = testsupport::scratch_dir("task");
    std::vector<TaskDef> defs = {generate_pogo(3), generate_huga(3), testsupport::flat_task()};
    defs[2].costs = CostTable{};
    defs[2].costs->move = 7;
    defs[2].costs->break_by_block[ids::log] = 50;
    defs[2].extensions = R"({"note":[1,2]})";
    defs[2].inventory[ids::stick] = 3;
    for (std::size_t i = 0; i < defs.size(); ++i) {
        auto path = dir / ("t" + std::to_string(i) + ".json");
        save_task(defs[i], path);
        TaskDef back = load_task(path);
        CHECK(back == defs[i]);
        CHECK(task_to_json(back) == task_to_json(defs[i]));
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("parse errors carry a position") {
    const std::string text = "{\n  \"name\": \"x\",\n  \"arena\": ,\n}";
    try {
        task_from_json(text);
        FAIL("expected a parse error");
    } catch (const TaskParseError& e) {
        CHECK(e.line() == 3);
        CHECK(e.column() >= 11);
    }
    CHECK_THROWS_AS(load_task("/nonexistent/file.json"), std::runtime_error);
}

TEST_CASE("schema errors name the field") {
    auto base = nlohmann::json::parse(task_to_json(testsupport::flat_task()));
    auto expect_field = [](const nlohmann::json& j, const std::string& field) {
        try {
            task_from_json(j.dump());
            FAIL("expected a schema error for " << field);
        } catch (const TaskSchemaError& e) {
            CHECK(e.field() == field);
        }
    };
    auto j = base;
    j.erase("name");
    expect_field(j, "name");
    j = base;
    j["blocks"].push_back({{"pos", {99, 4, 0}}, {"block", "minecraft:stone"}});
    expect_field(j, "blocks[" + std::to_string(base["blocks"].size()) + "].pos");
    j = base;
    j["spawn"]["yaw"] = 10;
    expect_field(j, "spawn.yaw");
    j = base;
    j["goal"] = {{"goalType", "BLOCK_TO_LOCATION"}, {"targetItem", "polycraft:macguffin"}};
    expect_field(j, "goal.targetLocation");
    j = base;
    j["schemaVersion"] = 99;
    expect_field(j, "schemaVersion");
    j = base;
    j["palette"]["minecraft:grass"] = {0, 300, 0};
    expect_field(j, "palette.minecraft:grass");
}

TEST_CASE("cost tables") {
    CostTable c = cost_table_from_json(R"({"move": 5, "breakByBlock": {"minecraft:log": 10}})");
    CHECK(c.move == 5);
    CHECK(c.turn == CostTable{}.turn);
    CHECK(c.break_cost(ids::log, std::nullopt) == 10);
    CHECK(cost_table_from_json(cost_table_to_json(c)) == c);
    CHECK_THROWS(cost_table_from_json(R"({"nop": 2})"));
}

TEST_CASE("goal evaluation") {
    TaskDef def = testsupport::flat_task();
    WorldState s = initial_state(def);
    GoalTracker tracker(def);
    CHECK_FALSE(tracker.update(s));
    s.inventory.add(ids::pogo_stick);
    CHECK(tracker.update(s));
    s.inventory.remove(ids::pogo_stick);
    CHECK_FALSE(goal_check(def, s));
    CHECK(tracker.update(s));  // latched

    def.goal = {"ITEM", ids::sack, std::nullopt};
    s.inventory.add(ids::sack);
    CHECK(goal_check(def, s));
}

TEST_CASE("instance names") {
    InstanceName n{"POGO", "00", "01", "07", "0100", "9999", "0", "00000", "0042", "0"};
    auto text = format_instance_name(n);
    CHECK(text == "POGO_L00_T01_S07_X0100_U9999_V0_G00000_I0042_N0");
    CHECK(parse_instance_name(text) == n);
    CHECK(parse_instance_name(text + ".json") == n);
    CHECK_THROWS_AS(parse_instance_name("POGO_L00_T01"), std::invalid_argument);
    CHECK_THROWS_AS(parse_instance_name("POGO_L00_T01_S07_X0100_U9999_V0_G00000_Q0042_N0"), std::invalid_argument);
}

TEST_CASE("generate_instances writes loadable, sorted, named files") {
    auto dir = testsupport::scratch_dir("gen");
    auto paths = generate_instances("huga", 5, 12, dir);
    REQUIRE(paths.size() == 12);
    CHECK(std::is_sorted(paths.begin(), paths.end()));
    for (std::size_t i = 0; i < paths.size(); ++i) {
        TaskDef def = load_task(paths[i]);
        auto name = parse_instance_name(paths[i].filename().string());
        CHECK(name.task == "HUGA");
        CHECK(std::stoi(name.instance) == static_cast<int>(i));
        CHECK(def.name == paths[i].stem().string());
    }
    CHECK(generate_instances("huga", 5, 12, dir / "again").size() == 12);
    CHECK(testsupport::slurp(paths[3]) == testsupport::slurp(dir / "again" / paths[3].filename()));
    CHECK_THROWS_AS(generate_instances("minecraft", 1, 1, dir), std::invalid_argument);
    std::filesystem::remove_all(dir);
}
