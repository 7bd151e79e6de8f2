#include "pal/task.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

namespace pal {

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t SplitMix64::below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("below(0)");
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t v;
    do {
        v = next();
    } while (v >= limit);
    return v % bound;
}

std::vector<Recipe> pogo_recipes() {
    const std::string log = ids::log.str();
    const std::string planks = ids::planks.str();
    const std::string stick = ids::stick.str();
    const std::string sack = ids::sack.str();
    const std::string e{kEmptySlot};
    return {
        {{log, e, e, e}, {ids::planks, 4}},
        {{log, e, e, e, e, e, e, e, e}, {ids::planks, 4}},
        {{planks, e, planks, e}, {ids::stick, 4}},
        {{planks, e, e, planks, e, e, e, e, e}, {ids::stick, 4}},
        {{planks, stick, planks, planks, e, planks, e, planks, e}, {ids::tree_tap, 1}},
        {{stick, stick, stick, planks, stick, planks, e, sack, e}, {ids::pogo_stick, 1}},
    };
}

namespace {

void add_perimeter(TaskDef& def, int size, int y) {
    for (int i = 0; i < size; ++i) {
        def.blocks.push_back({{i, y, 0}, ids::bedrock});
        def.blocks.push_back({{i, y, size - 1}, ids::bedrock});
        if (i > 0 && i < size - 1) {
            def.blocks.push_back({{0, y, i}, ids::bedrock});
            def.blocks.push_back({{size - 1, y, i}, ids::bedrock});
        }
    }
}

using Cell = std::pair<int, int>;

}  // namespace

TaskDef generate_pogo(std::uint64_t seed) {
    using namespace pogo;
    SplitMix64 rng(seed ^ 0x506F676F5374696BULL);
    TaskDef def;
    def.name = "pogo_" + std::to_string(seed);
    def.arena = Arena{{0, kFloorY, 0}, kSize, 2, kSize};
    def.floor = ids::grass;
    def.unbreakable = {ids::bedrock};
    add_perimeter(def, kSize, kGroundY);

    // Every object reserves its own cell plus the approach cells used by
    // teleport-based agents: (x, z-1) for all, (x, z-2) for trees (tap
    // placement). Reserved sets never overlap.
    std::set<Cell> reserved;
    auto try_reserve = [&](int x, int z, int approach) {
        std::vector<Cell> cells;
        for (int d = 0; d <= approach; ++d) cells.emplace_back(x, z - d);
        for (const auto& c : cells) {
            if (c.second < 1 || reserved.contains(c)) return false;
        }
        reserved.insert(cells.begin(), cells.end());
        return true;
    };
    for (int placed = 0; placed < kTrees;) {
        int x = rng.range(1, kSize - 2);
        int z = rng.range(3, kSize - 2);
        if (!try_reserve(x, z, 2)) continue;
        def.blocks.push_back({{x, kGroundY, z}, ids::log});
        ++placed;
    }
    for (;;) {
        int x = rng.range(1, kSize - 2);
        int z = rng.range(2, kSize - 2);
        if (!try_reserve(x, z, 1)) continue;
        def.blocks.push_back({{x, kGroundY, z}, ids::crafting_table});
        break;
    }
    std::set<Cell> solid;
    for (const auto& b : def.blocks) solid.emplace(b.pos.x, b.pos.z);
    for (;;) {
        int x = rng.range(1, kSize - 2);
        int z = rng.range(1, kSize - 2);
        if (solid.contains({x, z})) continue;
        def.spawn = {x, kGroundY, z};
        break;
    }
    def.spawn_yaw = 90 * rng.range(0, 3);
    def.inventory[ids::iron_pickaxe] = 1;
    def.recipes = pogo_recipes();
    def.goal.goal_type = "POGOSTICK";
    def.goal.target_item = ids::pogo_stick;
    def.time_limit_sec = 300;
    def.seed = seed;
    def.palette = {
        {ids::grass, {95, 159, 53}},     {ids::bedrock, {60, 60, 60}},     {ids::log, {102, 76, 40}},
        {ids::planks, {180, 144, 90}},   {ids::crafting_table, {140, 90, 50}},
        {ids::tree_tap, {200, 200, 210}}, {ids::macguffin, {0, 200, 0}},  {ids::target, {0, 0, 255}},
    };
    return def;
}

namespace huga {

RoomBounds room(int number) {
    const int lo0 = kLowRoomMin, lo1 = kLowRoomMin + kRoom - 1;
    const int hi0 = kHighRoomMin, hi1 = kHighRoomMin + kRoom - 1;
    switch (number) {
        case 1: return {lo0, lo1, lo0, lo1};
        case 2: return {lo0, lo1, hi0, hi1};
        case 3: return {hi0, hi1, hi0, hi1};
        case 4: return {hi0, hi1, lo0, lo1};
        default: throw std::invalid_argument("HUGA rooms are numbered 1..4");
    }
}

}  // namespace huga

TaskDef generate_huga(std::uint64_t seed) {
    using namespace huga;
    SplitMix64 rng(seed ^ 0x48756761476D6521ULL);
    TaskDef def;
    def.name = "huga_" + std::to_string(seed);
    def.arena = Arena{{0, kFloorY, 0}, kSize, 2, kSize};
    def.floor = ids::wool;
    def.unbreakable = {ids::bedrock, ids::stone, ids::target};
    add_perimeter(def, kSize, kGroundY);

    // Inner walls: x = 15 and z = 15 across the interior. Each of the four
    // wall segments shared by two rooms gets 1..3 one-block doorways.
    std::set<Cell> doors;
    auto open_doors = [&](bool vertical, int lo, int hi) {
        int n = rng.range(1, 3);
        std::set<int> chosen;
        while (static_cast<int>(chosen.size()) < n) chosen.insert(rng.range(lo, hi));
        for (int c : chosen) doors.insert(vertical ? Cell{kWall, c} : Cell{c, kWall});
    };
    open_doors(false, kLowRoomMin, kLowRoomMin + kRoom - 1);    // rooms 1|2
    open_doors(true, kHighRoomMin, kHighRoomMin + kRoom - 1);   // rooms 2|3
    open_doors(false, kHighRoomMin, kHighRoomMin + kRoom - 1);  // rooms 3|4
    open_doors(true, kLowRoomMin, kLowRoomMin + kRoom - 1);     // rooms 1|4
    for (int i = 1; i < kSize - 1; ++i) {
        for (Cell c : {Cell{kWall, i}, Cell{i, kWall}}) {
            if (doors.contains(c)) continue;
            BlockPos p{c.first, kGroundY, c.second};
            bool dup = std::any_of(def.blocks.begin(), def.blocks.end(), [&](const auto& b) { return b.pos == p; });
            if (!dup) def.blocks.push_back({p, ids::stone});
        }
    }

    auto random_cell = [&](const RoomBounds& r) {
        return BlockPos{rng.range(r.x0, r.x1), kGroundY, rng.range(r.z0, r.z1)};
    };
    def.spawn = random_cell(room(1));
    def.spawn_yaw = 90 * rng.range(0, 3);

    Entity macguffin;
    macguffin.id = 7101;
    macguffin.kind = std::string(kItemEntity);
    macguffin.pos = random_cell(room(2));
    macguffin.item = ids::macguffin;
    def.entities.push_back(macguffin);

    // The placement cell sits at z-1 of the Target marker and the cell at z-2
    // stays free, so both a teleport approach and a walking approach exist.
    auto r4 = room(4);
    BlockPos target{rng.range(r4.x0, r4.x1), kGroundY, rng.range(r4.z0 + 2, r4.z1)};
    def.blocks.push_back({target, ids::target});
    def.goal.goal_type = "BLOCK_TO_LOCATION";
    def.goal.target_item = ids::macguffin;
    def.goal.target_location = BlockPos{target.x, target.y, target.z - 1};
    def.time_limit_sec = 300;
    def.seed = seed;

    auto color = [&] {
        return Rgb{static_cast<std::uint8_t>(rng.range(60, 230)), static_cast<std::uint8_t>(rng.range(60, 230)),
                   static_cast<std::uint8_t>(rng.range(60, 230))};
    };
    def.palette = {
        {ids::wool, color()},          {ids::stone, color()},         {ids::bedrock, {40, 40, 40}},
        {ids::macguffin, {0, 220, 0}}, {ids::target, {0, 0, 255}},
    };
    return def;
}

std::string format_instance_name(const InstanceName& n) {
    return n.task + "_L" + n.level + "_T" + n.tournament + "_S" + n.seed + "_X" + n.count + "_U" + n.u + "_V" + n.v +
           "_G" + n.g + "_I" + n.instance + "_N" + n.n;
}

InstanceName parse_instance_name(std::string_view text) {
    if (text.ends_with(".json")) text.remove_suffix(5);
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        auto pos = text.find('_', start);
        parts.push_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    static constexpr char kPrefixes[] = {'L', 'T', 'S', 'X', 'U', 'V', 'G', 'I', 'N'};
    if (parts.size() != 10 || parts[0].empty()) {
        throw std::invalid_argument("instance name needs 10 '_'-separated fields: " + std::string(text));
    }
    InstanceName n;
    n.task = std::string(parts[0]);
    std::string* fields[] = {&n.level, &n.tournament, &n.seed, &n.count, &n.u, &n.v, &n.g, &n.instance, &n.n};
    for (int i = 0; i < 9; ++i) {
        auto p = parts[i + 1];
        if (p.size() < 2 || p[0] != kPrefixes[i]) {
            throw std::invalid_argument(std::string("instance name field ") + kPrefixes[i] + " malformed: " +
                                        std::string(text));
        }
        *fields[i] = std::string(p.substr(1));
    }
    return n;
}

namespace {

std::string padded(std::uint64_t v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*llu", width, static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::vector<std::filesystem::path> generate_instances(const std::string& task, std::uint64_t base_seed, int count,
                                                      const std::filesystem::path& dir) {
    std::string upper = task;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper != "POGO" && upper != "HUGA") throw std::invalid_argument("unknown task family: " + task);
    if (count < 1) throw std::invalid_argument("count must be >= 1");
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> paths;
    SplitMix64 seeds(base_seed);
    for (int i = 0; i < count; ++i) {
        std::uint64_t seed = seeds.next();
        TaskDef def = upper == "POGO" ? generate_pogo(seed) : generate_huga(seed);
        InstanceName name{upper, "00", "01", padded(base_seed, 2), padded(count, 4), "9999", "0", "00000",
                          padded(i, 4), "0"};
        def.name = format_instance_name(name);
        auto path = dir / (def.name + ".json");
        save_task(def, path);
        paths.push_back(path);
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

}  // namespace pal
