#pragma once

// Small fixtures shared by the test programs.

#include "pal/task.hpp"
#include "pal/world.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace testsupport {

// size x size field on y=4 over a grass floor at y=3, bedrock perimeter.
inline pal::TaskDef flat_task(int size = 10) {
    pal::TaskDef def;
    def.name = "flat";
    def.arena = pal::Arena{{0, 3, 0}, size, 2, size};
    def.floor = pal::ids::grass;
    def.unbreakable = {pal::ids::bedrock};
    for (int i = 0; i < size; ++i) {
        for (auto p : {pal::BlockPos{i, 4, 0}, pal::BlockPos{i, 4, size - 1}, pal::BlockPos{0, 4, i},
                       pal::BlockPos{size - 1, 4, i}}) {
            bool dup = false;
            for (const auto& b : def.blocks) dup = dup || b.pos == p;
            if (!dup) def.blocks.push_back({p, pal::ids::bedrock});
        }
    }
    def.spawn = {size / 2, 4, size / 2};
    def.recipes = pal::pogo_recipes();
    def.goal.goal_type = "POGOSTICK";
    def.goal.target_item = pal::ids::pogo_stick;
    def.palette = {{pal::ids::grass, {0, 128, 0}}, {pal::ids::bedrock, {60, 60, 60}}, {pal::ids::log, {100, 70, 40}},
                   {pal::ids::crafting_table, {140, 90, 50}}, {pal::ids::tree_tap, {200, 200, 200}},
                   {pal::ids::macguffin, {0, 200, 0}}, {pal::ids::target, {0, 0, 255}}};
    return def;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("pal_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testsupport
