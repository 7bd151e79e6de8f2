#include "pal/observe.hpp"

namespace pal {

ScreenFrame render_screen(const WorldState& state, const Palette& palette, int width, int height) {
    if (width < 1 || height < 1) throw std::invalid_argument("render size must be positive");
    const auto& a = state.grid.arena();

    // Resolve the visible colour of every column once.
    std::vector<Rgb> columns(static_cast<std::size_t>(a.width) * a.depth);
    for (int x = 0; x < a.width; ++x) {
        for (int z = 0; z < a.depth; ++z) {
            Rgb c{0, 0, 0};
            for (int y = a.min.y + a.height - 1; y >= a.min.y; --y) {
                const BlockId& id = state.grid.at({a.min.x + x, y, a.min.z + z});
                if (id.is_air()) continue;
                auto it = palette.find(id);
                if (it == palette.end()) throw RenderError(id);
                c = it->second;
                break;
            }
            columns[static_cast<std::size_t>(x) * a.depth + z] = c;
        }
    }
    for (const auto& e : state.entities) {
        if (!e.item || !a.contains(e.pos)) continue;
        if (auto it = palette.find(*e.item); it != palette.end()) {
            columns[static_cast<std::size_t>(e.pos.x - a.min.x) * a.depth + (e.pos.z - a.min.z)] = it->second;
        }
    }

    ScreenFrame frame;
    frame.width = width;
    frame.height = height;
    frame.rgb.resize(static_cast<std::size_t>(width) * height * 3);
    auto put = [&](int px, int py, Rgb c) {
        if (px < 0 || py < 0 || px >= width || py >= height) return;
        auto* p = &frame.rgb[(static_cast<std::size_t>(py) * width + px) * 3];
        p[0] = c.r;
        p[1] = c.g;
        p[2] = c.b;
    };
    for (int py = 0; py < height; ++py) {
        // Row 0 is the highest z.
        int z = a.depth - 1 - static_cast<int>(static_cast<long long>(py) * a.depth / height);
        for (int px = 0; px < width; ++px) {
            int x = static_cast<int>(static_cast<long long>(px) * a.width / width);
            put(px, py, columns[static_cast<std::size_t>(x) * a.depth + z]);
        }
    }

    const auto& me = state.agent.pos;
    if (a.contains(me)) {
        int cx = static_cast<int>(((me.x - a.min.x) * 2 + 1) * static_cast<long long>(width) / (2 * a.width));
        int cz = a.depth - 1 - (me.z - a.min.z);
        int cy = static_cast<int>((cz * 2 + 1) * static_cast<long long>(height) / (2 * a.depth));
        auto h = heading_for_yaw(state.agent.yaw);
        for (int i = 0; i < 3; ++i) put(cx + i * h.dx, cy - i * h.dz, kAgentColour);
    }
    return frame;
}

}  // namespace pal
