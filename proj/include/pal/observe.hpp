#pragma once

// Symbolic observations (SENSE_* payloads) and the top-down screen raster.

#include "pal/task.hpp"
#include "pal/world.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pal {

enum class SenseKind { All, AllNonav, Inventory, Locations, Recipes, Entities, ActorActions };

// An observation is an ordered list of named sections. Each SENSE_* part is
// one section of SENSE_ALL, produced by the same serializer.
struct Observation {
    SenseKind kind = SenseKind::All;
    std::vector<std::pair<std::string, nlohmann::json>> sections;

    const nlohmann::json* section(std::string_view name) const;
    // Sections rendered as `"key":value` pairs separated by commas, ready to be
    // spliced into a JSON object.
    std::string fragment() const;
    nlohmann::json to_json() const;
};

struct SenseContext {
    const WorldState& state;
    const Rules& rules;
    const GoalSpec& goal;
};

Observation sense_all(const SenseContext& ctx, bool nonav);
Observation sense_part(const SenseContext& ctx, SenseKind kind);

nlohmann::json inventory_json(const Inventory& inventory);
nlohmann::json player_json(const AgentPose& pose);

struct ScreenFrame {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

    bool operator==(const ScreenFrame&) const = default;
};

class RenderError : public std::runtime_error {
public:
    explicit RenderError(const BlockId& missing)
        : std::runtime_error("palette has no colour for " + missing.str()), missing_(missing) {}
    const BlockId& missing() const { return missing_; }

private:
    BlockId missing_;
};

inline constexpr Rgb kAgentColour{255, 0, 0};

// Orthographic top-down view, +z at the top and +x to the right, nearest
// neighbour scaling. Each column shows its topmost non-air block; the agent
// is a 3-pixel arrow pointing along its yaw.
ScreenFrame render_screen(const WorldState& state, const Palette& palette, int width, int height);

enum class ImageFormat { Png, Bmp, Jpeg, Jpg, Wbmp, Gif };

std::optional<ImageFormat> parse_image_format(std::string_view token);
std::string format_name(ImageFormat format);

// PNG and BMP are lossless and byte-stable. JPEG is lossy. WBMP thresholds
// luminance at 128. GIF indexes the frame's own colours.
std::vector<std::uint8_t> encode_frame(const ScreenFrame& frame, ImageFormat format, int jpeg_quality = 75);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace pal
