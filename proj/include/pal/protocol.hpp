#pragma once

// PAL line protocol: command grammar, response envelopes and the per-session
// phase machine. Socket handling lives in server.hpp.

#include "pal/observe.hpp"
#include "pal/task.hpp"
#include "pal/world.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pal {

enum class Verb {
    Start,
    Reset,
    GiveUp,
    ReportNovelty,
    Move,
    Turn,
    Tilt,
    TpTo,
    TpToEntity,
    CheckCost,
    Sense,
    SenseScreen,
    SelectItem,
    UseHand,
    Use,
    BreakBlock,
    Craft,
    ExtractRubber,
    Place,
    Collect,
    Delete,
    Interact,
    Trade,
    Nop,
    Chat,
    Teleport,
};

struct NoveltyReport {
    std::optional<int> level;
    std::optional<double> confidence;  // 0..100
    std::string message;

    bool operator==(const NoveltyReport&) const = default;
};

struct Command {
    Verb verb = Verb::Nop;
    std::string name;      // lower-cased verb as sent
    std::string argument;  // raw argument text, trimmed

    MoveDir move = MoveDir::Forward;
    int turn = 0;
    TiltMode tilt = TiltMode::Forward;
    BlockPos pos;
    std::optional<int> distance;
    int entity = 0;
    std::optional<ItemId> item;
    std::vector<std::string> slots;
    SenseKind sense = SenseKind::All;
    NoveltyReport novelty;
    std::string path;  // RESET
    bool reset_domain_keyword = false;
    std::string text;  // CHAT, INTERACT, TRADE
    AgentPose teleport;

    bool dev_only() const { return verb == Verb::Chat || verb == Verb::Teleport; }
};

// Carries the verb (lower-cased) and argument text so the FAIL envelope can
// still echo them.
class CommandParseError : public std::runtime_error {
public:
    CommandParseError(std::string name, std::string argument, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)), argument_(std::move(argument)) {}
    const std::string& name() const { return name_; }
    const std::string& argument() const { return argument_; }

private:
    std::string name_;
    std::string argument_;
};

Command parse_command(std::string_view line);
// Canonical upper-case form. parse_command(format_command(c)) is equivalent to c.
std::string format_command(const Command& command);

struct Envelope {
    std::string goal_type;
    bool goal_achieved = false;
    std::string distribution;
    CommandResult result;
    std::int64_t step = 0;
    bool game_over = false;
    // Extra top-level members, already rendered as `"key":value,...`.
    std::string extra;
};

// Single-line JSON with the fixed key order goal, command_result, step,
// gameOver followed by any extra members. Integral costs print without a
// fractional part.
std::string serialize(const Envelope& envelope);
std::string format_cost(double cost);

enum class Phase { AwaitingStart, Running, GameOverPending, AwaitingReset };
enum class EndReason { None, Goal, Timeout, CostCeiling, GiveUp, Nonresponsive };

std::string phase_name(Phase phase);
std::string end_reason_name(EndReason reason);
std::optional<EndReason> parse_end_reason(std::string_view name);

inline constexpr double kCostCeiling = 1'000'000;

struct SessionOptions {
    bool dev_mode = false;
    bool aigym_reporting = false;
    bool report_screen = false;
    ImageFormat screen_format = ImageFormat::Png;
    int screen_width = 256;
    int screen_height = 256;
    double cost_ceiling = kCostCeiling;
};

// One agent's view of the simulator. All methods take the current time in
// seconds from an arbitrary epoch so callers can drive it with a fake clock.
class Session {
public:
    explicit Session(SessionOptions options = {}, std::ostream* game_log = nullptr);

    // Executes one protocol line and returns the reply envelope (no newline).
    std::string handle(std::string_view line, double now);

    // Installs the next instance from the control channel. Throws
    // std::logic_error("busy") while an instance is in progress.
    void load(TaskDef def, std::optional<double> time_limit_sec = std::nullopt);
    bool busy() const { return phase_ == Phase::Running || phase_ == Phase::GameOverPending; }

    // The agent went away mid-instance.
    void agent_lost(double now);

    Phase phase() const { return phase_; }
    EndReason end_reason() const { return end_reason_; }
    bool has_task() const { return task_.has_value(); }
    const TaskDef* task() const { return task_ ? &*task_ : nullptr; }
    const WorldState* state() const { return task_ ? &state_ : nullptr; }
    bool goal_achieved() const { return goal_achieved_; }
    double elapsed(double now) const;
    int loads() const { return loads_; }
    const std::vector<NoveltyReport>& novelty_reports() const { return novelty_; }
    nlohmann::json status(double now) const;

private:
    std::string reply(const CommandResult& result, std::int64_t step, bool game_over, std::string extra) const;
    std::string refuse(std::string name, std::string argument, std::string message) const;
    std::string handle_start(const Command& c);
    std::string handle_reset(const Command& c, double now);
    std::string run_in_instance(const Command* c, const CommandParseError* error, double now);
    CommandResult execute(WorldState& state, const Command& c, std::string& extra);
    void install(TaskDef def, std::optional<double> time_limit_sec);
    void log(const std::string& line) const;

    SessionOptions options_;
    std::ostream* game_log_;
    Phase phase_ = Phase::AwaitingStart;
    EndReason end_reason_ = EndReason::None;
    std::optional<TaskDef> task_;
    Rules rules_;
    WorldState state_;
    bool goal_achieved_ = false;
    double time_limit_ = 300;
    std::optional<double> clock_start_;
    std::optional<double> clock_stop_;
    int loads_ = 0;
    std::vector<NoveltyReport> novelty_;
};

}  // namespace pal
