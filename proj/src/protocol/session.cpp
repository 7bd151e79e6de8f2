#include "pal/protocol.hpp"

#include <cmath>
#include <sstream>

namespace pal {

using nlohmann::json;

std::string format_cost(double cost) {
    if (std::isfinite(cost) && cost == std::floor(cost) && std::abs(cost) < 1e15) {
        return std::to_string(static_cast<long long>(cost));
    }
    return json(cost).dump();
}

std::string serialize(const Envelope& e) {
    std::string out;
    out.reserve(256 + e.extra.size());
    out += R"({"goal":{"goalType":)";
    out += json(e.goal_type).dump();
    out += R"(,"goalAchieved":)";
    out += e.goal_achieved ? "true" : "false";
    out += R"(,"Distribution":)";
    out += json(e.distribution).dump();
    out += R"(},"command_result":{"command":)";
    out += json(e.result.command).dump();
    out += R"(,"argument":)";
    out += json(e.result.argument).dump();
    out += R"(,"result":)";
    out += e.result.ok() ? R"("SUCCESS")" : R"("FAIL")";
    out += R"(,"message":)";
    out += json(e.result.message).dump();
    out += R"(,"stepCost":)";
    out += format_cost(e.result.step_cost);
    out += R"(},"step":)";
    out += std::to_string(e.step);
    out += R"(,"gameOver":)";
    out += e.game_over ? "true" : "false";
    if (!e.extra.empty()) {
        out += ',';
        out += e.extra;
    }
    out += '}';
    return out;
}

std::string phase_name(Phase phase) {
    switch (phase) {
        case Phase::AwaitingStart: return "AwaitingStart";
        case Phase::Running: return "Running";
        case Phase::GameOverPending: return "GameOverPending";
        case Phase::AwaitingReset: return "AwaitingReset";
    }
    return "AwaitingStart";
}

std::string end_reason_name(EndReason reason) {
    switch (reason) {
        case EndReason::None: return "";
        case EndReason::Goal: return "GOAL";
        case EndReason::Timeout: return "TIMEOUT";
        case EndReason::CostCeiling: return "COST_CEILING";
        case EndReason::GiveUp: return "GIVE_UP";
        case EndReason::Nonresponsive: return "NONRESPONSIVE";
    }
    return "";
}

std::optional<EndReason> parse_end_reason(std::string_view name) {
    for (auto r : {EndReason::None, EndReason::Goal, EndReason::Timeout, EndReason::CostCeiling, EndReason::GiveUp,
                   EndReason::Nonresponsive}) {
        if (end_reason_name(r) == name) return r;
    }
    return std::nullopt;
}

Session::Session(SessionOptions options, std::ostream* game_log) : options_(options), game_log_(game_log) {}

double Session::elapsed(double now) const {
    if (!clock_start_) return 0;
    return clock_stop_.value_or(now) - *clock_start_;
}

void Session::log(const std::string& line) const {
    if (!game_log_) return;
    *game_log_ << line << '\n';
    game_log_->flush();
}

void Session::install(TaskDef def, std::optional<double> time_limit_sec) {
    validate(def);
    rules_ = rules_for(def);
    state_ = initial_state(def);
    time_limit_ = time_limit_sec.value_or(def.time_limit_sec);
    task_ = std::move(def);
    goal_achieved_ = false;
    end_reason_ = EndReason::None;
    clock_start_.reset();
    clock_stop_.reset();
    novelty_.clear();
    ++loads_;
    log("LOAD " + task_->name + " timeLimitSec=" + format_cost(time_limit_));
}

void Session::load(TaskDef def, std::optional<double> time_limit_sec) {
    if (busy()) throw std::logic_error("busy");
    install(std::move(def), time_limit_sec);
    if (phase_ == Phase::AwaitingReset) phase_ = Phase::Running;
}

void Session::agent_lost(double now) {
    if (!busy()) return;
    end_reason_ = EndReason::Nonresponsive;
    phase_ = Phase::AwaitingReset;
    if (clock_start_ && !clock_stop_) clock_stop_ = now;
    log("END " + (task_ ? task_->name : std::string()) + " reason=NONRESPONSIVE");
}

std::string Session::reply(const CommandResult& result, std::int64_t step, bool game_over, std::string extra) const {
    Envelope e;
    if (task_) {
        e.goal_type = task_->goal.goal_type;
        e.distribution = task_->goal.distribution;
    } else {
        e.goal_type = "NONE";
        e.distribution = "Uninformed";
    }
    e.goal_achieved = goal_achieved_;
    e.result = result;
    e.step = step;
    e.game_over = game_over;
    e.extra = std::move(extra);
    return serialize(e);
}

std::string Session::refuse(std::string name, std::string argument, std::string message) const {
    CommandResult r;
    r.command = std::move(name);
    r.argument = std::move(argument);
    r.result = Outcome::Fail;
    r.message = std::move(message);
    return reply(r, task_ ? state_.step : 0, false, {});
}

std::string Session::handle(std::string_view line, double now) {
    std::optional<Command> command;
    std::optional<CommandParseError> error;
    try {
        command = parse_command(line);
    } catch (const CommandParseError& e) {
        error = e;
    }
    if (command && command->dev_only() && !options_.dev_mode) {
        error = CommandParseError(command->name, command->argument, "dev commands are disabled");
        command.reset();
    }
    if (command && command->verb == Verb::Start) return handle_start(*command);
    if (command && command->verb == Verb::Reset) return handle_reset(*command, now);

    const std::string& name = command ? command->name : error->name();
    const std::string& argument = command ? command->argument : error->argument();
    switch (phase_) {
        case Phase::AwaitingStart: return refuse(name, argument, "send START first");
        case Phase::AwaitingReset: return refuse(name, argument, "awaiting reset");
        case Phase::Running:
        case Phase::GameOverPending: break;
    }
    return run_in_instance(command ? &*command : nullptr, error ? &*error : nullptr, now);
}

std::string Session::handle_start(const Command& c) {
    if (phase_ != Phase::AwaitingStart) return refuse(c.name, c.argument, "already started");
    phase_ = task_ ? Phase::Running : Phase::AwaitingReset;
    CommandResult r;
    r.command = c.name;
    r.argument = c.argument;
    log("START");
    return reply(r, 0, false, {});
}

std::string Session::handle_reset(const Command& c, double) {
    if (phase_ == Phase::AwaitingStart) return refuse(c.name, c.argument, "send START first");
    if (phase_ != Phase::AwaitingReset && !options_.dev_mode) {
        return refuse(c.name, c.argument, "instance in progress");
    }
    TaskDef def;
    try {
        def = load_task(c.path);
        validate(def);
    } catch (const std::exception& e) {
        return refuse(c.name, c.argument, std::string("cannot load task: ") + e.what());
    }
    install(std::move(def), std::nullopt);
    phase_ = Phase::Running;
    CommandResult r;
    r.command = c.name;
    r.argument = c.argument;
    return reply(r, 0, false, {});
}

std::string Session::run_in_instance(const Command* c, const CommandParseError* error, double now) {
    if (!clock_start_) clock_start_ = now;
    const std::int64_t step = state_.step;

    auto run = [&](WorldState& state, std::string& extra) {
        if (c) return execute(state, *c, extra);
        CommandResult r;
        r.command = error->name();
        r.argument = error->argument();
        r.result = Outcome::Fail;
        r.message = error->what();
        return r;
    };
    auto augment = [&](const WorldState& state, std::string& extra) {
        if (!options_.aigym_reporting) return;
        SenseContext ctx{state, rules_, task_->goal};
        if (!extra.empty()) extra += ',';
        extra += R"("observation":{)" + sense_all(ctx, false).fragment() + "}";
        if (options_.report_screen) {
            try {
                auto frame = render_screen(state, task_->palette, options_.screen_width, options_.screen_height);
                auto bytes = encode_frame(frame, options_.screen_format);
                extra += R"(,"screen":)" + json{{"format", format_name(options_.screen_format)},
                                                 {"width", frame.width},
                                                 {"height", frame.height},
                                                 {"data", base64_encode(bytes)}}
                                                .dump();
            } catch (const std::exception& e) {
                extra += R"(,"screen":)" + json{{"error", e.what()}}.dump();
            }
        }
    };
    auto log_step = [&](const CommandResult& r, const char* tag) {
        if (!game_log_) return;
        std::ostringstream os;
        os << tag << " step=" << step << " command=" << r.command << " argument=" << json(r.argument).dump()
           << " result=" << (r.ok() ? "SUCCESS" : "FAIL") << " stepCost=" << format_cost(r.step_cost)
           << " total=" << format_cost(state_.cumulative_cost);
        if (!r.ok()) os << " message=" << json(r.message).dump();
        log(os.str());
    };

    std::string extra;
    if (phase_ == Phase::GameOverPending) {
        // The acknowledgment runs against a copy so it cannot touch the scored
        // final state.
        WorldState scratch = state_;
        CommandResult r = run(scratch, extra);
        augment(scratch, extra);
        ++state_.step;
        phase_ = Phase::AwaitingReset;
        log_step(r, "ACK");
        return reply(r, step, false, std::move(extra));
    }

    CommandResult r = run(state_, extra);
    ++state_.step;
    goal_achieved_ = goal_achieved_ || goal_check(*task_, state_);
    EndReason reason = EndReason::None;
    if (goal_achieved_) reason = EndReason::Goal;
    else if (now - *clock_start_ > time_limit_) reason = EndReason::Timeout;
    else if (state_.cumulative_cost > options_.cost_ceiling) reason = EndReason::CostCeiling;
    else if (c && c->verb == Verb::GiveUp) reason = EndReason::GiveUp;
    log_step(r, "CMD");
    if (reason != EndReason::None) {
        end_reason_ = reason;
        phase_ = Phase::GameOverPending;
        clock_stop_ = now;
        log("END " + task_->name + " reason=" + end_reason_name(reason) + " steps=" + std::to_string(state_.step) +
            " cost=" + format_cost(state_.cumulative_cost));
    }
    augment(state_, extra);
    return reply(r, step, reason != EndReason::None, std::move(extra));
}

CommandResult Session::execute(WorldState& state, const Command& c, std::string& extra) {
    const CostTable& costs = rules_.costs;
    auto simple = [&](double cost, std::string fail_message = {}) {
        CommandResult r;
        r.step_cost = cost;
        if (!fail_message.empty()) {
            r.result = Outcome::Fail;
            r.message = std::move(fail_message);
        }
        charge(state, cost);
        return r;
    };

    CommandResult r;
    switch (c.verb) {
        case Verb::Start:
        case Verb::Reset:
            r = simple(0, "not allowed here");
            break;
        case Verb::GiveUp:
            r = simple(costs.give_up);
            break;
        case Verb::ReportNovelty:
            novelty_.push_back(c.novelty);
            log("NOVELTY " + json{{"level", c.novelty.level ? json(*c.novelty.level) : json()},
                                  {"confidence", c.novelty.confidence ? json(*c.novelty.confidence) : json()},
                                  {"message", c.novelty.message}}
                                 .dump());
            r = simple(costs.report_novelty);
            break;
        case Verb::Move: r = apply_move(state, rules_, c.move); break;
        case Verb::Turn: r = apply_turn(state, rules_, c.turn); break;
        case Verb::Tilt: r = apply_tilt(state, rules_, c.tilt); break;
        case Verb::TpTo: r = apply_tp_to(state, rules_, c.pos, c.distance.value_or(1)); break;
        case Verb::TpToEntity: r = apply_tp_to_entity(state, rules_, c.entity); break;
        case Verb::CheckCost:
            extra = R"("cost":)" + format_cost(check_cost(state));
            r = simple(costs.check_cost);
            break;
        case Verb::Sense: {
            SenseContext ctx{state, rules_, task_->goal};
            extra = sense_part(ctx, c.sense).fragment();
            r = simple(costs.sense);
            break;
        }
        case Verb::SenseScreen:
            try {
                auto frame = render_screen(state, task_->palette, options_.screen_width, options_.screen_height);
                auto bytes = encode_frame(frame, options_.screen_format);
                extra = R"("screen":)" + json{{"format", format_name(options_.screen_format)},
                                              {"width", frame.width},
                                              {"height", frame.height},
                                              {"data", base64_encode(bytes)}}
                                             .dump();
                r = simple(costs.sense);
            } catch (const std::exception& e) {
                r = simple(costs.sense, e.what());
            }
            break;
        case Verb::SelectItem: r = apply_select_item(state, rules_, *c.item); break;
        case Verb::UseHand: r = apply_misc(state, rules_, MiscCommand::UseHand); break;
        case Verb::Use: r = apply_misc(state, rules_, MiscCommand::Use); break;
        case Verb::BreakBlock: r = apply_break_block(state, rules_); break;
        case Verb::Craft: r = apply_craft(state, rules_, c.slots); break;
        case Verb::ExtractRubber: r = apply_extract_rubber(state, rules_); break;
        case Verb::Place: r = apply_place(state, rules_, *c.item); break;
        case Verb::Collect: r = apply_misc(state, rules_, MiscCommand::Collect); break;
        case Verb::Delete: r = apply_misc(state, rules_, MiscCommand::Delete); break;
        case Verb::Interact: r = apply_misc(state, rules_, MiscCommand::Interact, c.text); break;
        case Verb::Trade: r = apply_misc(state, rules_, MiscCommand::Trade, c.text); break;
        case Verb::Nop: r = apply_misc(state, rules_, MiscCommand::Nop); break;
        case Verb::Chat: {
            // Only "/give @p <item> [count]" has an effect.
            std::istringstream in(c.text);
            std::string give, who, item;
            int n = 1;
            in >> give >> who >> item;
            if (give == "/give" && BlockId::is_valid(item)) {
                if (!(in >> n)) n = 1;
                if (n < 1) n = 1;
                state.inventory.add(ItemId(item), n);
            }
            r = simple(0);
            break;
        }
        case Verb::Teleport:
            if (!state.walkable(c.teleport.pos)) {
                r = simple(0, "obstructed");
            } else {
                state.agent = c.teleport;
                r = simple(0);
            }
            break;
    }
    r.command = c.name;
    r.argument = c.argument;
    return r;
}

json Session::status(double now) const {
    json novelty = json::array();
    for (const auto& n : novelty_) {
        novelty.push_back({{"level", n.level ? json(*n.level) : json()},
                           {"confidence", n.confidence ? json(*n.confidence) : json()},
                           {"message", n.message}});
    }
    return {{"ok", true},
            {"phase", phase_name(phase_)},
            {"instance", task_ ? task_->name : std::string()},
            {"step", task_ ? state_.step : 0},
            {"cost", task_ ? state_.cumulative_cost : 0.0},
            {"elapsed", elapsed(now)},
            {"goalAchieved", goal_achieved_},
            {"endReason", end_reason_ == EndReason::None ? json() : json(end_reason_name(end_reason_))},
            {"loads", loads_},
            {"noveltyReports", novelty}};
}

}  // namespace pal
