#include "pal/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace pal {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string> split(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
        if (j > i) out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
    return out;
}

std::optional<int> to_int(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<double> to_double(std::string_view s) {
    std::string t(s);
    if (!t.empty() && (t.back() == 'f' || t.back() == 'F')) t.pop_back();  // "85f"
    if (t.empty()) return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

// Joins tokens [from, end) with single spaces.
std::string join(const std::vector<std::string>& tokens, std::size_t from) {
    std::string out;
    for (std::size_t i = from; i < tokens.size(); ++i) {
        if (!out.empty()) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::string format_double(double v) {
    if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

Command parse_command(std::string_view line) {
    line = trim(line);
    auto space = line.find_first_of(" \t");
    std::string verb = upper(line.substr(0, space));
    std::string_view rest = space == std::string_view::npos ? std::string_view{} : trim(line.substr(space));
    auto args = split(rest);

    Command c;
    c.name = lower(verb);
    c.argument = std::string(rest);
    auto fail = [&](const std::string& why) -> CommandParseError { return {c.name, c.argument, why}; };
    auto no_args = [&] {
        if (!args.empty()) throw fail(verb + " takes no arguments");
    };
    auto one_item = [&] {
        if (args.size() != 1 || !BlockId::is_valid(args[0])) throw fail(verb + " needs one namespace:name item");
        c.item = ItemId(args[0]);
    };

    if (verb.empty()) throw CommandParseError("", "", "empty command");

    if (verb == "START") {
        c.verb = Verb::Start;
        no_args();
    } else if (verb == "RESET") {
        c.verb = Verb::Reset;
        std::size_t from = 0;
        if (!args.empty() && lower(args[0]) == "domain") {
            c.reset_domain_keyword = true;
            from = 1;
        }
        c.path = join(args, from);
        if (c.path.empty()) throw fail("RESET needs a task path");
    } else if (verb == "GIVE_UP" || verb == "GIVEUP") {
        c.verb = Verb::GiveUp;
        c.name = "give_up";
        no_args();
    } else if (verb == "REPORT_NOVELTY") {
        c.verb = Verb::ReportNovelty;
        for (std::size_t i = 0; i < args.size(); ++i) {
            const std::string& flag = args[i];
            if (flag == "-m") {
                if (i + 1 >= args.size()) throw fail("-m needs a message");
                c.novelty.message = join(args, i + 1);
                break;
            }
            if (i + 1 >= args.size()) throw fail(flag + " needs a value");
            if (flag == "-l") {
                auto v = to_int(args[++i]);
                if (!v || *v < 0) throw fail("novelty level must be a non-negative integer");
                c.novelty.level = *v;
            } else if (flag == "-c") {
                auto v = to_double(args[++i]);
                if (!v || *v < 0 || *v > 100) throw fail("confidence must be in 0..100");
                c.novelty.confidence = *v;
            } else {
                throw fail("unknown REPORT_NOVELTY flag " + flag);
            }
        }
    } else if (verb == "MOVE") {
        c.verb = Verb::Move;
        if (args.size() != 1) throw fail("MOVE needs one of w a d x q e z c");
        auto dir = parse_move_dir(args[0]);
        if (!dir) throw fail("unknown MOVE direction " + args[0]);
        c.move = *dir;
    } else if (verb == "TURN") {
        c.verb = Verb::Turn;
        std::optional<int> v = args.size() == 1 ? to_int(args[0]) : std::nullopt;
        if (!v) throw fail("TURN needs an integer number of degrees");
        c.turn = *v;
    } else if (verb == "SMOOTH_TILT" || verb == "TILT") {
        c.verb = Verb::Tilt;
        std::string mode = args.size() == 1 ? upper(args[0]) : "";
        if (mode == "FORWARD") c.tilt = TiltMode::Forward;
        else if (mode == "DOWN") c.tilt = TiltMode::Down;
        else throw fail(verb + " needs FORWARD or DOWN");
    } else if (verb == "TP_TO") {
        if (args.empty() || args.size() > 2) throw fail("TP_TO needs x,y,z [distance] or an entity id");
        if (args[0].find(',') != std::string::npos) {
            c.verb = Verb::TpTo;
            try {
                c.pos = parse_block_pos(args[0]);
            } catch (const std::invalid_argument& e) {
                throw fail(e.what());
            }
            if (args.size() == 2) {
                auto d = to_int(args[1]);
                if (!d) throw fail("TP_TO distance must be an integer");
                c.distance = *d;
            }
        } else {
            c.verb = Verb::TpToEntity;
            auto id = to_int(args[0]);
            if (!id || args.size() != 1) throw fail("TP_TO needs x,y,z [distance] or an entity id");
            c.entity = *id;
        }
    } else if (verb == "CHECK_COST") {
        c.verb = Verb::CheckCost;
        no_args();
    } else if (verb == "SENSE_ALL" || verb == "SENSE_ALL_NONAV") {
        c.verb = Verb::Sense;
        c.sense = verb == "SENSE_ALL_NONAV" ? SenseKind::AllNonav : SenseKind::All;
        if (args.size() == 1 && upper(args[0]) == "NONAV" && verb == "SENSE_ALL") c.sense = SenseKind::AllNonav;
        else no_args();
    } else if (verb == "SENSE_INVENTORY" || verb == "SENSE_LOCATIONS" || verb == "SENSE_RECIPES" ||
               verb == "SENSE_ENTITIES" || verb == "SENSE_ACTOR_ACTIONS") {
        c.verb = Verb::Sense;
        no_args();
        if (verb == "SENSE_INVENTORY") c.sense = SenseKind::Inventory;
        else if (verb == "SENSE_LOCATIONS") c.sense = SenseKind::Locations;
        else if (verb == "SENSE_RECIPES") c.sense = SenseKind::Recipes;
        else if (verb == "SENSE_ENTITIES") c.sense = SenseKind::Entities;
        else c.sense = SenseKind::ActorActions;
    } else if (verb == "SENSE_SCREEN") {
        c.verb = Verb::SenseScreen;
        no_args();
    } else if (verb == "SELECT_ITEM") {
        c.verb = Verb::SelectItem;
        one_item();
    } else if (verb == "USE_HAND") {
        c.verb = Verb::UseHand;
        no_args();
    } else if (verb == "USE") {
        c.verb = Verb::Use;
        no_args();
    } else if (verb == "BREAK_BLOCK") {
        c.verb = Verb::BreakBlock;
        no_args();
    } else if (verb == "CRAFT") {
        c.verb = Verb::Craft;
        if (args.empty() || args[0] != "1") throw fail("CRAFT must be followed by 1");
        if (args.size() != 5 && args.size() != 10) throw fail("CRAFT needs 4 or 9 slots");
        for (std::size_t i = 1; i < args.size(); ++i) {
            if (args[i] != kEmptySlot && !BlockId::is_valid(args[i])) throw fail("bad CRAFT slot " + args[i]);
            c.slots.push_back(args[i]);
        }
    } else if (verb == "EXTRACT_RUBBER") {
        c.verb = Verb::ExtractRubber;
        no_args();
    } else if (verb == "PLACE" || verb == "PLACE_BLOCK") {
        c.verb = Verb::Place;
        one_item();
    } else if (verb == "PLACE_TREE_TAP" || verb == "PLACE_CRAFTING_TABLE" || verb == "PLACE_MACGUFFIN") {
        c.verb = Verb::Place;
        no_args();
        c.item = verb == "PLACE_TREE_TAP" ? ids::tree_tap
                 : verb == "PLACE_CRAFTING_TABLE" ? ids::crafting_table
                                                  : ids::macguffin;
    } else if (verb == "COLLECT") {
        c.verb = Verb::Collect;
        no_args();
    } else if (verb == "DELETE") {
        c.verb = Verb::Delete;
        no_args();
    } else if (verb == "INTERACT" || verb == "TRADE") {
        c.verb = verb == "TRADE" ? Verb::Trade : Verb::Interact;
        c.text = std::string(rest);
    } else if (verb == "NOP") {
        c.verb = Verb::Nop;
        no_args();
    } else if (verb == "CHAT") {
        c.verb = Verb::Chat;
        c.text = std::string(rest);
        if (c.text.size() >= 2 && c.text.front() == '"' && c.text.back() == '"') {
            c.text = c.text.substr(1, c.text.size() - 2);
        }
        if (c.text.empty()) throw fail("CHAT needs text");
    } else if (verb == "TELEPORT") {
        c.verb = Verb::Teleport;
        if (args.size() != 5) throw fail("TELEPORT needs x y z yaw pitch");
        int v[5];
        for (int i = 0; i < 5; ++i) {
            auto n = to_int(args[i]);
            if (!n) throw fail("TELEPORT arguments must be integers");
            v[i] = *n;
        }
        if (v[3] % 15 != 0 || (v[4] != 0 && v[4] != -45)) throw fail("TELEPORT yaw/pitch out of range");
        c.teleport = {{v[0], v[1], v[2]}, ((v[3] % 360) + 360) % 360, v[4]};
    } else {
        throw fail("unknown command " + verb);
    }
    return c;
}

std::string format_command(const Command& c) {
    switch (c.verb) {
        case Verb::Start: return "START";
        case Verb::Reset: return std::string("RESET ") + (c.reset_domain_keyword ? "domain " : "") + c.path;
        case Verb::GiveUp: return "GIVE_UP";
        case Verb::ReportNovelty: {
            std::string out = "REPORT_NOVELTY";
            if (c.novelty.level) out += " -l " + std::to_string(*c.novelty.level);
            if (c.novelty.confidence) out += " -c " + format_double(*c.novelty.confidence);
            if (!c.novelty.message.empty()) out += " -m " + c.novelty.message;
            return out;
        }
        case Verb::Move: return std::string("MOVE ") + move_key(c.move);
        case Verb::Turn: return "TURN " + std::to_string(c.turn);
        case Verb::Tilt:
            return std::string(c.name == "tilt" ? "TILT " : "SMOOTH_TILT ") +
                   (c.tilt == TiltMode::Down ? "DOWN" : "FORWARD");
        case Verb::TpTo: {
            std::string out = "TP_TO " + to_string(c.pos);
            if (c.distance) out += " " + std::to_string(*c.distance);
            return out;
        }
        case Verb::TpToEntity: return "TP_TO " + std::to_string(c.entity);
        case Verb::CheckCost: return "CHECK_COST";
        case Verb::Sense:
            switch (c.sense) {
                case SenseKind::All: return "SENSE_ALL";
                case SenseKind::AllNonav: return c.name == "sense_all_nonav" ? "SENSE_ALL_NONAV" : "SENSE_ALL NONAV";
                case SenseKind::Inventory: return "SENSE_INVENTORY";
                case SenseKind::Locations: return "SENSE_LOCATIONS";
                case SenseKind::Recipes: return "SENSE_RECIPES";
                case SenseKind::Entities: return "SENSE_ENTITIES";
                case SenseKind::ActorActions: return "SENSE_ACTOR_ACTIONS";
            }
            return "SENSE_ALL";
        case Verb::SenseScreen: return "SENSE_SCREEN";
        case Verb::SelectItem: return "SELECT_ITEM " + c.item->str();
        case Verb::UseHand: return "USE_HAND";
        case Verb::Use: return "USE";
        case Verb::BreakBlock: return "BREAK_BLOCK";
        case Verb::Craft: {
            std::string out = "CRAFT 1";
            for (const auto& s : c.slots) out += " " + s;
            return out;
        }
        case Verb::ExtractRubber: return "EXTRACT_RUBBER";
        case Verb::Place:
            if (c.name == "place_tree_tap" || c.name == "place_crafting_table" || c.name == "place_macguffin") {
                return upper(c.name);
            }
            return upper(c.name) + " " + c.item->str();
        case Verb::Collect: return "COLLECT";
        case Verb::Delete: return "DELETE";
        case Verb::Interact: return c.text.empty() ? "INTERACT" : "INTERACT " + c.text;
        case Verb::Trade: return c.text.empty() ? "TRADE" : "TRADE " + c.text;
        case Verb::Nop: return "NOP";
        case Verb::Chat: return "CHAT " + c.text;
        case Verb::Teleport:
            return "TELEPORT " + std::to_string(c.teleport.pos.x) + " " + std::to_string(c.teleport.pos.y) + " " +
                   std::to_string(c.teleport.pos.z) + " " + std::to_string(c.teleport.yaw) + " " +
                   std::to_string(c.teleport.pitch);
    }
    return "NOP";
}

}  // namespace pal
