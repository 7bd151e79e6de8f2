// pal: server, instance generator, planner, reference agents, replay and
// tournament manager behind one binary.

#include "pal/agents.hpp"
#include "pal/planner.hpp"
#include "pal/replay.hpp"
#include "pal/server.hpp"
#include "pal/tournament.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using nlohmann::json;

pal::Server* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

pal::TaskDef generated(const std::string& family, std::uint64_t seed) {
    if (family == "pogo") return pal::generate_pogo(seed);
    if (family == "huga") return pal::generate_huga(seed);
    throw std::invalid_argument("unknown task family: " + family);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Headless PAL simulator and tools"};
    app.require_subcommand(1);

    // serve
    auto* serve = app.add_subcommand("serve", "Run the simulator server; the game log goes to stdout");
    std::optional<int> agent_port, control_port, fps;
    std::string serve_task;
    double serve_limit = 0;
    bool dev = false;
    std::string host = "127.0.0.1";
    serve->add_option("--agent-port", agent_port, "Agent port (PAL_AGENT_PORT, default 9000; 0 picks one)");
    serve->add_option("--control-port", control_port, "Control port (PAL_TM_PORT, default 9005; 0 picks one)");
    serve->add_option("--fps", fps, "Ticks per second (PAL_FPS, default 20)");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--task", serve_task, "Instance to preload");
    serve->add_option("--time-limit", serve_limit, "Override the preloaded instance's time limit (s)");
    serve->add_flag("--dev", dev, "Enable CHAT and TELEPORT");

    // generate
    auto* gen = app.add_subcommand("generate", "Write seeded instances");
    std::string gen_task = "pogo", gen_out = "games";
    std::uint64_t gen_seed = 1;
    int gen_count = 100;
    gen->add_option("--task", gen_task, "pogo or huga");
    gen->add_option("--seed", gen_seed, "Base seed");
    gen->add_option("--count", gen_count, "Number of instances");
    gen->add_option("--out", gen_out, "Output folder");

    // plan
    auto* plan = app.add_subcommand("plan", "Plan with the FF heuristic and enforced hill-climbing");
    std::string domain_file, problem_file, plan_format = "steps";
    plan->add_option("--domain", domain_file)->required();
    plan->add_option("--problem", problem_file)->required();
    plan->add_option("--format", plan_format)->check(CLI::IsMember({"steps", "json"}));

    // agent
    auto* agent = app.add_subcommand("agent", "Run a reference agent");
    std::string agent_kind, agent_host = env_or("PAL_HOST", "127.0.0.1"), nav, agent_task, agent_domain;
    int agent_port_opt = std::stoi(env_or("PAL_AGENT_PORT", "9000"));
    agent->add_option("kind", agent_kind, "pogo or huga")->required()->check(CLI::IsMember({"pogo", "huga"}));
    agent->add_option("--host", agent_host);
    agent->add_option("--port", agent_port_opt);
    agent->add_option("--nav", nav, "tp or move")->check(CLI::IsMember({"tp", "move"}));
    agent->add_option("--task", agent_task, "RESET into this instance and play it once");
    agent->add_option("--domain", agent_domain, "POGO domain file");

    // replay
    auto* rep = app.add_subcommand("replay", "Replay a command script on a fixed clock and print its SHA-256");
    std::string rep_task, rep_family, rep_commands, rep_out;
    std::uint64_t rep_seed = 1;
    rep->add_option("--task", rep_task, "Instance file");
    rep->add_option("--generate", rep_family, "Generate a pogo or huga instance instead");
    rep->add_option("--seed", rep_seed, "Seed for --generate");
    rep->add_option("--commands", rep_commands, "One command per line")->required();
    rep->add_option("--out", rep_out, "Results file");

    // tournament
    auto* tour = app.add_subcommand("tournament", "Run a tournament");
    pal::TournamentConfig tc;
    std::string agent_dir = ".", out_dir = "tournament_out";
    tour->add_option("-c,--count", tc.games, "How many games to run")->capture_default_str();
    tour->add_option("-t,--tournament", tc.name, "Tournament name")->capture_default_str();
    tour->add_option("-g,--games", tc.games_dir, "Games folder")->required();
    tour->add_option("-a,--agent", tc.agent_name, "Agent name")->capture_default_str();
    tour->add_option("-d,--agent-dir", agent_dir, "Agent working directory")->capture_default_str();
    tour->add_option("-x,--agent-command", tc.agent_command, "Agent launch command")->required();
    tour->add_option("-i,--seconds", tc.seconds_per_game, "Seconds per game")->capture_default_str();
    tour->add_option("-m,--max-minutes", tc.max_minutes, "Max tournament minutes")->capture_default_str();
    tour->add_option("-o,--out", out_dir, "Output folder")->capture_default_str();
    tour->add_option("--fps", tc.fps, "Server ticks per second")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) {
            pal::ServerConfig config = pal::ServerConfig::from_env();
            if (agent_port) config.agent_port = *agent_port;
            if (control_port) config.control_port = *control_port;
            if (fps) config.fps = *fps;
            config.host = host;
            config.session.dev_mode = dev;
            config.validate();
            pal::Server server(config, &std::cout);
            server.listen();
            if (!serve_task.empty()) {
                server.preload(pal::load_task(serve_task),
                               serve_limit > 0 ? std::optional<double>(serve_limit) : std::nullopt);
            }
            std::cout << pal::ready_line(server.agent_port(), server.control_port()) << std::endl;
            g_server = &server;
            std::signal(SIGTERM, on_signal);
            std::signal(SIGINT, on_signal);
            std::signal(SIGPIPE, SIG_IGN);
            server.run();
            g_server = nullptr;
            return 0;
        }
        if (*gen) {
            for (const auto& p : pal::generate_instances(gen_task, gen_seed, gen_count, gen_out)) {
                std::cout << p.string() << '\n';
            }
            return 0;
        }
        if (*plan) {
            auto domain = pal::pddl::parse_domain(read_file(domain_file));
            auto problem = pal::pddl::parse_problem(read_file(problem_file), domain);
            auto task = pal::planner::ground(domain, problem);
            pal::planner::SearchStats stats;
            auto steps = pal::planner::plan(task, {}, &stats);
            if (plan_format == "json") {
                json j{{"solved", steps.has_value()},
                       {"groundActions", task.actions.size()},
                       {"evaluations", stats.evaluations},
                       {"usedFallback", stats.used_fallback}};
                j["plan"] = json::array();
                if (steps) {
                    for (int a : *steps) j["plan"].push_back(task.actions[a].label());
                }
                std::cout << j.dump(2) << '\n';
            } else if (steps) {
                for (int a : *steps) std::cout << task.actions[a].label() << '\n';
            } else {
                std::cout << "NO_PLAN\n";
            }
            return steps ? 0 : 2;
        }
        if (*agent) {
            pal::agents::AgentOptions options;
            options.log = &std::cout;
            if (nav.empty()) nav = agent_kind == "pogo" ? "tp" : "move";
            options.nav = nav == "tp" ? pal::agents::Nav::Teleport : pal::agents::Nav::Walk;
            options.domain_file = agent_domain;
            std::optional<std::filesystem::path> task;
            if (!agent_task.empty()) task = std::filesystem::absolute(agent_task);
            std::signal(SIGPIPE, SIG_IGN);
            return pal::agents::run_agent(agent_kind, agent_host, agent_port_opt, options, task);
        }
        if (*rep) {
            if (rep_task.empty() == rep_family.empty()) throw std::invalid_argument("give exactly one of --task and --generate");
            pal::TaskDef def = rep_task.empty() ? generated(rep_family, rep_seed) : pal::load_task(rep_task);
            std::vector<std::string> commands;
            std::istringstream in(read_file(rep_commands));
            for (std::string line; std::getline(in, line);) {
                if (!line.empty()) commands.push_back(line);
            }
            std::string results = pal::replay(def, commands);
            if (!rep_out.empty()) std::ofstream(rep_out, std::ios::binary) << results;
            std::cout << pal::sha256_hex(results) << '\n';
            return 0;
        }
        if (*tour) {
            tc.agent_dir = agent_dir;
            tc.output_dir = out_dir;
            auto summary = pal::run_tournament(tc);
            std::cout << "games " << summary.records.size() << " success rate " << summary.success_rate()
                      << (summary.complete ? "" : " (aborted: " + summary.abort_reason + ")") << '\n';
            return summary.complete ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "pal: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
