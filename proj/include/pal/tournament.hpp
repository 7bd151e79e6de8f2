#pragma once

// Runs a sequence of instances against one agent process: starts the server,
// launches the agent, watches STATUS on the control port and writes three log
// tracks per instance plus result files.

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace pal {

struct TournamentConfig {
    int games = 100;
    std::string name = "tournament";
    std::filesystem::path games_dir;
    std::string agent_name = "agent";
    std::filesystem::path agent_dir = ".";
    std::string agent_command;  // run by /bin/sh -c in agent_dir
    double seconds_per_game = 300;
    double max_minutes = 2880;

    std::filesystem::path output_dir = "tournament_out";
    // Server argv. Empty: this executable with "serve".
    std::vector<std::string> server_command;
    int fps = 20;
    double poll_interval = 0.1;
    double watchdog_factor = 5;

    void validate() const;
};

struct InstanceRecord {
    std::string instance;
    std::string start;  // ISO-8601 UTC
    std::string end;
    std::string end_reason;  // GOAL, TIMEOUT, COST_CEILING, GIVE_UP, NONRESPONSIVE
    long long steps = 0;
    double cost = 0;
    bool goal_achieved = false;
    nlohmann::json novelty_reports = nlohmann::json::array();
    double wall_seconds = 0;
};

nlohmann::json to_json(const InstanceRecord& record);

struct TournamentSummary {
    std::vector<InstanceRecord> records;
    bool complete = false;
    std::string abort_reason;
    double wall_seconds = 0;

    double success_rate() const;
};

// Results land in output_dir: results.jsonl, summary.csv, summary.json and
// <instance>.{manager,game,agent}.log.
TournamentSummary run_tournament(const TournamentConfig& config);

// First line a `serve` process prints once both ports are bound.
std::string ready_line(int agent_port, int control_port);

}  // namespace pal
