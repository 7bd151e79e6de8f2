#pragma once

// Grounding, the FF relaxed-plan heuristic and enforced hill-climbing.

#include "pal/pddl.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pal::planner {

using FactId = int;

struct GroundAction {
    std::string name;
    std::vector<std::string> args;
    std::vector<FactId> pre;      // positive preconditions
    std::vector<FactId> pre_neg;  // must be false
    std::vector<FactId> add;
    std::vector<FactId> del;  // never overlaps add
    double cost = 1;

    // "(name a b)"
    std::string label() const;
};

struct GroundTask {
    std::vector<pddl::Atom> facts;
    std::map<pddl::Atom, FactId> index;
    std::vector<GroundAction> actions;  // sorted by (name, args)
    std::vector<FactId> init;
    std::vector<FactId> goal;

    std::optional<FactId> find(const pddl::Atom& atom) const;
};

// Instantiates every action reachable under delete relaxation from the
// initial state. Output order is deterministic.
GroundTask ground(const pddl::Domain& domain, const pddl::Problem& problem);

// Fixed-width set of facts.
class State {
public:
    State() = default;
    explicit State(std::size_t facts) : words_((facts + 63) / 64, 0) {}

    bool has(FactId f) const { return (words_[f >> 6] >> (f & 63)) & 1U; }
    void set(FactId f) { words_[f >> 6] |= std::uint64_t{1} << (f & 63); }
    void clear(FactId f) { words_[f >> 6] &= ~(std::uint64_t{1} << (f & 63)); }
    std::vector<FactId> facts() const;

    bool operator==(const State&) const = default;
    std::size_t hash() const;

private:
    std::vector<std::uint64_t> words_;
};

struct StateHash {
    std::size_t operator()(const State& s) const { return s.hash(); }
};

State initial_state(const GroundTask& task);
bool applicable(const GroundAction& action, const State& state);
State apply(const GroundAction& action, const State& state);
bool satisfies_goal(const GroundTask& task, const State& state);

struct RelaxedPlanGraph {
    std::vector<int> fact_level;    // -1 when never reached
    std::vector<int> action_level;  // -1 when never applicable
    int layers = 0;
    bool goal_reached = false;
    std::vector<int> relaxed_plan;      // action indices, by layer then index
    std::vector<int> helpful_actions;   // applicable now and adding a layer-1 subgoal
};

// Builds the relaxed planning graph from `state` and extracts a relaxed plan.
// Achiever ties go to the lexicographically smallest (name, args).
RelaxedPlanGraph build_relaxed_plan(const GroundTask& task, const State& state);

// Relaxed-plan length; nullopt when the goal is unreachable even relaxed.
std::optional<int> h_ff(const GroundTask& task, const State& state);

struct SearchOptions {
    int lookahead_depth = 5;
    std::size_t max_expansions = 2'000'000;
};

struct SearchStats {
    bool used_fallback = false;
    std::size_t evaluations = 0;
    std::size_t expansions = 0;
};

// Enforced hill-climbing with helpful actions, falling back to complete
// greedy best-first search. Returns action indices or nullopt (no plan).
std::optional<std::vector<int>> plan(const GroundTask& task, const SearchOptions& options = {},
                                     SearchStats* stats = nullptr);

// Convenience: parse, ground and plan. Returns action labels.
std::optional<std::vector<std::string>> plan_text(std::string_view domain_text, std::string_view problem_text);

}  // namespace pal::planner
