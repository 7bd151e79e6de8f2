#include "pal/planner.hpp"

#include <algorithm>
#include <bit>
#include <set>

namespace pal::planner {

std::vector<FactId> State::facts() const {
    std::vector<FactId> out;
    for (std::size_t w = 0; w < words_.size(); ++w) {
        for (std::uint64_t bits = words_[w]; bits; bits &= bits - 1) {
            out.push_back(static_cast<FactId>(w * 64 + std::countr_zero(bits)));
        }
    }
    return out;
}

std::size_t State::hash() const {
    std::size_t h = 1469598103934665603ULL;
    for (auto w : words_) h = (h ^ std::hash<std::uint64_t>{}(w)) * 1099511628211ULL;
    return h;
}

State initial_state(const GroundTask& task) {
    State s(task.facts.size());
    for (FactId f : task.init) s.set(f);
    return s;
}

bool applicable(const GroundAction& action, const State& state) {
    for (FactId f : action.pre) {
        if (!state.has(f)) return false;
    }
    for (FactId f : action.pre_neg) {
        if (state.has(f)) return false;
    }
    return true;
}

State apply(const GroundAction& action, const State& state) {
    State next = state;
    for (FactId f : action.del) next.clear(f);
    for (FactId f : action.add) next.set(f);
    return next;
}

bool satisfies_goal(const GroundTask& task, const State& state) {
    return std::all_of(task.goal.begin(), task.goal.end(), [&](FactId f) { return state.has(f); });
}

RelaxedPlanGraph build_relaxed_plan(const GroundTask& task, const State& state) {
    RelaxedPlanGraph g;
    const auto nf = task.facts.size();
    const auto na = task.actions.size();
    g.fact_level.assign(nf, -1);
    g.action_level.assign(na, -1);
    for (FactId f : state.facts()) g.fact_level[f] = 0;

    auto goal_done = [&] {
        return std::all_of(task.goal.begin(), task.goal.end(), [&](FactId f) { return g.fact_level[f] >= 0; });
    };

    // Negative preconditions are ignored in the relaxation.
    int layer = 0;
    while (!(g.goal_reached = goal_done())) {
        std::vector<FactId> fresh;
        for (std::size_t a = 0; a < na; ++a) {
            if (g.action_level[a] >= 0) continue;
            const auto& act = task.actions[a];
            if (!std::all_of(act.pre.begin(), act.pre.end(), [&](FactId f) { return g.fact_level[f] >= 0; })) continue;
            g.action_level[a] = layer;
            for (FactId f : act.add) {
                if (g.fact_level[f] < 0) fresh.push_back(f);
            }
        }
        if (fresh.empty()) break;
        for (FactId f : fresh) g.fact_level[f] = layer + 1;
        ++layer;
    }
    g.layers = layer;
    if (!g.goal_reached) return g;

    std::vector<std::vector<int>> achievers(nf);
    for (std::size_t a = 0; a < na; ++a) {
        if (g.action_level[a] < 0) continue;
        for (FactId f : task.actions[a].add) achievers[f].push_back(static_cast<int>(a));
    }

    int top = 0;
    for (FactId f : task.goal) top = std::max(top, g.fact_level[f]);
    std::vector<std::vector<FactId>> goals_at(top + 1);
    std::vector<std::set<FactId>> marked(top + 1);
    std::vector<std::set<int>> chosen(top + 1);
    for (FactId f : task.goal) {
        if (g.fact_level[f] > 0) goals_at[g.fact_level[f]].push_back(f);
    }
    std::set<FactId> layer_one;
    for (int i = top; i >= 1; --i) {
        for (std::size_t k = 0; k < goals_at[i].size(); ++k) {
            FactId goal = goals_at[i][k];
            if (i == 1) layer_one.insert(goal);
            if (marked[i].contains(goal)) continue;
            int best = -1;
            for (int a : achievers[goal]) {
                if (g.action_level[a] == i - 1) {
                    best = a;  // achievers are in (name, args) order
                    break;
                }
            }
            chosen[i - 1].insert(best);
            for (FactId p : task.actions[best].pre) {
                if (g.fact_level[p] != 0 && !marked[i - 1].contains(p)) goals_at[g.fact_level[p]].push_back(p);
            }
            for (FactId e : task.actions[best].add) {
                marked[i].insert(e);
                marked[i - 1].insert(e);
            }
        }
    }
    for (const auto& layer_actions : chosen) {
        g.relaxed_plan.insert(g.relaxed_plan.end(), layer_actions.begin(), layer_actions.end());
    }
    for (std::size_t a = 0; a < na; ++a) {
        if (g.action_level[a] != 0) continue;
        const auto& act = task.actions[a];
        if (!applicable(act, state)) continue;
        if (std::any_of(act.add.begin(), act.add.end(), [&](FactId f) { return layer_one.contains(f); })) {
            g.helpful_actions.push_back(static_cast<int>(a));
        }
    }
    return g;
}

std::optional<int> h_ff(const GroundTask& task, const State& state) {
    auto g = build_relaxed_plan(task, state);
    if (!g.goal_reached) return std::nullopt;
    return static_cast<int>(g.relaxed_plan.size());
}

}  // namespace pal::planner
