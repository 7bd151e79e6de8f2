#include "pal/planner.hpp"

#include <deque>
#include <queue>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace pal::planner {

namespace {

struct Node {
    State state;
    int parent;
    int action;
};

std::vector<int> trace(const std::vector<Node>& nodes, int i) {
    std::vector<int> out;
    for (; nodes[i].parent >= 0; i = nodes[i].parent) out.push_back(nodes[i].action);
    return {out.rbegin(), out.rend()};
}

std::optional<std::vector<int>> gbfs(const GroundTask& task, const SearchOptions& options, SearchStats& stats) {
    std::vector<Node> nodes;
    std::unordered_set<State, StateHash> seen;
    using Entry = std::tuple<int, std::size_t, int>;  // h, insertion order, node
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

    State s0 = initial_state(task);
    ++stats.evaluations;
    auto h0 = h_ff(task, s0);
    if (!h0) return std::nullopt;
    nodes.push_back({s0, -1, -1});
    seen.insert(s0);
    if (satisfies_goal(task, s0)) return std::vector<int>{};
    std::size_t order = 0;
    open.emplace(*h0, order++, 0);
    while (!open.empty()) {
        auto [h, o, n] = open.top();
        open.pop();
        if (++stats.expansions > options.max_expansions) return std::nullopt;
        for (std::size_t a = 0; a < task.actions.size(); ++a) {
            const auto& act = task.actions[a];
            if (!applicable(act, nodes[n].state)) continue;
            State next = apply(act, nodes[n].state);
            if (!seen.insert(next).second) continue;
            nodes.push_back({next, n, static_cast<int>(a)});
            const int id = static_cast<int>(nodes.size()) - 1;
            if (satisfies_goal(task, next)) return trace(nodes, id);
            ++stats.evaluations;
            auto hn = h_ff(task, next);
            if (hn) open.emplace(*hn, order++, id);
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::vector<int>> plan(const GroundTask& task, const SearchOptions& options, SearchStats* stats_out) {
    SearchStats local;
    SearchStats& stats = stats_out ? *stats_out : local;
    stats = {};

    State current = initial_state(task);
    ++stats.evaluations;
    auto graph = build_relaxed_plan(task, current);
    if (!graph.goal_reached) return std::nullopt;
    int h = static_cast<int>(graph.relaxed_plan.size());
    std::vector<int> result;

    while (h > 0) {
        // Breadth-first lookahead over helpful actions for a strictly better state.
        struct Item {
            State state;
            std::vector<int> path;
            std::vector<int> helpful;
        };
        std::deque<Item> queue;
        std::unordered_set<State, StateHash> visited{current};
        queue.push_back({current, {}, graph.helpful_actions});
        bool improved = false;
        while (!queue.empty() && !improved) {
            Item item = std::move(queue.front());
            queue.pop_front();
            ++stats.expansions;
            for (int a : item.helpful) {
                State next = apply(task.actions[a], item.state);
                if (!visited.insert(next).second) continue;
                ++stats.evaluations;
                auto g = build_relaxed_plan(task, next);
                if (!g.goal_reached) continue;
                const int hn = static_cast<int>(g.relaxed_plan.size());
                std::vector<int> path = item.path;
                path.push_back(a);
                if (hn < h) {
                    result.insert(result.end(), path.begin(), path.end());
                    current = std::move(next);
                    graph = std::move(g);
                    h = hn;
                    improved = true;
                    break;
                }
                if (static_cast<int>(path.size()) < options.lookahead_depth) {
                    queue.push_back({std::move(next), std::move(path), std::move(g.helpful_actions)});
                }
            }
        }
        if (!improved) {
            stats.used_fallback = true;
            SearchStats fallback;
            auto p = gbfs(task, options, fallback);
            stats.evaluations += fallback.evaluations;
            stats.expansions += fallback.expansions;
            return p;
        }
    }
    return result;
}

std::optional<std::vector<std::string>> plan_text(std::string_view domain_text, std::string_view problem_text) {
    auto domain = pddl::parse_domain(domain_text);
    auto problem = pddl::parse_problem(problem_text, domain);
    auto task = ground(domain, problem);
    auto p = plan(task);
    if (!p) return std::nullopt;
    std::vector<std::string> out;
    for (int a : *p) out.push_back(task.actions[a].label());
    return out;
}

}  // namespace pal::planner
