#include "pal/planner.hpp"

#include <algorithm>
#include <set>

namespace pal::planner {

using pddl::Atom;

std::string GroundAction::label() const {
    std::string out = "(" + name;
    for (const auto& a : args) out += " " + a;
    return out + ")";
}

std::optional<FactId> GroundTask::find(const Atom& atom) const {
    auto it = index.find(atom);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

namespace {

class Grounder {
public:
    Grounder(const pddl::Domain& d, const pddl::Problem& p) : domain_(d), problem_(p) {
        for (const auto& c : d.constants) objects_.push_back(c);
        for (const auto& o : p.objects) objects_.push_back(o);
        std::sort(objects_.begin(), objects_.end());
        for (const auto& o : objects_) object_type_[o.name] = o.type;
    }

    GroundTask run() {
        for (const auto& a : problem_.init) {
            FactId f = intern(a);
            if (reached_.insert(f).second) remember(a);
            task_.init.push_back(f);
        }
        for (const auto& l : problem_.goal) task_.goal.push_back(intern(l.atom));
        std::sort(task_.init.begin(), task_.init.end());
        task_.init.erase(std::unique(task_.init.begin(), task_.init.end()), task_.init.end());

        // Relaxed reachability fixpoint: keep instantiating schemas against the
        // facts reached so far until no new action appears.
        for (bool changed = true; changed;) {
            changed = false;
            std::vector<Atom> fresh;
            for (const auto& schema : domain_.actions) {
                std::vector<const pddl::Literal*> positive;
                for (const auto& l : schema.precondition) {
                    if (l.positive) positive.push_back(&l);
                }
                std::map<std::string, std::string> binding;
                enumerate(schema, positive, 0, binding, [&](const std::vector<std::string>& args) {
                    if (!seen_.insert({schema.name, args}).second) return;
                    changed = true;
                    auto sub = [&](const Atom& a) {
                        Atom g{a.predicate, {}};
                        for (const auto& x : a.args) g.args.push_back(x[0] == '?' ? lookup(schema, args, x) : x);
                        return g;
                    };
                    GroundAction ga;
                    ga.name = schema.name;
                    ga.args = args;
                    for (const auto& l : schema.precondition) (l.positive ? ga.pre : ga.pre_neg).push_back(intern(sub(l.atom)));
                    for (const auto& a : schema.add) {
                        Atom g = sub(a);
                        ga.add.push_back(intern(g));
                        fresh.push_back(std::move(g));
                    }
                    for (const auto& a : schema.del) ga.del.push_back(intern(sub(a)));
                    normalize(ga);
                    task_.actions.push_back(std::move(ga));
                });
            }
            for (auto& a : fresh) {
                FactId f = intern(a);
                if (reached_.insert(f).second) remember(a);
            }
        }
        std::sort(task_.actions.begin(), task_.actions.end(), [](const GroundAction& a, const GroundAction& b) {
            return std::tie(a.name, a.args) < std::tie(b.name, b.args);
        });
        return std::move(task_);
    }

private:
    using Emit = std::function<void(const std::vector<std::string>&)>;

    struct Facts {
        std::vector<std::vector<std::string>> tuples;
        // position -> object -> tuple indices
        std::vector<std::map<std::string, std::vector<std::size_t>>> postings;
    };

    void remember(const Atom& a) {
        auto& facts = by_predicate_[a.predicate];
        facts.postings.resize(a.args.size());
        for (std::size_t j = 0; j < a.args.size(); ++j) facts.postings[j][a.args[j]].push_back(facts.tuples.size());
        facts.tuples.push_back(a.args);
    }

    FactId intern(const Atom& a) {
        auto [it, inserted] = task_.index.emplace(a, static_cast<FactId>(task_.facts.size()));
        if (inserted) task_.facts.push_back(a);
        return it->second;
    }

    static std::string lookup(const pddl::ActionSchema& s, const std::vector<std::string>& args, const std::string& var) {
        for (std::size_t i = 0; i < s.parameters.size(); ++i) {
            if (s.parameters[i].name == var) return args[i];
        }
        return var;
    }

    bool fits(const std::string& object, const std::string& type) const {
        auto it = object_type_.find(object);
        return it != object_type_.end() && domain_.is_subtype(it->second, type);
    }

    static void normalize(GroundAction& a) {
        auto tidy = [](std::vector<FactId>& v) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        };
        tidy(a.pre);
        tidy(a.pre_neg);
        tidy(a.add);
        tidy(a.del);
        // An atom both added and deleted ends up true.
        std::erase_if(a.del, [&](FactId f) { return std::binary_search(a.add.begin(), a.add.end(), f); });
    }

    void enumerate(const pddl::ActionSchema& schema, const std::vector<const pddl::Literal*>& positive,
                   std::size_t i, std::map<std::string, std::string>& binding, const Emit& emit) {
        if (i == positive.size()) {
            bind_free(schema, 0, binding, emit);
            return;
        }
        const Atom& pattern = positive[i]->atom;
        auto it = by_predicate_.find(pattern.predicate);
        if (it == by_predicate_.end()) return;
        const Facts& facts = it->second;
        const std::size_t count = facts.tuples.size();  // facts added later wait for the next pass
        const std::vector<std::size_t>* candidates = nullptr;
        for (std::size_t j = 0; j < pattern.args.size() && !candidates; ++j) {
            const std::string& x = pattern.args[j];
            const std::string* value = &x;
            if (x[0] == '?') {
                auto b = binding.find(x);
                if (b == binding.end()) continue;
                value = &b->second;
            }
            auto post = facts.postings[j].find(*value);
            if (post == facts.postings[j].end()) return;
            candidates = &post->second;
        }
        const std::size_t n = candidates ? candidates->size() : count;
        for (std::size_t c = 0; c < n; ++c) {
            const std::size_t k = candidates ? (*candidates)[c] : c;
            if (k >= count) break;
            const auto& tuple = facts.tuples[k];
            std::vector<std::string> bound_here;
            bool ok = true;
            for (std::size_t j = 0; j < pattern.args.size() && ok; ++j) {
                const std::string& x = pattern.args[j];
                if (x[0] != '?') {
                    ok = x == tuple[j];
                    continue;
                }
                auto b = binding.find(x);
                if (b != binding.end()) {
                    ok = b->second == tuple[j];
                } else {
                    const std::string* type = nullptr;
                    for (const auto& p : schema.parameters) {
                        if (p.name == x) type = &p.type;
                    }
                    ok = type && fits(tuple[j], *type);
                    if (ok) {
                        binding[x] = tuple[j];
                        bound_here.push_back(x);
                    }
                }
            }
            if (ok) enumerate(schema, positive, i + 1, binding, emit);
            for (const auto& x : bound_here) binding.erase(x);
        }
    }

    void bind_free(const pddl::ActionSchema& schema, std::size_t p, std::map<std::string, std::string>& binding,
                   const Emit& emit) {
        if (p == schema.parameters.size()) {
            std::vector<std::string> args;
            for (const auto& param : schema.parameters) args.push_back(binding.at(param.name));
            emit(args);
            return;
        }
        const auto& param = schema.parameters[p];
        if (binding.contains(param.name)) {
            bind_free(schema, p + 1, binding, emit);
            return;
        }
        for (const auto& o : objects_) {
            if (!domain_.is_subtype(o.type, param.type)) continue;
            binding[param.name] = o.name;
            bind_free(schema, p + 1, binding, emit);
        }
        binding.erase(param.name);
    }

    const pddl::Domain& domain_;
    const pddl::Problem& problem_;
    std::vector<pddl::TypedName> objects_;
    std::map<std::string, std::string> object_type_;
    GroundTask task_;
    std::set<FactId> reached_;
    std::map<std::string, Facts> by_predicate_;
    std::set<std::pair<std::string, std::vector<std::string>>> seen_;
};

}  // namespace

GroundTask ground(const pddl::Domain& domain, const pddl::Problem& problem) { return Grounder(domain, problem).run(); }

}  // namespace pal::planner
