#include "pal/pddl.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <set>

namespace pal::pddl {

namespace {

struct Node {
    bool list = false;
    std::string atom;  // lower-cased token when !list
    std::vector<Node> items;
    int line = 1;
    int column = 1;
};

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    Node read_document() {
        skip();
        if (pos_ >= text_.size()) throw PddlError("empty input", line_, col_);
        Node n = read();
        skip();
        if (pos_ < text_.size()) throw PddlError("unexpected text after the top-level form", line_, col_);
        return n;
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                break;
            }
        }
    }

    Node read() {
        Node n;
        n.line = line_;
        n.column = col_;
        char c = text_[pos_];
        if (c == ')') throw PddlError("unbalanced ')'", line_, col_);
        if (c == '(') {
            n.list = true;
            advance();
            for (;;) {
                skip();
                if (pos_ >= text_.size()) throw PddlError("unbalanced '(': missing ')'", n.line, n.column);
                if (text_[pos_] == ')') {
                    advance();
                    return n;
                }
                n.items.push_back(read());
            }
        }
        std::string tok;
        while (pos_ < text_.size()) {
            char d = text_[pos_];
            if (d == '(' || d == ')' || d == ';' || d == ' ' || d == '\t' || d == '\r' || d == '\n') break;
            tok += static_cast<char>(std::tolower(static_cast<unsigned char>(d)));
            advance();
        }
        n.atom = tok;
        return n;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

[[noreturn]] void error_at(const Node& n, const std::string& what) { throw PddlError(what, n.line, n.column); }

const std::string& expect_atom(const Node& n, const char* what) {
    if (n.list || n.atom.empty()) error_at(n, std::string("expected ") + what);
    return n.atom;
}

const Node& expect_list(const Node& n, const char* what) {
    if (!n.list) error_at(n, std::string("expected ") + what);
    return n;
}

bool is_variable(const std::string& s) { return s.size() > 1 && s[0] == '?'; }

// a b - t c - u d  →  typed names; untyped default to object.
std::vector<TypedName> typed_list(const Node& list, std::size_t from, bool variables) {
    std::vector<TypedName> out;
    std::vector<std::string> pending;
    for (std::size_t i = from; i < list.items.size(); ++i) {
        const Node& n = list.items[i];
        const std::string& tok = expect_atom(n, "a name");
        if (tok == "-") {
            if (i + 1 >= list.items.size() || pending.empty()) error_at(n, "dangling '-' in typed list");
            const Node& t = list.items[++i];
            if (t.list) error_at(t, "either-types are not supported");
            for (auto& p : pending) out.push_back({p, t.atom});
            pending.clear();
            continue;
        }
        if (variables != is_variable(tok)) {
            error_at(n, variables ? "expected a ?variable" : "expected an object name, not a variable");
        }
        pending.push_back(tok);
    }
    for (auto& p : pending) out.push_back({p, "object"});
    return out;
}

const std::set<std::string>& supported_requirements() {
    static const std::set<std::string> s = {":strips", ":typing", ":negative-preconditions"};
    return s;
}

struct Scope {
    const Domain& domain;
    std::map<std::string, std::string> names;  // variable or object -> type
};

Atom read_atom(const Node& n, const Scope& scope, bool allow_variables) {
    expect_list(n, "an atom");
    if (n.items.empty()) error_at(n, "empty atom");
    Atom a;
    a.predicate = expect_atom(n.items[0], "a predicate name");
    const PredicateDecl* decl = scope.domain.predicate(a.predicate);
    if (!decl) error_at(n.items[0], "undeclared predicate " + a.predicate);
    if (decl->parameters.size() + 1 != n.items.size()) {
        error_at(n, "predicate " + a.predicate + " takes " + std::to_string(decl->parameters.size()) +
                        " arguments");
    }
    for (std::size_t i = 1; i < n.items.size(); ++i) {
        const std::string& arg = expect_atom(n.items[i], "an argument");
        if (is_variable(arg) && !allow_variables) error_at(n.items[i], "variables are not allowed here");
        auto it = scope.names.find(arg);
        if (it == scope.names.end()) error_at(n.items[i], "unknown " + std::string(is_variable(arg) ? "variable " : "object ") + arg);
        const std::string& want = decl->parameters[i - 1].type;
        if (!scope.domain.is_subtype(it->second, want)) {
            error_at(n.items[i], arg + " has type " + it->second + ", expected " + want);
        }
        a.args.push_back(arg);
    }
    return a;
}

Literal read_literal(const Node& n, const Scope& scope, bool allow_variables) {
    expect_list(n, "a literal");
    if (!n.items.empty() && !n.items[0].list && n.items[0].atom == "not") {
        if (n.items.size() != 2) error_at(n, "'not' takes one atom");
        return {read_atom(n.items[1], scope, allow_variables), false};
    }
    if (!n.items.empty() && !n.items[0].list) {
        const std::string& head = n.items[0].atom;
        if (head == "or" || head == "imply" || head == "exists" || head == "forall" || head == "when" ||
            head == "=") {
            error_at(n, "'" + head + "' is outside the supported STRIPS subset");
        }
    }
    return {read_atom(n, scope, allow_variables), true};
}

// Flattens (and ...) or a single literal.
std::vector<Literal> read_conjunction(const Node& n, const Scope& scope, bool allow_variables) {
    expect_list(n, "a condition");
    std::vector<Literal> out;
    if (n.items.empty()) return out;
    if (!n.items[0].list && n.items[0].atom == "and") {
        for (std::size_t i = 1; i < n.items.size(); ++i) {
            auto part = read_conjunction(n.items[i], scope, allow_variables);
            out.insert(out.end(), part.begin(), part.end());
        }
        return out;
    }
    out.push_back(read_literal(n, scope, allow_variables));
    return out;
}

void check_type(const Domain& d, const Node& at, const std::string& type) {
    if (type != "object" && !d.types.contains(type)) error_at(at, "undeclared type " + type);
}

ActionSchema read_action(const Node& n, const Domain& domain) {
    ActionSchema a;
    if (n.items.size() < 2) error_at(n, "action needs a name");
    a.name = expect_atom(n.items[1], "an action name");
    Scope scope{domain, {}};
    for (const auto& c : domain.constants) scope.names[c.name] = c.type;
    bool have_params = false;
    for (std::size_t i = 2; i < n.items.size(); i += 2) {
        const std::string& key = expect_atom(n.items[i], "an action keyword");
        if (i + 1 >= n.items.size()) error_at(n.items[i], key + " needs a value");
        const Node& value = n.items[i + 1];
        if (key == ":parameters") {
            a.parameters = typed_list(expect_list(value, "a parameter list"), 0, true);
            for (const auto& p : a.parameters) {
                check_type(domain, value, p.type);
                if (scope.names.contains(p.name) && is_variable(p.name)) error_at(value, "duplicate parameter " + p.name);
                scope.names[p.name] = p.type;
            }
            have_params = true;
        } else if (key == ":precondition") {
            if (!have_params) error_at(n.items[i], ":parameters must come first");
            a.precondition = read_conjunction(value, scope, true);
        } else if (key == ":effect") {
            if (!have_params) error_at(n.items[i], ":parameters must come first");
            for (auto& lit : read_conjunction(value, scope, true)) {
                (lit.positive ? a.add : a.del).push_back(std::move(lit.atom));
            }
        } else {
            error_at(n.items[i], "unsupported action keyword " + key);
        }
    }
    return a;
}

std::optional<std::string> header_name(const Node& n, const char* kind) {
    if (!n.list || n.items.size() != 2 || n.items[0].list || n.items[0].atom != kind) return std::nullopt;
    return expect_atom(n.items[1], "a name");
}

}  // namespace

bool Domain::is_subtype(const std::string& type, const std::string& ancestor) const {
    if (ancestor == "object") return true;
    std::string t = type;
    for (std::size_t guard = 0; guard <= types.size(); ++guard) {
        if (t == ancestor) return true;
        auto it = types.find(t);
        if (it == types.end()) return false;
        t = it->second;
    }
    return false;
}

const PredicateDecl* Domain::predicate(std::string_view name) const {
    for (const auto& p : predicates) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

Domain parse_domain(std::string_view text) {
    Node root = Reader(text).read_document();
    expect_list(root, "(define ...)");
    if (root.items.size() < 2 || root.items[0].list || root.items[0].atom != "define") {
        error_at(root, "expected (define (domain ...) ...)");
    }
    auto name = header_name(root.items[1], "domain");
    if (!name) error_at(root.items[1], "expected (domain <name>)");
    Domain d;
    d.name = *name;
    for (std::size_t i = 2; i < root.items.size(); ++i) {
        const Node& sec = expect_list(root.items[i], "a domain section");
        if (sec.items.empty()) error_at(sec, "empty section");
        const std::string& key = expect_atom(sec.items[0], "a section keyword");
        if (key == ":requirements") {
            for (std::size_t j = 1; j < sec.items.size(); ++j) {
                const std::string& req = expect_atom(sec.items[j], "a requirement flag");
                if (!supported_requirements().contains(req)) {
                    throw UnsupportedRequirement("unsupported requirement " + req, sec.items[j].line,
                                                 sec.items[j].column);
                }
                d.requirements.push_back(req);
            }
        } else if (key == ":types") {
            for (const auto& t : typed_list(sec, 1, false)) {
                if (t.name == "object") error_at(sec, "'object' is the implicit root type");
                d.types[t.name] = t.type;
            }
            // A parent named only on the right of '-' is declared implicitly.
            std::vector<std::string> parents;
            for (const auto& [t, parent] : d.types) parents.push_back(parent);
            for (const auto& parent : parents) {
                if (parent != "object" && !d.types.contains(parent)) d.types[parent] = "object";
            }
            for (const auto& [t, parent] : d.types) {
                if (d.is_subtype(parent, t)) error_at(sec, "cyclic type hierarchy at " + t);
            }
        } else if (key == ":constants") {
            d.constants = typed_list(sec, 1, false);
            for (const auto& c : d.constants) check_type(d, sec, c.type);
        } else if (key == ":predicates") {
            for (std::size_t j = 1; j < sec.items.size(); ++j) {
                const Node& p = expect_list(sec.items[j], "a predicate declaration");
                if (p.items.empty()) error_at(p, "empty predicate declaration");
                PredicateDecl decl{expect_atom(p.items[0], "a predicate name"), typed_list(p, 1, true)};
                for (const auto& param : decl.parameters) check_type(d, p, param.type);
                if (d.predicate(decl.name)) error_at(p, "duplicate predicate " + decl.name);
                d.predicates.push_back(std::move(decl));
            }
        } else if (key == ":action") {
            d.actions.push_back(read_action(sec, d));
        } else if (key == ":durative-action" || key == ":functions" || key == ":derived" ||
                   key == ":process" || key == ":event") {
            error_at(sec.items[0], key + " is outside the supported STRIPS subset");
        } else {
            error_at(sec.items[0], "unknown domain section " + key);
        }
    }
    bool typed = std::find(d.requirements.begin(), d.requirements.end(), ":typing") != d.requirements.end();
    if (!typed && !d.types.empty()) error_at(root, ":types used without :typing");
    bool negative = std::find(d.requirements.begin(), d.requirements.end(), ":negative-preconditions") !=
                    d.requirements.end();
    for (const auto& a : d.actions) {
        for (const auto& l : a.precondition) {
            if (!l.positive && !negative) {
                error_at(root, "action " + a.name + " has a negative precondition without :negative-preconditions");
            }
        }
    }
    return d;
}

Problem parse_problem(std::string_view text, const Domain& domain) {
    Node root = Reader(text).read_document();
    expect_list(root, "(define ...)");
    if (root.items.size() < 2 || root.items[0].list || root.items[0].atom != "define") {
        error_at(root, "expected (define (problem ...) ...)");
    }
    auto name = header_name(root.items[1], "problem");
    if (!name) error_at(root.items[1], "expected (problem <name>)");
    Problem p;
    p.name = *name;
    Scope scope{domain, {}};
    for (const auto& c : domain.constants) scope.names[c.name] = c.type;
    bool have_domain = false;
    for (std::size_t i = 2; i < root.items.size(); ++i) {
        const Node& sec = expect_list(root.items[i], "a problem section");
        if (sec.items.empty()) error_at(sec, "empty section");
        const std::string& key = expect_atom(sec.items[0], "a section keyword");
        if (key == ":domain") {
            if (sec.items.size() != 2) error_at(sec, "expected (:domain <name>)");
            p.domain_name = expect_atom(sec.items[1], "a domain name");
            if (p.domain_name != domain.name) {
                error_at(sec.items[1], "problem is for domain " + p.domain_name + ", not " + domain.name);
            }
            have_domain = true;
        } else if (key == ":requirements") {
            for (std::size_t j = 1; j < sec.items.size(); ++j) {
                const std::string& req = expect_atom(sec.items[j], "a requirement flag");
                if (!supported_requirements().contains(req)) {
                    throw UnsupportedRequirement("unsupported requirement " + req, sec.items[j].line,
                                                 sec.items[j].column);
                }
            }
        } else if (key == ":objects") {
            p.objects = typed_list(sec, 1, false);
            for (const auto& o : p.objects) {
                check_type(domain, sec, o.type);
                if (scope.names.contains(o.name)) error_at(sec, "duplicate object " + o.name);
                scope.names[o.name] = o.type;
            }
        } else if (key == ":init") {
            for (std::size_t j = 1; j < sec.items.size(); ++j) {
                const Node& f = sec.items[j];
                if (f.list && !f.items.empty() && !f.items[0].list && f.items[0].atom == "not") {
                    error_at(f, "negative literals are not allowed in :init");
                }
                p.init.push_back(read_atom(f, scope, false));
            }
        } else if (key == ":goal") {
            if (sec.items.size() != 2) error_at(sec, "expected (:goal <condition>)");
            p.goal = read_conjunction(sec.items[1], scope, false);
            for (const auto& l : p.goal) {
                if (!l.positive) error_at(sec.items[1], "negative goals are not supported");
            }
        } else if (key == ":metric") {
            error_at(sec.items[0], ":metric is outside the supported STRIPS subset");
        } else {
            error_at(sec.items[0], "unknown problem section " + key);
        }
    }
    if (!have_domain) error_at(root, "problem lacks (:domain ...)");
    return p;
}

namespace {

std::string typed(const std::vector<TypedName>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ' ';
        out += names[i].name;
        bool last_of_group = i + 1 == names.size() || names[i + 1].type != names[i].type;
        if (last_of_group) out += " - " + names[i].type;
    }
    return out;
}

std::string atom_text(const Atom& a) {
    std::string out = "(" + a.predicate;
    for (const auto& arg : a.args) out += " " + arg;
    return out + ")";
}

std::string literal_text(const Literal& l) { return l.positive ? atom_text(l.atom) : "(not " + atom_text(l.atom) + ")"; }

}  // namespace

std::string to_pddl(const Domain& d) {
    std::string out = "(define (domain " + d.name + ")\n";
    if (!d.requirements.empty()) {
        out += "  (:requirements";
        for (const auto& r : d.requirements) out += " " + r;
        out += ")\n";
    }
    if (!d.types.empty()) {
        out += "  (:types";
        for (const auto& [t, parent] : d.types) out += " " + t + " - " + parent;
        out += ")\n";
    }
    if (!d.constants.empty()) out += "  (:constants " + typed(d.constants) + ")\n";
    out += "  (:predicates";
    for (const auto& p : d.predicates) {
        out += "\n    (" + p.name;
        if (!p.parameters.empty()) out += " " + typed(p.parameters);
        out += ")";
    }
    out += ")\n";
    for (const auto& a : d.actions) {
        out += "  (:action " + a.name + "\n    :parameters (" + typed(a.parameters) + ")\n    :precondition (and";
        for (const auto& l : a.precondition) out += " " + literal_text(l);
        out += ")\n    :effect (and";
        for (const auto& e : a.add) out += " " + atom_text(e);
        for (const auto& e : a.del) out += " (not " + atom_text(e) + ")";
        out += "))\n";
    }
    return out + ")\n";
}

std::string to_pddl(const Problem& p) {
    std::string out = "(define (problem " + p.name + ")\n  (:domain " + p.domain_name + ")\n";
    out += "  (:objects " + typed(p.objects) + ")\n  (:init";
    for (const auto& a : p.init) out += "\n    " + atom_text(a);
    out += ")\n  (:goal (and";
    for (const auto& l : p.goal) out += " " + literal_text(l);
    return out + "))\n)\n";
}

}  // namespace pal::pddl
