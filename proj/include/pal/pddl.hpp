#pragma once

// Typed STRIPS subset of PDDL: :strips, :typing and :negative-preconditions.

#include <compare>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pal::pddl {

class PddlError : public std::runtime_error {
public:
    PddlError(const std::string& what, int line, int column)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          line_(line),
          column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class UnsupportedRequirement : public PddlError {
public:
    using PddlError::PddlError;
};

struct TypedName {
    std::string name;
    std::string type = "object";

    auto operator<=>(const TypedName&) const = default;
};

// Arguments are variables ("?x") inside schemas and object names elsewhere.
struct Atom {
    std::string predicate;
    std::vector<std::string> args;

    auto operator<=>(const Atom&) const = default;
};

struct Literal {
    Atom atom;
    bool positive = true;

    auto operator<=>(const Literal&) const = default;
};

struct PredicateDecl {
    std::string name;
    std::vector<TypedName> parameters;

    bool operator==(const PredicateDecl&) const = default;
};

struct ActionSchema {
    std::string name;
    std::vector<TypedName> parameters;
    std::vector<Literal> precondition;
    std::vector<Atom> add;
    std::vector<Atom> del;

    bool operator==(const ActionSchema&) const = default;
};

struct Domain {
    std::string name;
    std::vector<std::string> requirements;
    std::map<std::string, std::string> types;  // type -> parent; "object" is the root
    std::vector<TypedName> constants;
    std::vector<PredicateDecl> predicates;
    std::vector<ActionSchema> actions;

    bool is_subtype(const std::string& type, const std::string& ancestor) const;
    const PredicateDecl* predicate(std::string_view name) const;
    bool operator==(const Domain&) const = default;
};

struct Problem {
    std::string name;
    std::string domain_name;
    std::vector<TypedName> objects;
    std::vector<Atom> init;
    std::vector<Literal> goal;

    bool operator==(const Problem&) const = default;
};

Domain parse_domain(std::string_view text);
// Type-checks against `domain`. Negative goals are rejected.
Problem parse_problem(std::string_view text, const Domain& domain);

std::string to_pddl(const Domain& domain);
std::string to_pddl(const Problem& problem);

}  // namespace pal::pddl
