#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "hydranav/syntax.hpp"

namespace hydranav::ltl {

enum class Kind { Atom, Or, And, Eventually, Always };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
    Kind kind = Kind::Atom;
    std::string name; // Atom
    FormulaPtr left;  // Or/And left; Eventually/Always operand
    FormulaPtr right; // Or/And right
    std::size_t offset = 0;
};

class LtlError : public std::runtime_error {
  public:
    LtlError(std::size_t offset, const std::string& msg) : std::runtime_error(msg), offset_(offset) {}
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

class UnknownAtom : public LtlError {
  public:
    UnknownAtom(std::size_t offset, std::string name);
    const std::string& name() const { return name_; }

  private:
    std::string name_;
};

// Surface syntax: `<>` eventually, `[]` always, `\/`, `/\` (binds tighter), parentheses,
// identifiers. Binary operators associate to the right.
FormulaPtr parse_ltl(std::string_view text);
std::string print(const FormulaPtr& f);
std::size_t node_count(const FormulaPtr& f);

// Atoms are the parameterless type aliases of an `.hdt` module.
struct AtomEnv {
    std::map<std::string, syntax::TypePtr, std::less<>> atoms;
    syntax::Module module;

    static AtomEnv from_module(syntax::Module m);
    static AtomEnv from_source(std::string_view hdt_source);
};

syntax::TypePtr translate_ltl(const FormulaPtr& f, const AtomEnv& env);

} // namespace hydranav::ltl
