#pragma once

#include "evchain/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace evchain::ocl {

// OCL-subset constraint language:
//
//   constraint_set = { context_block } ;
//   context_block  = "context" identifier { invariant } ;
//   invariant      = "inv" identifier ":" expression ;
//   expression     = or_expr { "implies" or_expr } ;
//   or_expr        = and_expr { "or" and_expr } ;
//   and_expr       = unary { "and" unary } ;
//   unary          = "not" unary | comparison ;
//   comparison     = postfix [ cmp_op postfix ] ;
//   cmp_op         = "=" | "<>" | "<" | "<=" | ">" | ">=" ;
//   postfix        = primary { "." identifier | "->" collection_call } ;
//   collection_call= ("notEmpty"|"isEmpty"|"size") "(" ")"
//                  | ("forAll"|"exists") "(" identifier "|" expression ")" ;
//   primary        = "self" | identifier | number | string | "(" expression ")" ;
//
// Navigation over a 0..1 reference yields the single target; applying a
// collection operator to it treats it as a collection of size <= 1, while
// navigating further into an empty one is an evaluation error (reported as
// an error verdict, never a crash). implies short-circuits, so guarded
// navigation in the style of `x->notEmpty() implies x.attr >= ...` never
// errors on the empty case.

struct Expr {
    enum class Kind { SelfRef, VarRef, Literal, Navigate, Collection, Not, Binary };
    enum class BinOp { And, Or, Implies, Eq, Ne, Lt, Le, Gt, Ge };
    enum class CollOp { NotEmpty, IsEmpty, Size, ForAll, Exists };

    Kind kind;
    std::string name;  // VarRef: variable; Navigate: feature
    Value literal;     // Literal
    BinOp bin_op = BinOp::And;
    CollOp coll_op = CollOp::NotEmpty;
    std::string iter_var; // ForAll / Exists
    std::unique_ptr<Expr> lhs; // Navigate/Collection: source; Not: operand
    std::unique_ptr<Expr> rhs; // Binary: right operand; ForAll/Exists: body
    int line = 0, column = 0;
};

struct Invariant {
    std::string name;
    std::shared_ptr<const Expr> expr;
};

struct ContextBlock {
    std::string context_class;
    std::vector<Invariant> invariants;
};

struct ConstraintSet {
    std::vector<ContextBlock> contexts;
};

// Syntax errors carry line/column. Invariant names must be unique within
// their context block.
ConstraintSet parse_constraints(const std::string& text);

enum class Verdict { Pass, Fail, Error };

const char* to_string(Verdict v);

struct ValidationEntry {
    std::string context_class;
    std::string invariant;
    std::string object_id;
    Verdict verdict = Verdict::Pass;
    std::string message; // failure cause for Error verdicts
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;

    bool all_passed() const;
    size_t count(Verdict v) const;
};

// Evaluates one invariant body on one object. This is the building block
// evaluate() packages into a report; exposed so bulk callers can skip
// report assembly.
Verdict evaluate_one(const Expr& expr, const ModelObject& self,
                     const InstanceModel& m, std::string* message = nullptr);

// One entry per (invariant, object-of-context-class) pair, in declaration
// and model order. Unknown context classes are a caller error and throw.
ValidationReport evaluate(const ConstraintSet& cs, const InstanceModel& m);

std::string report_to_json(const ValidationReport& report);

} // namespace evchain::ocl
