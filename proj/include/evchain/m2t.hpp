#pragma once

#include "evchain/model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace evchain::m2t {

// Model-to-text template language:
//
//   [template public name(param : Class)] ... [/template]
//   [file (nameExpr, appendFlag, 'UTF-8')] ... [/file]
//   [for (var : Class | expr)] ... [/for]
//   [if (expr)] ... [/if]
//   [comment ... /]
//   [expr/]                                 (interpolation)
//
// Query expressions:
//
//   expr       = postfix [ ("="|"<>"|"<"|"<="|">"|">=") postfix ] ;
//   postfix    = primary { "." ident [ "(" args ")" ] | "->" ident "(" args ")" } ;
//   primary    = ident | number | string | "true" | "false" | "(" expr ")" ;
//
// Dot calls are string operations (concat, toLowerCase, tokenize); arrow
// calls are collection operations (first, last, size, indexOf, union).
// indexOf is 1-based. tokenize drops empty segments. union concatenates,
// first operand then second.
//
// Literal text renders byte-exactly, with one whitespace rule: a block tag
// alone on its line (only blanks around it) disappears together with that
// line; inline tags consume nothing. A literal '[' is produced by
// interpolating a string literal: ['['/].

struct QueryExpr {
    enum class Kind { VarRef, Literal, Navigate, StringOp, CollectionOp, Compare };
    enum class StrOp { Concat, ToLowerCase, Tokenize };
    enum class CollOp { First, Last, Size, IndexOf, Union };
    enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

    Kind kind;
    std::string name; // VarRef variable / Navigate feature
    Value literal;
    StrOp str_op = StrOp::Concat;
    CollOp coll_op = CollOp::First;
    CmpOp cmp_op = CmpOp::Eq;
    std::unique_ptr<QueryExpr> lhs; // source / left operand
    std::unique_ptr<QueryExpr> rhs; // argument / right operand
    int line = 0, column = 0;
};

struct TemplateNode {
    enum class Kind { Text, Interpolation, For, If, File };

    Kind kind = Kind::Text;
    std::string text;                // Text
    std::unique_ptr<QueryExpr> expr; // Interpolation value / If condition /
                                     // For source / File name
    std::unique_ptr<QueryExpr> append_expr;   // File
    std::unique_ptr<QueryExpr> encoding_expr; // File (accepted, unused)
    std::string var, var_class;      // For
    std::vector<TemplateNode> children;
    int line = 0, column = 0;
};

struct TemplateAst {
    std::string name;
    std::string param;
    std::string param_class;
    std::vector<TemplateNode> body;
};

TemplateAst parse_template(const std::string& text);

struct GeneratedFile {
    std::string name;
    std::string content;
};

struct GeneratedFileSet {
    std::vector<GeneratedFile> files; // generation order

    const GeneratedFile* find(const std::string& name) const;
};

// Rendered query values. Object collections are materialized here; the
// rendering path is not performance-sensitive.
struct QueryValue {
    enum class Kind { Str, Int, Real, Bool, Object, ObjectList, StrList };
    Kind kind = Kind::Str;
    std::string str;
    int64_t i = 0;
    double d = 0.0;
    bool b = false;
    const ModelObject* object = nullptr;
    std::vector<const ModelObject*> objects;
    bool singular = false;
    std::vector<std::string> strings;
};

struct Binding {
    std::string name;
    QueryValue value;
};

QueryValue eval_query(const QueryExpr& e, const std::vector<Binding>& env,
                      const InstanceModel& m);

// Binds the template parameter to the unique root object of its declared
// class and renders every file block. Deterministic; duplicate file names
// (without the append flag) are an error.
GeneratedFileSet render(const TemplateAst& t, const InstanceModel& m);

namespace builtin {

// ROS-node integration template: one <name>_node.py per SoftwareNode.
const std::string& ros_node_template();

// Wiring manifest consumed by the pub/sub harness: one JSON document
// describing every node's rate, subscriptions and publications.
const std::string& wiring_manifest_template();

} // namespace builtin

} // namespace evchain::m2t
