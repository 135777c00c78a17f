#include "evchain/ocl.hpp"

#include <json.hpp>

#include <cctype>
#include <cstdlib>

namespace evchain::ocl {

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok {
    End, Ident, Number, String,
    KwContext, KwInv, KwSelf, KwAnd, KwOr, KwNot, KwImplies,
    Dot, Arrow, LParen, RParen, Colon, Pipe,
    Eq, Ne, Lt, Le, Gt, Ge,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    bool is_int = false;
    int line = 1, column = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& current() const { return cur_; }

    Token take() {
        Token t = cur_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw Error(ErrorKind::Parse, "constraint syntax error: " + message,
                    cur_.line, cur_.column);
    }

private:
    void advance() {
        skip_space();
        cur_ = Token{};
        cur_.line = line_;
        cur_.column = column_;
        if (pos_ >= src_.size()) {
            cur_.kind = Tok::End;
            return;
        }
        char c = src_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string word;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                word.push_back(get());
            cur_.text = word;
            if (word == "context") cur_.kind = Tok::KwContext;
            else if (word == "inv") cur_.kind = Tok::KwInv;
            else if (word == "self") cur_.kind = Tok::KwSelf;
            else if (word == "and") cur_.kind = Tok::KwAnd;
            else if (word == "or") cur_.kind = Tok::KwOr;
            else if (word == "not") cur_.kind = Tok::KwNot;
            else if (word == "implies") cur_.kind = Tok::KwImplies;
            else cur_.kind = Tok::Ident;
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num;
            bool is_int = true;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                num.push_back(get());
            if (pos_ + 1 < src_.size() && src_[pos_] == '.' &&
                std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
                is_int = false;
                num.push_back(get());
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_])))
                    num.push_back(get());
            }
            cur_.kind = Tok::Number;
            cur_.number = std::strtod(num.c_str(), nullptr);
            cur_.is_int = is_int;
            cur_.text = num;
            return;
        }
        if (c == '\'') {
            get();
            std::string s;
            while (pos_ < src_.size() && src_[pos_] != '\'')
                s.push_back(get());
            if (pos_ >= src_.size())
                throw Error(ErrorKind::Parse, "constraint syntax error: unterminated string",
                            cur_.line, cur_.column);
            get();
            cur_.kind = Tok::String;
            cur_.text = std::move(s);
            return;
        }
        get();
        switch (c) {
        case '.': cur_.kind = Tok::Dot; return;
        case '(': cur_.kind = Tok::LParen; return;
        case ')': cur_.kind = Tok::RParen; return;
        case ':': cur_.kind = Tok::Colon; return;
        case '|': cur_.kind = Tok::Pipe; return;
        case '=': cur_.kind = Tok::Eq; return;
        case '-':
            if (pos_ < src_.size() && src_[pos_] == '>') {
                get();
                cur_.kind = Tok::Arrow;
                return;
            }
            break;
        case '<':
            if (pos_ < src_.size() && src_[pos_] == '>') { get(); cur_.kind = Tok::Ne; return; }
            if (pos_ < src_.size() && src_[pos_] == '=') { get(); cur_.kind = Tok::Le; return; }
            cur_.kind = Tok::Lt;
            return;
        case '>':
            if (pos_ < src_.size() && src_[pos_] == '=') { get(); cur_.kind = Tok::Ge; return; }
            cur_.kind = Tok::Gt;
            return;
        }
        throw Error(ErrorKind::Parse,
                    std::string("constraint syntax error: unexpected character '") + c + "'",
                    cur_.line, cur_.column);
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '-') {
                while (pos_ < src_.size() && src_[pos_] != '\n')
                    get();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                get();
            } else {
                break;
            }
        }
    }

    char get() {
        char c = src_[pos_++];
        if (c == '\n') { ++line_; column_ = 1; } else { ++column_; }
        return c;
    }

    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1, column_ = 1;
    Token cur_;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(const std::string& text) : lex_(text) {}

    ConstraintSet parse() {
        ConstraintSet cs;
        while (lex_.current().kind != Tok::End) {
            if (lex_.current().kind != Tok::KwContext)
                lex_.fail("expected 'context'");
            lex_.take();
            ContextBlock block;
            block.context_class = expect_ident("context class name");
            while (lex_.current().kind == Tok::KwInv) {
                lex_.take();
                Invariant inv;
                inv.name = expect_ident("invariant name");
                expect(Tok::Colon, "':'");
                inv.expr = std::shared_ptr<const Expr>(parse_expression().release());
                for (const auto& other : block.invariants)
                    if (other.name == inv.name)
                        lex_.fail("duplicate invariant name '" + inv.name + "'");
                block.invariants.push_back(std::move(inv));
            }
            if (block.invariants.empty())
                lex_.fail("context block without invariants");
            cs.contexts.push_back(std::move(block));
        }
        return cs;
    }

private:
    std::unique_ptr<Expr> parse_expression() { return parse_implies(); }

    std::unique_ptr<Expr> parse_implies() {
        auto lhs = parse_or();
        while (lex_.current().kind == Tok::KwImplies) {
            Token t = lex_.take();
            lhs = make_binary(Expr::BinOp::Implies, std::move(lhs), parse_or(), t);
        }
        return lhs;
    }

    std::unique_ptr<Expr> parse_or() {
        auto lhs = parse_and();
        while (lex_.current().kind == Tok::KwOr) {
            Token t = lex_.take();
            lhs = make_binary(Expr::BinOp::Or, std::move(lhs), parse_and(), t);
        }
        return lhs;
    }

    std::unique_ptr<Expr> parse_and() {
        auto lhs = parse_unary();
        while (lex_.current().kind == Tok::KwAnd) {
            Token t = lex_.take();
            lhs = make_binary(Expr::BinOp::And, std::move(lhs), parse_unary(), t);
        }
        return lhs;
    }

    std::unique_ptr<Expr> parse_unary() {
        if (lex_.current().kind == Tok::KwNot) {
            Token t = lex_.take();
            auto node = make_node(Expr::Kind::Not, t);
            node->lhs = parse_unary();
            return node;
        }
        return parse_comparison();
    }

    std::unique_ptr<Expr> parse_comparison() {
        auto lhs = parse_postfix();
        Expr::BinOp op;
        switch (lex_.current().kind) {
        case Tok::Eq: op = Expr::BinOp::Eq; break;
        case Tok::Ne: op = Expr::BinOp::Ne; break;
        case Tok::Lt: op = Expr::BinOp::Lt; break;
        case Tok::Le: op = Expr::BinOp::Le; break;
        case Tok::Gt: op = Expr::BinOp::Gt; break;
        case Tok::Ge: op = Expr::BinOp::Ge; break;
        default: return lhs;
        }
        Token t = lex_.take();
        return make_binary(op, std::move(lhs), parse_postfix(), t);
    }

    std::unique_ptr<Expr> parse_postfix() {
        auto node = parse_primary();
        while (true) {
            if (lex_.current().kind == Tok::Dot) {
                Token t = lex_.take();
                auto nav = make_node(Expr::Kind::Navigate, t);
                nav->name = expect_ident("feature name");
                nav->lhs = std::move(node);
                node = std::move(nav);
            } else if (lex_.current().kind == Tok::Arrow) {
                Token t = lex_.take();
                std::string op = expect_ident("collection operation");
                auto coll = make_node(Expr::Kind::Collection, t);
                coll->lhs = std::move(node);
                expect(Tok::LParen, "'('");
                if (op == "notEmpty") coll->coll_op = Expr::CollOp::NotEmpty;
                else if (op == "isEmpty") coll->coll_op = Expr::CollOp::IsEmpty;
                else if (op == "size") coll->coll_op = Expr::CollOp::Size;
                else if (op == "forAll" || op == "exists") {
                    coll->coll_op = op == "forAll" ? Expr::CollOp::ForAll
                                                   : Expr::CollOp::Exists;
                    coll->iter_var = expect_ident("iterator variable");
                    expect(Tok::Pipe, "'|'");
                    coll->rhs = parse_expression();
                } else {
                    lex_.fail("unknown collection operation '" + op + "'");
                }
                expect(Tok::RParen, "')'");
                node = std::move(coll);
            } else {
                return node;
            }
        }
    }

    std::unique_ptr<Expr> parse_primary() {
        const Token& t = lex_.current();
        switch (t.kind) {
        case Tok::KwSelf: {
            Token tok = lex_.take();
            return make_node(Expr::Kind::SelfRef, tok);
        }
        case Tok::Ident: {
            Token tok = lex_.take();
            auto node = make_node(Expr::Kind::VarRef, tok);
            node->name = tok.text;
            return node;
        }
        case Tok::Number: {
            Token tok = lex_.take();
            auto node = make_node(Expr::Kind::Literal, tok);
            if (tok.is_int)
                node->literal = static_cast<int64_t>(tok.number);
            else
                node->literal = tok.number;
            return node;
        }
        case Tok::String: {
            Token tok = lex_.take();
            auto node = make_node(Expr::Kind::Literal, tok);
            node->literal = tok.text;
            return node;
        }
        case Tok::LParen: {
            lex_.take();
            auto node = parse_expression();
            expect(Tok::RParen, "')'");
            return node;
        }
        default:
            lex_.fail("expected an expression");
        }
    }

    std::unique_ptr<Expr> make_node(Expr::Kind kind, const Token& t) {
        auto node = std::make_unique<Expr>();
        node->kind = kind;
        node->line = t.line;
        node->column = t.column;
        return node;
    }

    std::unique_ptr<Expr> make_binary(Expr::BinOp op, std::unique_ptr<Expr> lhs,
                                      std::unique_ptr<Expr> rhs, const Token& t) {
        auto node = make_node(Expr::Kind::Binary, t);
        node->bin_op = op;
        node->lhs = std::move(lhs);
        node->rhs = std::move(rhs);
        return node;
    }

    std::string expect_ident(const char* what) {
        if (lex_.current().kind != Tok::Ident)
            lex_.fail(std::string("expected ") + what);
        return lex_.take().text;
    }

    void expect(Tok kind, const char* what) {
        if (lex_.current().kind != kind)
            lex_.fail(std::string("expected ") + what);
        lex_.take();
    }

    Lexer lex_;
};

// ---------------------------------------------------------------------------
// Evaluator
//
// Values are passed as a small tagged struct. Object collections are views
// over the id lists stored in the model, so the hot path (conformant models,
// guarded navigation) allocates nothing.

const std::vector<std::string> kNoIds;

struct EvalValue {
    enum class Kind { Bool, Int, Real, Str, Objects } kind;
    bool b = false;
    int64_t i = 0;
    double d = 0.0;
    const std::string* s = nullptr;
    const std::vector<std::string>* ids = &kNoIds;
    bool singular = false;

    static EvalValue boolean(bool v) { EvalValue e{Kind::Bool}; e.b = v; return e; }
    static EvalValue integer(int64_t v) { EvalValue e{Kind::Int}; e.i = v; return e; }
    static EvalValue real(double v) { EvalValue e{Kind::Real}; e.d = v; return e; }
};

struct Scope {
    const std::string* name;
    const ModelObject* object;
};

struct EvalContext {
    const InstanceModel& model;
    const ModelObject* self;
    std::vector<Scope> vars;
};

[[noreturn]] void eval_fail(const Expr& e, const std::string& message) {
    throw Error(ErrorKind::Eval, message, e.line, e.column);
}

const char* kind_name(EvalValue::Kind k) {
    switch (k) {
    case EvalValue::Kind::Bool: return "boolean";
    case EvalValue::Kind::Int: return "integer";
    case EvalValue::Kind::Real: return "real";
    case EvalValue::Kind::Str: return "string";
    case EvalValue::Kind::Objects: return "collection";
    }
    return "?";
}

EvalValue from_attribute(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) {
        EvalValue e{EvalValue::Kind::Str};
        e.s = s;
        return e;
    }
    if (const auto* d = std::get_if<double>(&v))
        return EvalValue::real(*d);
    if (const auto* i = std::get_if<int64_t>(&v))
        return EvalValue::integer(*i);
    return EvalValue::boolean(std::get<bool>(v));
}

EvalValue eval(const Expr& e, EvalContext& ctx);

// Resolves the object a navigation or iteration step starts from.
const ModelObject& single_object(const Expr& e, const EvalValue& v, EvalContext& ctx) {
    if (v.kind != EvalValue::Kind::Objects)
        eval_fail(e, std::string("cannot navigate into a ") + kind_name(v.kind));
    if (!v.singular)
        eval_fail(e, "cannot navigate an unbounded collection; use a collection operation");
    if (v.ids->empty())
        eval_fail(e, "navigation over an empty 0..1 reference");
    return ctx.model.resolve(v.ids->front());
}

EvalValue navigate_feature(const Expr& e, const ModelObject& obj, EvalContext& ctx) {
    const MetaClass& mc = ctx.model.class_of(obj);
    if (const AttributeDef* ad = mc.find_attribute(e.name)) {
        (void)ad;
        auto it = obj.attributes.find(e.name);
        if (it == obj.attributes.end())
            eval_fail(e, "attribute '" + e.name + "' is not set on object '" + obj.id + "'");
        return from_attribute(it->second);
    }
    if (const ReferenceDef* rd = mc.find_reference(e.name)) {
        EvalValue out{EvalValue::Kind::Objects};
        auto it = obj.references.find(e.name);
        out.ids = (it == obj.references.end()) ? &kNoIds : &it->second;
        out.singular = rd->multiplicity == Multiplicity::ZeroOrOne ||
                       rd->multiplicity == Multiplicity::One;
        return out;
    }
    eval_fail(e, "class '" + mc.name + "' has no feature '" + e.name + "'");
}

bool expect_bool(const Expr& e, const EvalValue& v, const char* where) {
    if (v.kind != EvalValue::Kind::Bool)
        eval_fail(e, std::string(where) + " requires a boolean, got " + kind_name(v.kind));
    return v.b;
}

EvalValue eval_comparison(const Expr& e, const EvalValue& l, const EvalValue& r) {
    using K = EvalValue::Kind;
    auto numeric = [](const EvalValue& v) { return v.kind == K::Int || v.kind == K::Real; };
    auto as_real = [](const EvalValue& v) { return v.kind == K::Int ? double(v.i) : v.d; };

    if (numeric(l) && numeric(r)) {
        double a = as_real(l), b = as_real(r);
        switch (e.bin_op) {
        case Expr::BinOp::Eq: return EvalValue::boolean(a == b);
        case Expr::BinOp::Ne: return EvalValue::boolean(a != b);
        case Expr::BinOp::Lt: return EvalValue::boolean(a < b);
        case Expr::BinOp::Le: return EvalValue::boolean(a <= b);
        case Expr::BinOp::Gt: return EvalValue::boolean(a > b);
        case Expr::BinOp::Ge: return EvalValue::boolean(a >= b);
        default: break;
        }
    }
    if (l.kind == K::Str && r.kind == K::Str) {
        if (e.bin_op == Expr::BinOp::Eq) return EvalValue::boolean(*l.s == *r.s);
        if (e.bin_op == Expr::BinOp::Ne) return EvalValue::boolean(*l.s != *r.s);
        eval_fail(e, "strings only support = and <>");
    }
    if (l.kind == K::Bool && r.kind == K::Bool) {
        if (e.bin_op == Expr::BinOp::Eq) return EvalValue::boolean(l.b == r.b);
        if (e.bin_op == Expr::BinOp::Ne) return EvalValue::boolean(l.b != r.b);
        eval_fail(e, "booleans only support = and <>");
    }
    eval_fail(e, std::string("cannot compare ") + kind_name(l.kind) + " with " +
                     kind_name(r.kind));
}

EvalValue eval(const Expr& e, EvalContext& ctx) {
    switch (e.kind) {
    case Expr::Kind::SelfRef:
        // Navigation reads self from the context directly; bare self has no
        // boolean meaning in this subset.
        eval_fail(e, "'self' cannot be used as a boolean expression");
    case Expr::Kind::VarRef:
        eval_fail(e, "variable '" + e.name + "' cannot be used as a boolean expression");
    case Expr::Kind::Literal:
        return from_attribute(e.literal);
    case Expr::Kind::Navigate: {
        const ModelObject* base = nullptr;
        if (e.lhs->kind == Expr::Kind::SelfRef) {
            base = ctx.self;
        } else if (e.lhs->kind == Expr::Kind::VarRef) {
            for (auto it = ctx.vars.rbegin(); it != ctx.vars.rend(); ++it)
                if (*it->name == e.lhs->name) { base = it->object; break; }
            if (!base)
                eval_fail(*e.lhs, "unknown variable '" + e.lhs->name + "'");
        } else {
            EvalValue src = eval(*e.lhs, ctx);
            base = &single_object(*e.lhs, src, ctx);
        }
        return navigate_feature(e, *base, ctx);
    }
    case Expr::Kind::Collection: {
        EvalValue src = eval(*e.lhs, ctx);
        if (src.kind != EvalValue::Kind::Objects)
            eval_fail(e, std::string("collection operation on ") + kind_name(src.kind));
        const auto& ids = *src.ids;
        switch (e.coll_op) {
        case Expr::CollOp::NotEmpty: return EvalValue::boolean(!ids.empty());
        case Expr::CollOp::IsEmpty: return EvalValue::boolean(ids.empty());
        case Expr::CollOp::Size: return EvalValue::integer(static_cast<int64_t>(ids.size()));
        case Expr::CollOp::ForAll:
        case Expr::CollOp::Exists: {
            bool for_all = e.coll_op == Expr::CollOp::ForAll;
            for (const auto& id : ids) {
                const ModelObject& obj = ctx.model.resolve(id);
                ctx.vars.push_back({&e.iter_var, &obj});
                bool hit = expect_bool(*e.rhs, eval(*e.rhs, ctx), "iteration body");
                ctx.vars.pop_back();
                if (for_all && !hit) return EvalValue::boolean(false);
                if (!for_all && hit) return EvalValue::boolean(true);
            }
            return EvalValue::boolean(for_all);
        }
        }
        eval_fail(e, "unhandled collection operation");
    }
    case Expr::Kind::Not:
        return EvalValue::boolean(!expect_bool(e, eval(*e.lhs, ctx), "'not'"));
    case Expr::Kind::Binary:
        switch (e.bin_op) {
        case Expr::BinOp::And: {
            if (!expect_bool(e, eval(*e.lhs, ctx), "'and'"))
                return EvalValue::boolean(false);
            return EvalValue::boolean(expect_bool(e, eval(*e.rhs, ctx), "'and'"));
        }
        case Expr::BinOp::Or: {
            if (expect_bool(e, eval(*e.lhs, ctx), "'or'"))
                return EvalValue::boolean(true);
            return EvalValue::boolean(expect_bool(e, eval(*e.rhs, ctx), "'or'"));
        }
        case Expr::BinOp::Implies: {
            // Short-circuit: a false antecedent passes without touching the
            // consequent, so its navigation errors are suppressed.
            if (!expect_bool(e, eval(*e.lhs, ctx), "'implies'"))
                return EvalValue::boolean(true);
            return EvalValue::boolean(expect_bool(e, eval(*e.rhs, ctx), "'implies'"));
        }
        default:
            return eval_comparison(e, eval(*e.lhs, ctx), eval(*e.rhs, ctx));
        }
    }
    eval_fail(e, "unhandled expression kind");
}

} // namespace

ConstraintSet parse_constraints(const std::string& text) {
    return Parser(text).parse();
}

const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Error: return "error";
    }
    return "?";
}

bool ValidationReport::all_passed() const {
    for (const auto& e : entries)
        if (e.verdict != Verdict::Pass)
            return false;
    return true;
}

size_t ValidationReport::count(Verdict v) const {
    size_t n = 0;
    for (const auto& e : entries)
        if (e.verdict == v)
            ++n;
    return n;
}

Verdict evaluate_one(const Expr& expr, const ModelObject& self,
                     const InstanceModel& m, std::string* message) {
    EvalContext ctx{m, &self, {}};
    try {
        EvalValue v = eval(expr, ctx);
        if (v.kind != EvalValue::Kind::Bool) {
            if (message)
                *message = std::string("invariant evaluated to ") + kind_name(v.kind) +
                           ", expected boolean";
            return Verdict::Error;
        }
        return v.b ? Verdict::Pass : Verdict::Fail;
    } catch (const Error& err) {
        if (message)
            *message = err.what();
        return Verdict::Error;
    }
}

ValidationReport evaluate(const ConstraintSet& cs, const InstanceModel& m) {
    const Metamodel& mm = m.metamodel();
    for (const auto& block : cs.contexts)
        if (!mm.find_class(block.context_class))
            throw Error(ErrorKind::Config, "constraint context class '" +
                                               block.context_class +
                                               "' does not exist in metamodel '" +
                                               mm.name + "'");

    ValidationReport report;
    for (const auto& block : cs.contexts) {
        for (const auto& obj : m.objects()) {
            if (obj.class_name != block.context_class)
                continue;
            for (const auto& inv : block.invariants) {
                ValidationEntry entry;
                entry.context_class = block.context_class;
                entry.invariant = inv.name;
                entry.object_id = obj.id;
                std::string message;
                entry.verdict = evaluate_one(*inv.expr, obj, m, &message);
                if (entry.verdict == Verdict::Fail)
                    message = "invariant violated";
                entry.message = std::move(message);
                report.entries.push_back(std::move(entry));
            }
        }
    }
    return report;
}

std::string report_to_json(const ValidationReport& report) {
    nlohmann::ordered_json doc;
    doc["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : report.entries) {
        nlohmann::ordered_json je;
        je["context"] = e.context_class;
        je["invariant"] = e.invariant;
        je["object"] = e.object_id;
        je["verdict"] = to_string(e.verdict);
        je["message"] = e.message;
        doc["entries"].push_back(std::move(je));
    }
    doc["all_passed"] = report.all_passed();
    return doc.dump(2) + "\n";
}

} // namespace evchain::ocl
