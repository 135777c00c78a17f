#include "evchain/m2t.hpp"

#include "evchain/text.hpp"

#include <algorithm>
#include <cctype>

namespace evchain::m2t {

namespace {

// ---------------------------------------------------------------------------
// Shared cursor: literal scanning plus token reading inside tags.

struct Cursor {
    const std::string& src;
    size_t pos = 0;
    int line = 1, column = 1;

    explicit Cursor(const std::string& s) : src(s) {}

    bool eof() const { return pos >= src.size(); }
    char peek(size_t ahead = 0) const {
        return pos + ahead < src.size() ? src[pos + ahead] : '\0';
    }
    char get() {
        char c = src[pos++];
        if (c == '\n') { ++line; column = 1; } else { ++column; }
        return c;
    }
    void skip(size_t n) {
        for (size_t i = 0; i < n && !eof(); ++i)
            get();
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw Error(ErrorKind::Parse, "template syntax error: " + message, line, column);
    }
};

bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// ---------------------------------------------------------------------------
// Query expression parser (used inside tags)

struct QTok {
    enum class Kind {
        End, Ident, Number, String, True, False,
        Dot, Arrow, LParen, RParen, Comma, Pipe, Colon,
        Eq, Ne, Lt, Le, Gt, Ge,
        RBracket,      // ]
        SlashRBracket, // /]
    };
    Kind kind = Kind::End;
    std::string text;
    double number = 0.0;
    bool is_int = false;
    int line = 1, column = 1;
};

class QueryLexer {
public:
    explicit QueryLexer(Cursor& cur) : cur_(cur) { advance(); }

    const QTok& current() const { return tok_; }
    QTok take() {
        QTok t = tok_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw Error(ErrorKind::Parse, "template expression error: " + message,
                    tok_.line, tok_.column);
    }

private:
    void advance() {
        while (!cur_.eof() && (cur_.peek() == ' ' || cur_.peek() == '\t' ||
                               cur_.peek() == '\n' || cur_.peek() == '\r'))
            cur_.get();
        tok_ = QTok{};
        tok_.line = cur_.line;
        tok_.column = cur_.column;
        if (cur_.eof()) return;

        char c = cur_.peek();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string word;
            while (!cur_.eof() && ident_char(cur_.peek()))
                word.push_back(cur_.get());
            if (word == "true") tok_.kind = QTok::Kind::True;
            else if (word == "false") tok_.kind = QTok::Kind::False;
            else tok_.kind = QTok::Kind::Ident;
            tok_.text = std::move(word);
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::string num;
            bool is_int = true;
            while (!cur_.eof() && std::isdigit(static_cast<unsigned char>(cur_.peek())))
                num.push_back(cur_.get());
            if (cur_.peek() == '.' && std::isdigit(static_cast<unsigned char>(cur_.peek(1)))) {
                is_int = false;
                num.push_back(cur_.get());
                while (!cur_.eof() && std::isdigit(static_cast<unsigned char>(cur_.peek())))
                    num.push_back(cur_.get());
            }
            tok_.kind = QTok::Kind::Number;
            tok_.number = std::strtod(num.c_str(), nullptr);
            tok_.is_int = is_int;
            return;
        }
        if (c == '\'') {
            cur_.get();
            std::string s;
            while (!cur_.eof() && cur_.peek() != '\'')
                s.push_back(cur_.get());
            if (cur_.eof())
                cur_.fail("unterminated string literal");
            cur_.get();
            tok_.kind = QTok::Kind::String;
            tok_.text = std::move(s);
            return;
        }
        cur_.get();
        switch (c) {
        case '.': tok_.kind = QTok::Kind::Dot; return;
        case '(': tok_.kind = QTok::Kind::LParen; return;
        case ')': tok_.kind = QTok::Kind::RParen; return;
        case ',': tok_.kind = QTok::Kind::Comma; return;
        case '|': tok_.kind = QTok::Kind::Pipe; return;
        case ':': tok_.kind = QTok::Kind::Colon; return;
        case ']': tok_.kind = QTok::Kind::RBracket; return;
        case '=': tok_.kind = QTok::Kind::Eq; return;
        case '/':
            if (cur_.peek() == ']') {
                cur_.get();
                tok_.kind = QTok::Kind::SlashRBracket;
                return;
            }
            break;
        case '-':
            if (cur_.peek() == '>') {
                cur_.get();
                tok_.kind = QTok::Kind::Arrow;
                return;
            }
            break;
        case '<':
            if (cur_.peek() == '>') { cur_.get(); tok_.kind = QTok::Kind::Ne; return; }
            if (cur_.peek() == '=') { cur_.get(); tok_.kind = QTok::Kind::Le; return; }
            tok_.kind = QTok::Kind::Lt;
            return;
        case '>':
            if (cur_.peek() == '=') { cur_.get(); tok_.kind = QTok::Kind::Ge; return; }
            tok_.kind = QTok::Kind::Gt;
            return;
        }
        cur_.fail(std::string("unexpected character '") + c + "' in expression");
    }

    Cursor& cur_;
    QTok tok_;
};

class QueryParser {
public:
    explicit QueryParser(QueryLexer& lex) : lex_(lex) {}

    std::unique_ptr<QueryExpr> parse_expression() {
        auto lhs = parse_postfix();
        QueryExpr::CmpOp op;
        switch (lex_.current().kind) {
        case QTok::Kind::Eq: op = QueryExpr::CmpOp::Eq; break;
        case QTok::Kind::Ne: op = QueryExpr::CmpOp::Ne; break;
        case QTok::Kind::Lt: op = QueryExpr::CmpOp::Lt; break;
        case QTok::Kind::Le: op = QueryExpr::CmpOp::Le; break;
        case QTok::Kind::Gt: op = QueryExpr::CmpOp::Gt; break;
        case QTok::Kind::Ge: op = QueryExpr::CmpOp::Ge; break;
        default: return lhs;
        }
        QTok t = lex_.take();
        auto node = make(QueryExpr::Kind::Compare, t);
        node->cmp_op = op;
        node->lhs = std::move(lhs);
        node->rhs = parse_postfix();
        return node;
    }

private:
    std::unique_ptr<QueryExpr> parse_postfix() {
        auto node = parse_primary();
        while (true) {
            if (lex_.current().kind == QTok::Kind::Dot) {
                QTok t = lex_.take();
                if (lex_.current().kind != QTok::Kind::Ident)
                    lex_.fail("expected a feature or operation name after '.'");
                std::string name = lex_.take().text;
                if (lex_.current().kind == QTok::Kind::LParen) {
                    lex_.take();
                    auto call = make(QueryExpr::Kind::StringOp, t);
                    call->lhs = std::move(node);
                    if (name == "concat") {
                        call->str_op = QueryExpr::StrOp::Concat;
                        call->rhs = parse_expression();
                    } else if (name == "toLowerCase") {
                        call->str_op = QueryExpr::StrOp::ToLowerCase;
                    } else if (name == "tokenize") {
                        call->str_op = QueryExpr::StrOp::Tokenize;
                        call->rhs = parse_expression();
                    } else {
                        lex_.fail("unknown string operation '" + name + "'");
                    }
                    expect(QTok::Kind::RParen, "')'");
                    node = std::move(call);
                } else {
                    auto nav = make(QueryExpr::Kind::Navigate, t);
                    nav->name = std::move(name);
                    nav->lhs = std::move(node);
                    node = std::move(nav);
                }
            } else if (lex_.current().kind == QTok::Kind::Arrow) {
                QTok t = lex_.take();
                if (lex_.current().kind != QTok::Kind::Ident)
                    lex_.fail("expected a collection operation after '->'");
                std::string name = lex_.take().text;
                auto call = make(QueryExpr::Kind::CollectionOp, t);
                call->lhs = std::move(node);
                expect(QTok::Kind::LParen, "'('");
                if (name == "first") call->coll_op = QueryExpr::CollOp::First;
                else if (name == "last") call->coll_op = QueryExpr::CollOp::Last;
                else if (name == "size") call->coll_op = QueryExpr::CollOp::Size;
                else if (name == "indexOf") {
                    call->coll_op = QueryExpr::CollOp::IndexOf;
                    call->rhs = parse_expression();
                } else if (name == "union") {
                    call->coll_op = QueryExpr::CollOp::Union;
                    call->rhs = parse_expression();
                } else {
                    lex_.fail("unknown collection operation '" + name + "'");
                }
                expect(QTok::Kind::RParen, "')'");
                node = std::move(call);
            } else {
                return node;
            }
        }
    }

    std::unique_ptr<QueryExpr> parse_primary() {
        const QTok& t = lex_.current();
        switch (t.kind) {
        case QTok::Kind::Ident: {
            QTok tok = lex_.take();
            auto node = make(QueryExpr::Kind::VarRef, tok);
            node->name = tok.text;
            return node;
        }
        case QTok::Kind::Number: {
            QTok tok = lex_.take();
            auto node = make(QueryExpr::Kind::Literal, tok);
            if (tok.is_int)
                node->literal = static_cast<int64_t>(tok.number);
            else
                node->literal = tok.number;
            return node;
        }
        case QTok::Kind::String: {
            QTok tok = lex_.take();
            auto node = make(QueryExpr::Kind::Literal, tok);
            node->literal = tok.text;
            return node;
        }
        case QTok::Kind::True:
        case QTok::Kind::False: {
            QTok tok = lex_.take();
            auto node = make(QueryExpr::Kind::Literal, tok);
            node->literal = tok.kind == QTok::Kind::True;
            return node;
        }
        case QTok::Kind::LParen: {
            lex_.take();
            auto node = parse_expression();
            expect(QTok::Kind::RParen, "')'");
            return node;
        }
        default:
            lex_.fail("expected an expression");
        }
    }

    std::unique_ptr<QueryExpr> make(QueryExpr::Kind kind, const QTok& t) {
        auto node = std::make_unique<QueryExpr>();
        node->kind = kind;
        node->line = t.line;
        node->column = t.column;
        return node;
    }

    void expect(QTok::Kind kind, const char* what) {
        if (lex_.current().kind != kind)
            lex_.fail(std::string("expected ") + what);
        lex_.take();
    }

    QueryLexer& lex_;
};

// ---------------------------------------------------------------------------
// Template parser

class TemplateParser {
public:
    explicit TemplateParser(const std::string& src) : cur_(src) {}

    TemplateAst parse() {
        TemplateAst ast;
        skip_blank_and_comments();
        if (!tag_starts_here("template"))
            cur_.fail("expected [template ...] header");
        parse_template_header(ast);
        parse_nodes(ast.body, "template");
        skip_blank_and_comments();
        if (!cur_.eof())
            cur_.fail("content after [/template]");
        return ast;
    }

private:
    // True when the cursor sits on "[keyword" with an identifier boundary.
    bool tag_starts_here(const std::string& keyword) {
        if (cur_.peek() != '[')
            return false;
        size_t p = cur_.pos + 1;
        if (cur_.src.compare(p, keyword.size(), keyword) != 0)
            return false;
        char after = p + keyword.size() < cur_.src.size() ? cur_.src[p + keyword.size()] : '\0';
        return !ident_char(after);
    }

    bool closer_starts_here(std::string* name = nullptr) {
        if (cur_.peek() != '[' || cur_.peek(1) != '/')
            return false;
        size_t p = cur_.pos + 2;
        std::string word;
        while (p < cur_.src.size() && ident_char(cur_.src[p]))
            word.push_back(cur_.src[p++]);
        if (p >= cur_.src.size() || cur_.src[p] != ']')
            return false;
        if (name)
            *name = word;
        return true;
    }

    bool block_tag_starts_here() {
        return closer_starts_here() || tag_starts_here("template") ||
               tag_starts_here("file") || tag_starts_here("for") ||
               tag_starts_here("if") || tag_starts_here("comment");
    }

    // A block tag alone on its line vanishes with the whole line.
    bool standalone_before() const {
        size_t p = cur_.pos;
        while (p > 0) {
            char c = cur_.src[p - 1];
            if (c == '\n')
                return true;
            if (c != ' ' && c != '\t')
                return false;
            --p;
        }
        return true; // beginning of input
    }

    bool standalone_after(size_t end_pos, size_t* resume) const {
        size_t p = end_pos;
        while (p < cur_.src.size() && (cur_.src[p] == ' ' || cur_.src[p] == '\t'))
            ++p;
        if (p >= cur_.src.size()) {
            *resume = p;
            return true;
        }
        if (cur_.src[p] == '\n') {
            *resume = p + 1;
            return true;
        }
        if (cur_.src[p] == '\r' && p + 1 < cur_.src.size() && cur_.src[p + 1] == '\n') {
            *resume = p + 2;
            return true;
        }
        return false;
    }

    void skip_blank_and_comments() {
        while (!cur_.eof()) {
            if (std::isspace(static_cast<unsigned char>(cur_.peek()))) {
                cur_.get();
            } else if (tag_starts_here("comment")) {
                skip_comment_tag();
            } else {
                return;
            }
        }
    }

    void skip_comment_tag() {
        // cursor on "[comment"; discard through the closing "/]".
        cur_.skip(std::string("[comment").size());
        while (!cur_.eof()) {
            if (cur_.peek() == '/' && cur_.peek(1) == ']') {
                cur_.skip(2);
                return;
            }
            cur_.get();
        }
        cur_.fail("unterminated [comment ... /]");
    }

    void parse_template_header(TemplateAst& ast) {
        cur_.skip(std::string("[template").size());
        QueryLexer lex(cur_);
        if (lex.current().kind != QTok::Kind::Ident || lex.current().text != "public")
            lex.fail("expected 'public'");
        lex.take();
        if (lex.current().kind != QTok::Kind::Ident)
            lex.fail("expected template name");
        ast.name = lex.take().text;
        expect(lex, QTok::Kind::LParen, "'('");
        if (lex.current().kind != QTok::Kind::Ident)
            lex.fail("expected parameter name");
        ast.param = lex.take().text;
        expect(lex, QTok::Kind::Colon, "':'");
        if (lex.current().kind != QTok::Kind::Ident)
            lex.fail("expected parameter class");
        ast.param_class = lex.take().text;
        expect(lex, QTok::Kind::RParen, "')'");
        if (lex.current().kind != QTok::Kind::RBracket)
            lex.fail("expected ']'");
        // Header is a block tag: swallow its line when standalone.
        size_t resume;
        if (standalone_after(cur_.pos, &resume))
            cur_.skip(resume - cur_.pos);
    }

    // Parses children until the closer of `terminator` is found.
    void parse_nodes(std::vector<TemplateNode>& out, const std::string& terminator) {
        std::string literal;
        int lit_line = cur_.line, lit_col = cur_.column;

        auto flush_literal = [&]() {
            if (!literal.empty()) {
                TemplateNode node;
                node.kind = TemplateNode::Kind::Text;
                node.text = std::move(literal);
                node.line = lit_line;
                node.column = lit_col;
                out.push_back(std::move(node));
                literal.clear();
            }
            lit_line = cur_.line;
            lit_col = cur_.column;
        };

        while (true) {
            if (cur_.eof())
                cur_.fail("missing [/" + terminator + "]");
            if (cur_.peek() != '[') {
                literal.push_back(cur_.get());
                continue;
            }

            bool block = block_tag_starts_here();
            bool standalone = block && standalone_before();
            if (standalone) {
                // Drop the indentation that belongs to this tag's line.
                while (!literal.empty() &&
                       (literal.back() == ' ' || literal.back() == '\t'))
                    literal.pop_back();
            }

            std::string closer;
            if (closer_starts_here(&closer)) {
                if (closer != terminator)
                    cur_.fail("unbalanced block: found [/" + closer + "] while inside [" +
                              terminator + "]");
                flush_literal();
                cur_.skip(closer.size() + 3); // "[/" name "]"
                if (standalone) {
                    size_t resume;
                    if (standalone_after(cur_.pos, &resume))
                        cur_.skip(resume - cur_.pos);
                }
                return;
            }

            if (tag_starts_here("comment")) {
                flush_literal();
                skip_comment_tag();
                finish_block_tag(standalone);
                continue;
            }
            if (tag_starts_here("for")) {
                flush_literal();
                TemplateNode node = parse_for();
                finish_block_tag(standalone);
                parse_nodes(node.children, "for");
                out.push_back(std::move(node));
                lit_line = cur_.line;
                lit_col = cur_.column;
                continue;
            }
            if (tag_starts_here("if")) {
                flush_literal();
                TemplateNode node = parse_if();
                finish_block_tag(standalone);
                parse_nodes(node.children, "if");
                out.push_back(std::move(node));
                lit_line = cur_.line;
                lit_col = cur_.column;
                continue;
            }
            if (tag_starts_here("file")) {
                flush_literal();
                TemplateNode node = parse_file();
                finish_block_tag(standalone);
                parse_nodes(node.children, "file");
                out.push_back(std::move(node));
                lit_line = cur_.line;
                lit_col = cur_.column;
                continue;
            }
            if (tag_starts_here("template"))
                cur_.fail("nested [template] blocks are not supported");

            // Anything else is an interpolation.
            flush_literal();
            TemplateNode node;
            node.kind = TemplateNode::Kind::Interpolation;
            node.line = cur_.line;
            node.column = cur_.column;
            cur_.get(); // '['
            QueryLexer lex(cur_);
            QueryParser qp(lex);
            node.expr = qp.parse_expression();
            if (lex.current().kind != QTok::Kind::SlashRBracket)
                lex.fail("expected '/]' to close interpolation");
            // The lexer has already consumed '/]'; nothing to skip.
            out.push_back(std::move(node));
            lit_line = cur_.line;
            lit_col = cur_.column;
        }
    }

    // After a standalone block tag, swallow trailing blanks and newline.
    void finish_block_tag(bool standalone) {
        if (!standalone)
            return;
        size_t resume;
        if (standalone_after(cur_.pos, &resume))
            cur_.skip(resume - cur_.pos);
    }

    TemplateNode parse_for() {
        TemplateNode node;
        node.kind = TemplateNode::Kind::For;
        node.line = cur_.line;
        node.column = cur_.column;
        cur_.skip(std::string("[for").size());
        QueryLexer lex(cur_);
        expect(lex, QTok::Kind::LParen, "'('");
        if (lex.current().kind != QTok::Kind::Ident)
            lex.fail("expected loop variable");
        node.var = lex.take().text;
        expect(lex, QTok::Kind::Colon, "':'");
        if (lex.current().kind != QTok::Kind::Ident)
            lex.fail("expected loop variable class");
        node.var_class = lex.take().text;
        expect(lex, QTok::Kind::Pipe, "'|'");
        QueryParser qp(lex);
        node.expr = qp.parse_expression();
        expect(lex, QTok::Kind::RParen, "')'");
        if (lex.current().kind != QTok::Kind::RBracket)
            lex.fail("expected ']'");
        return node;
    }

    TemplateNode parse_if() {
        TemplateNode node;
        node.kind = TemplateNode::Kind::If;
        node.line = cur_.line;
        node.column = cur_.column;
        cur_.skip(std::string("[if").size());
        QueryLexer lex(cur_);
        expect(lex, QTok::Kind::LParen, "'('");
        QueryParser qp(lex);
        node.expr = qp.parse_expression();
        expect(lex, QTok::Kind::RParen, "')'");
        if (lex.current().kind != QTok::Kind::RBracket)
            lex.fail("expected ']'");
        return node;
    }

    TemplateNode parse_file() {
        TemplateNode node;
        node.kind = TemplateNode::Kind::File;
        node.line = cur_.line;
        node.column = cur_.column;
        cur_.skip(std::string("[file").size());
        QueryLexer lex(cur_);
        expect(lex, QTok::Kind::LParen, "'('");
        QueryParser qp(lex);
        node.expr = qp.parse_expression();
        expect(lex, QTok::Kind::Comma, "','");
        node.append_expr = qp.parse_expression();
        expect(lex, QTok::Kind::Comma, "','");
        node.encoding_expr = qp.parse_expression();
        expect(lex, QTok::Kind::RParen, "')'");
        if (lex.current().kind != QTok::Kind::RBracket)
            lex.fail("expected ']'");
        return node;
    }

    void expect(QueryLexer& lex, QTok::Kind kind, const char* what) {
        if (lex.current().kind != kind)
            lex.fail(std::string("expected ") + what);
        lex.take();
    }

    Cursor cur_;
};

// ---------------------------------------------------------------------------
// Query evaluation

[[noreturn]] void eval_fail(const QueryExpr& e, const std::string& message) {
    throw Error(ErrorKind::Eval, message, e.line, e.column);
}

const char* kind_name(QueryValue::Kind k) {
    switch (k) {
    case QueryValue::Kind::Str: return "string";
    case QueryValue::Kind::Int: return "integer";
    case QueryValue::Kind::Real: return "real";
    case QueryValue::Kind::Bool: return "boolean";
    case QueryValue::Kind::Object: return "object";
    case QueryValue::Kind::ObjectList: return "object collection";
    case QueryValue::Kind::StrList: return "string collection";
    }
    return "?";
}

QueryValue from_value(const Value& v) {
    QueryValue q;
    if (const auto* s = std::get_if<std::string>(&v)) {
        q.kind = QueryValue::Kind::Str;
        q.str = *s;
    } else if (const auto* d = std::get_if<double>(&v)) {
        q.kind = QueryValue::Kind::Real;
        q.d = *d;
    } else if (const auto* i = std::get_if<int64_t>(&v)) {
        q.kind = QueryValue::Kind::Int;
        q.i = *i;
    } else {
        q.kind = QueryValue::Kind::Bool;
        q.b = std::get<bool>(v);
    }
    return q;
}

const ModelObject& as_single_object(const QueryExpr& e, const QueryValue& v) {
    if (v.kind == QueryValue::Kind::Object)
        return *v.object;
    if (v.kind == QueryValue::Kind::ObjectList && v.singular) {
        if (v.objects.empty())
            eval_fail(e, "navigation over an empty 0..1 reference");
        return *v.objects.front();
    }
    eval_fail(e, std::string("cannot navigate into a ") + kind_name(v.kind));
}

QueryValue navigate_object(const QueryExpr& e, const ModelObject& obj,
                           const InstanceModel& m) {
    const MetaClass& mc = m.class_of(obj);
    if (mc.find_attribute(e.name)) {
        auto it = obj.attributes.find(e.name);
        if (it == obj.attributes.end())
            eval_fail(e, "attribute '" + e.name + "' is not set on object '" + obj.id + "'");
        return from_value(it->second);
    }
    if (const ReferenceDef* rd = mc.find_reference(e.name)) {
        QueryValue out;
        out.kind = QueryValue::Kind::ObjectList;
        out.singular = rd->multiplicity == Multiplicity::ZeroOrOne ||
                       rd->multiplicity == Multiplicity::One;
        if (auto it = obj.references.find(e.name); it != obj.references.end())
            for (const auto& id : it->second)
                out.objects.push_back(&m.resolve(id));
        return out;
    }
    eval_fail(e, "class '" + mc.name + "' has no feature '" + e.name + "'");
}

} // namespace

QueryValue eval_query(const QueryExpr& e, const std::vector<Binding>& env,
                      const InstanceModel& m) {
    switch (e.kind) {
    case QueryExpr::Kind::VarRef: {
        for (auto it = env.rbegin(); it != env.rend(); ++it)
            if (it->name == e.name)
                return it->value;
        eval_fail(e, "unbound variable '" + e.name + "'");
    }
    case QueryExpr::Kind::Literal:
        return from_value(e.literal);
    case QueryExpr::Kind::Navigate: {
        QueryValue base = eval_query(*e.lhs, env, m);
        return navigate_object(e, as_single_object(*e.lhs, base), m);
    }
    case QueryExpr::Kind::StringOp: {
        QueryValue base = eval_query(*e.lhs, env, m);
        if (base.kind != QueryValue::Kind::Str)
            eval_fail(e, std::string("string operation on ") + kind_name(base.kind));
        switch (e.str_op) {
        case QueryExpr::StrOp::ToLowerCase: {
            base.str = to_lower(base.str);
            return base;
        }
        case QueryExpr::StrOp::Concat: {
            QueryValue arg = eval_query(*e.rhs, env, m);
            if (arg.kind != QueryValue::Kind::Str)
                eval_fail(e, "concat expects a string argument");
            base.str += arg.str;
            return base;
        }
        case QueryExpr::StrOp::Tokenize: {
            QueryValue sep = eval_query(*e.rhs, env, m);
            if (sep.kind != QueryValue::Kind::Str || sep.str.empty())
                eval_fail(e, "tokenize expects a non-empty string separator");
            QueryValue out;
            out.kind = QueryValue::Kind::StrList;
            size_t pos = 0;
            while (pos <= base.str.size()) {
                size_t hit = base.str.find(sep.str, pos);
                std::string piece = base.str.substr(
                    pos, hit == std::string::npos ? std::string::npos : hit - pos);
                if (!piece.empty()) // empty segments are dropped
                    out.strings.push_back(std::move(piece));
                if (hit == std::string::npos)
                    break;
                pos = hit + sep.str.size();
            }
            return out;
        }
        }
        eval_fail(e, "unhandled string operation");
    }
    case QueryExpr::Kind::CollectionOp: {
        QueryValue base = eval_query(*e.lhs, env, m);
        bool obj_list = base.kind == QueryValue::Kind::ObjectList;
        bool str_list = base.kind == QueryValue::Kind::StrList;
        if (!obj_list && !str_list)
            eval_fail(e, std::string("collection operation on ") + kind_name(base.kind));
        size_t size = obj_list ? base.objects.size() : base.strings.size();
        switch (e.coll_op) {
        case QueryExpr::CollOp::Size: {
            QueryValue out;
            out.kind = QueryValue::Kind::Int;
            out.i = static_cast<int64_t>(size);
            return out;
        }
        case QueryExpr::CollOp::First:
        case QueryExpr::CollOp::Last: {
            if (size == 0)
                eval_fail(e, "first()/last() on an empty collection");
            bool first = e.coll_op == QueryExpr::CollOp::First;
            if (obj_list) {
                QueryValue out;
                out.kind = QueryValue::Kind::Object;
                out.object = first ? base.objects.front() : base.objects.back();
                return out;
            }
            QueryValue out;
            out.kind = QueryValue::Kind::Str;
            out.str = first ? base.strings.front() : base.strings.back();
            return out;
        }
        case QueryExpr::CollOp::IndexOf: {
            QueryValue arg = eval_query(*e.rhs, env, m);
            // 1-based, matching the separator idiom indexOf(x) <> size().
            if (obj_list) {
                const ModelObject* target =
                    arg.kind == QueryValue::Kind::Object ? arg.object : nullptr;
                if (!target)
                    eval_fail(e, "indexOf on an object collection expects an object");
                for (size_t i = 0; i < base.objects.size(); ++i)
                    if (base.objects[i] == target) {
                        QueryValue out;
                        out.kind = QueryValue::Kind::Int;
                        out.i = static_cast<int64_t>(i + 1);
                        return out;
                    }
            } else {
                if (arg.kind != QueryValue::Kind::Str)
                    eval_fail(e, "indexOf on a string collection expects a string");
                for (size_t i = 0; i < base.strings.size(); ++i)
                    if (base.strings[i] == arg.str) {
                        QueryValue out;
                        out.kind = QueryValue::Kind::Int;
                        out.i = static_cast<int64_t>(i + 1);
                        return out;
                    }
            }
            eval_fail(e, "indexOf: element not found");
        }
        case QueryExpr::CollOp::Union: {
            QueryValue arg = eval_query(*e.rhs, env, m);
            if (obj_list && arg.kind == QueryValue::Kind::ObjectList) {
                QueryValue out = base;
                out.singular = false;
                out.objects.insert(out.objects.end(), arg.objects.begin(),
                                   arg.objects.end());
                return out;
            }
            if (str_list && arg.kind == QueryValue::Kind::StrList) {
                QueryValue out = base;
                out.strings.insert(out.strings.end(), arg.strings.begin(),
                                   arg.strings.end());
                return out;
            }
            eval_fail(e, "union expects two collections of the same kind");
        }
        }
        eval_fail(e, "unhandled collection operation");
    }
    case QueryExpr::Kind::Compare: {
        QueryValue l = eval_query(*e.lhs, env, m);
        QueryValue r = eval_query(*e.rhs, env, m);
        using K = QueryValue::Kind;
        auto numeric = [](const QueryValue& v) { return v.kind == K::Int || v.kind == K::Real; };
        auto as_real = [](const QueryValue& v) { return v.kind == K::Int ? double(v.i) : v.d; };
        bool result = false;
        if (numeric(l) && numeric(r)) {
            double a = as_real(l), b = as_real(r);
            switch (e.cmp_op) {
            case QueryExpr::CmpOp::Eq: result = a == b; break;
            case QueryExpr::CmpOp::Ne: result = a != b; break;
            case QueryExpr::CmpOp::Lt: result = a < b; break;
            case QueryExpr::CmpOp::Le: result = a <= b; break;
            case QueryExpr::CmpOp::Gt: result = a > b; break;
            case QueryExpr::CmpOp::Ge: result = a >= b; break;
            }
        } else if (l.kind == K::Str && r.kind == K::Str &&
                   (e.cmp_op == QueryExpr::CmpOp::Eq || e.cmp_op == QueryExpr::CmpOp::Ne)) {
            result = (l.str == r.str) == (e.cmp_op == QueryExpr::CmpOp::Eq);
        } else if (l.kind == K::Bool && r.kind == K::Bool &&
                   (e.cmp_op == QueryExpr::CmpOp::Eq || e.cmp_op == QueryExpr::CmpOp::Ne)) {
            result = (l.b == r.b) == (e.cmp_op == QueryExpr::CmpOp::Eq);
        } else if (l.kind == K::Object && r.kind == K::Object &&
                   (e.cmp_op == QueryExpr::CmpOp::Eq || e.cmp_op == QueryExpr::CmpOp::Ne)) {
            result = (l.object == r.object) == (e.cmp_op == QueryExpr::CmpOp::Eq);
        } else {
            eval_fail(e, std::string("cannot compare ") + kind_name(l.kind) + " with " +
                             kind_name(r.kind));
        }
        QueryValue out;
        out.kind = K::Bool;
        out.b = result;
        return out;
    }
    }
    eval_fail(e, "unhandled expression kind");
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

std::string stringify(const QueryExpr& e, const QueryValue& v) {
    switch (v.kind) {
    case QueryValue::Kind::Str: return v.str;
    case QueryValue::Kind::Int: return std::to_string(v.i);
    case QueryValue::Kind::Real: return format_double(v.d);
    case QueryValue::Kind::Bool: return v.b ? "true" : "false";
    default:
        eval_fail(e, std::string("cannot interpolate a ") + kind_name(v.kind));
    }
}

class Renderer {
public:
    Renderer(const TemplateAst& t, const InstanceModel& m) : tpl_(t), model_(m) {}

    GeneratedFileSet run() {
        if (!model_.metamodel().find_class(tpl_.param_class))
            throw Error(ErrorKind::Eval, "template entry class '" + tpl_.param_class +
                                             "' does not exist in the metamodel");
        auto roots = model_.objects_of_class(tpl_.param_class);
        if (roots.size() != 1)
            throw Error(ErrorKind::Eval,
                        "template entry class '" + tpl_.param_class + "' must have exactly "
                        "one root object, found " + std::to_string(roots.size()));
        QueryValue root;
        root.kind = QueryValue::Kind::Object;
        root.object = roots.front();
        env_.push_back({tpl_.param, std::move(root)});
        render_nodes(tpl_.body);
        return std::move(files_);
    }

private:
    void render_nodes(const std::vector<TemplateNode>& nodes) {
        for (const auto& node : nodes)
            render_node(node);
    }

    void render_node(const TemplateNode& node) {
        switch (node.kind) {
        case TemplateNode::Kind::Text:
            emit(node.text);
            return;
        case TemplateNode::Kind::Interpolation: {
            QueryValue v = eval_query(*node.expr, env_, model_);
            emit(stringify(*node.expr, v));
            return;
        }
        case TemplateNode::Kind::If: {
            QueryValue cond = eval_query(*node.expr, env_, model_);
            if (cond.kind != QueryValue::Kind::Bool)
                throw Error(ErrorKind::Eval, "[if] condition must be boolean",
                            node.line, node.column);
            if (cond.b)
                render_nodes(node.children);
            return;
        }
        case TemplateNode::Kind::For: {
            QueryValue source = eval_query(*node.expr, env_, model_);
            if (source.kind != QueryValue::Kind::ObjectList)
                throw Error(ErrorKind::Eval, "[for] source must be an object collection",
                            node.line, node.column);
            for (const ModelObject* obj : source.objects) {
                QueryValue v;
                v.kind = QueryValue::Kind::Object;
                v.object = obj;
                env_.push_back({node.var, std::move(v)});
                render_nodes(node.children);
                env_.pop_back();
            }
            return;
        }
        case TemplateNode::Kind::File: {
            if (current_)
                throw Error(ErrorKind::Eval, "nested [file] blocks are not supported",
                            node.line, node.column);
            QueryValue name = eval_query(*node.expr, env_, model_);
            if (name.kind != QueryValue::Kind::Str)
                throw Error(ErrorKind::Eval, "[file] name must be a string",
                            node.line, node.column);
            QueryValue append = eval_query(*node.append_expr, env_, model_);
            if (append.kind != QueryValue::Kind::Bool)
                throw Error(ErrorKind::Eval, "[file] append flag must be boolean",
                            node.line, node.column);

            std::string buffer;
            current_ = &buffer;
            render_nodes(node.children);
            current_ = nullptr;

            for (auto& f : files_.files) {
                if (f.name != name.str)
                    continue;
                if (!append.b)
                    throw Error(ErrorKind::Eval,
                                "duplicate generated file name '" + name.str + "'",
                                node.line, node.column);
                f.content += buffer;
                return;
            }
            files_.files.push_back({name.str, std::move(buffer)});
            return;
        }
        }
    }

    void emit(const std::string& text) {
        // Output outside a [file] block has no destination and is dropped.
        if (current_)
            *current_ += text;
    }

    const TemplateAst& tpl_;
    const InstanceModel& model_;
    std::vector<Binding> env_;
    GeneratedFileSet files_;
    std::string* current_ = nullptr;
};

} // namespace

TemplateAst parse_template(const std::string& text) {
    return TemplateParser(text).parse();
}

const GeneratedFile* GeneratedFileSet::find(const std::string& name) const {
    for (const auto& f : files)
        if (f.name == name)
            return &f;
    return nullptr;
}

GeneratedFileSet render(const TemplateAst& t, const InstanceModel& m) {
    return Renderer(t, m).run();
}

namespace builtin {

const std::string& ros_node_template() {
    static const std::string text = R"tmpl([template public main(eventchain : EventChain)]
[comment @main /]
[for (node : SoftwareNode | eventchain.software)]
[file (node.name.toLowerCase().concat('_node.py'), false, 'UTF-8')]
import rclpy
from rclpy.node import Node
[for (data : Data | node.input->union(node.output))]
from [data.messageType.tokenize('/')->first()/].msg import [data.messageType.tokenize('/')->last()/]
[/for]
from [node.name/].[node.name/] import [node.name/]


class [node.name.concat('_node')/](Node):

    def __init__(self):
        super().__init__('[node.name.concat('_node')/]')
        self.[node.name/] = [node.name/]()
[for (data : Data | node.input)]
        self.[data.name/] = None
[/for]
[for (data : Data | node.input)]
        self.[data.name/]_subscriber = self.create_subscription([data.messageType.tokenize('/')->last()/], "[data.topicName/]", self.[data.name/]_callback, qos_profile=10)
[/for]
[for (data : Data | node.output)]
        self.[data.name/]_publisher = self.create_publisher([data.messageType.tokenize('/')->last()/], "[data.topicName/]", qos_profile=10)
[/for]
        self.timer = self.create_timer(1.0/[node.frequency/], self.execute)

[for (data : Data | node.input)]
    def [data.name/]_callback(self, data):
        self.[data.name/] = data.[data.fieldName/]

[/for]
    def execute(self):
[for (data : Data | node.input)]
        if self.[data.name/] is None:
            self.get_logger().warn("msg not received")
            return
[/for]
        output = self.[node.name/].execute([for (data : Data | node.input)][data.name/]=self.[data.name/][if (node.input->indexOf(data) <> node.input->size())], [/if][/for])
[for (data : Data | node.output)]
        [data.name/]_msg = [data.messageType.tokenize('/')->last()/]()
        [data.name/]_msg.[data.fieldName/] = output['['/]'[data.name/]']
        self.[data.name/]_publisher.publish([data.name/]_msg)
[/for]


def main(args=None):
    rclpy.init(args=args)
    node = [node.name.concat('_node')/]()
    rclpy.spin(node)
    node.destroy_node()
    rclpy.shutdown()


if __name__ == '__main__':
    main()
[/file]
[/for]
[/template]
)tmpl";
    return text;
}

const std::string& wiring_manifest_template() {
    static const std::string text = R"tmpl([template public main(eventchain : EventChain)]
[comment executable integration descriptor for the pub/sub harness /]
[file ('wiring_manifest.json', false, 'UTF-8')]
{
  "nodes": ['['/]
[for (node : SoftwareNode | eventchain.software)]
    {
      "name": "[node.name/]",
      "frequency": [node.frequency/],
      "subscriptions": ['['/]
[for (data : Data | node.input)]
        {"topic": "[data.topicName/]", "message_type": "[data.messageType/]", "field": "[data.fieldName/]", "input": "[data.name/]", "qos_profile": "[data.qosProfile/]"}[if (node.input->indexOf(data) <> node.input->size())],[/if]
[/for]
      ],
      "publications": ['['/]
[for (data : Data | node.output)]
        {"topic": "[data.topicName/]", "message_type": "[data.messageType/]", "field": "[data.fieldName/]", "output": "[data.name/]", "qos_profile": "[data.qosProfile/]"}[if (node.output->indexOf(data) <> node.output->size())],[/if]
[/for]
      ]
    }[if (eventchain.software->indexOf(node) <> eventchain.software->size())],[/if]
[/for]
  ]
}
[/file]
[/template]
)tmpl";
    return text;
}

} // namespace builtin

} // namespace evchain::m2t
