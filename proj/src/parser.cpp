#include "purevm/parser.hpp"

#include "purevm/lexer.hpp"

namespace purevm {

namespace {

class Parser {
  public:
    explicit Parser(const std::string& src) : toks_(lex(src)) {}

    SourceProgram run() {
        SourceProgram p;
        skip_newlines();
        while (peek().kind != Tok::End) {
            p.decls.push_back(parse_decl());
            skip_newlines();
        }
        return p;
    }

  private:
    std::vector<Token> toks_;
    size_t i_ = 0;

    const Token& peek(int ahead = 0) const {
        size_t j = i_ + static_cast<size_t>(ahead);
        return j < toks_.size() ? toks_[j] : toks_.back();
    }
    Token next() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
    bool at(Tok k) const { return peek().kind == k; }

    Token expect(Tok k, const char* what) {
        if (!at(k))
            throw SyntaxError(peek().span.begin,
                              std::string("expected ") + what + ", found " + token_name(peek().kind));
        return next();
    }

    void skip_newlines() {
        while (at(Tok::Newline)) next();
    }

    // Newlines are insignificant inside bracketed contexts.
    Token expect_nl(Tok k, const char* what) {
        skip_newlines();
        return expect(k, what);
    }

    Decl parse_decl() {
        switch (peek().kind) {
            case Tok::KwPrimitive: return parse_callable(DeclKind::Primitive);
            case Tok::KwFunc: return parse_callable(DeclKind::Func);
            case Tok::KwEvent: return parse_callable(DeclKind::Event);
            case Tok::KwInterrupt: return parse_callable(DeclKind::Interrupt);
            case Tok::KwGlobal: return parse_global();
            default:
                throw SyntaxError(peek().span.begin,
                                  std::string("expected declaration, found ") + token_name(peek().kind));
        }
    }

    Decl parse_global() {
        Decl d;
        d.kind = DeclKind::Global;
        d.span.begin = peek().span.begin;
        next();
        d.name = expect(Tok::Ident, "global name").text;
        expect(Tok::Colon, "':'");
        d.global_type = parse_type();
        if (at(Tok::Assign)) {
            next();
            skip_newlines();
            d.global_init = parse_primary();
        }
        d.span.end = peek().span.begin;
        end_of_line();
        return d;
    }

    Decl parse_callable(DeclKind kind) {
        Decl d;
        d.kind = kind;
        d.span.begin = peek().span.begin;
        next();
        d.name = expect(Tok::Ident, "declaration name").text;

        auto flow = parse_param_list();
        if (flow.size() != 1)
            throw SyntaxError(flow_pos_, "flow-in list must contain exactly one parameter");
        d.flow_in = flow[0];

        if (at(Tok::LParen)) {
            if (kind == DeclKind::Event || kind == DeclKind::Interrupt)
                throw SyntaxError(peek().span.begin, "handlers take only a flow-in parameter list");
            d.has_param_list = true;
            d.params = parse_param_list();
        }
        if (at(Tok::Arrow)) {
            next();
            d.flow_out = parse_type();
        }
        while (at(Tok::LBracket)) parse_metadata(d.meta);

        size_t save = i_;
        skip_newlines();
        if (at(Tok::LBrace)) {
            d.body = parse_block();
        } else if (kind != DeclKind::Primitive) {
            throw SyntaxError(peek().span.begin, "expected '{' to open body");
        } else {
            i_ = save;
            end_of_line();
        }
        d.span.end = peek().span.begin;
        return d;
    }

    Pos flow_pos_;

    std::vector<Param> parse_param_list() {
        std::vector<Param> out;
        flow_pos_ = peek().span.begin;
        expect(Tok::LParen, "'('");
        skip_newlines();
        if (!at(Tok::RParen)) {
            for (;;) {
                Param p;
                p.span.begin = peek().span.begin;
                p.name = expect(Tok::Ident, "parameter name").text;
                if (at(Tok::Colon)) {
                    next();
                    p.type = parse_type();
                }
                p.span.end = peek().span.begin;
                out.push_back(std::move(p));
                skip_newlines();
                if (at(Tok::Comma)) {
                    next();
                    skip_newlines();
                    continue;
                }
                break;
            }
        }
        expect_nl(Tok::RParen, "')'");
        return out;
    }

    void parse_metadata(Metadata& meta) {
        expect(Tok::LBracket, "'['");
        Token t = expect(Tok::Ident, "metadata tag");
        if (t.text == "builtin") {
            meta.builtin = true;
        } else if (t.text == "IO") {
            meta.io = true;
        } else if (t.text == "write") {
            meta.writes.push_back(expect(Tok::Ident, "object name after 'write'").text);
        } else {
            throw SyntaxError(t.span.begin, "unknown metadata tag '" + t.text + "'");
        }
        expect(Tok::RBracket, "']'");
    }

    std::vector<Stmt> parse_block() {
        expect(Tok::LBrace, "'{'");
        std::vector<Stmt> body;
        skip_separators();
        while (!at(Tok::RBrace)) {
            body.push_back(parse_stmt());
            if (!at(Tok::RBrace)) {
                if (!at(Tok::Newline) && !at(Tok::Semi))
                    throw SyntaxError(peek().span.begin,
                                      std::string("expected end of statement, found ") +
                                          token_name(peek().kind));
                skip_separators();
            }
        }
        expect(Tok::RBrace, "'}'");
        return body;
    }

    void skip_separators() {
        while (at(Tok::Newline) || at(Tok::Semi)) next();
    }

    // Declaration keywords double as plain names inside bodies ("func = ...").
    bool at_name() const { return at(Tok::Ident) || at(Tok::KwFunc); }

    Stmt parse_stmt() {
        Stmt s;
        s.span.begin = peek().span.begin;
        if (at_name() && peek(1).kind == Tok::Assign) {
            s.binding = next().text;
            next();
            skip_newlines();
        }
        s.value = parse_chain();
        s.span.end = peek().span.begin;
        return s;
    }

    ExprPtr parse_chain() {
        auto head = parse_primary();
        auto chain = std::make_shared<Expr>();
        chain->kind = ExprKind::Chain;
        chain->span.begin = head->span.begin;
        chain->head = head;
        for (;;) {
            // A newline continues the chain only when the next token is '.'.
            size_t save = i_;
            skip_newlines();
            if (!at(Tok::Dot)) {
                i_ = save;
                break;
            }
            next();
            skip_newlines();
            CallElem c;
            c.span.begin = peek().span.begin;
            c.callee = expect(Tok::Ident, "method name after '.'").text;
            expect(Tok::LParen, "'('");
            skip_newlines();
            if (!at(Tok::RParen)) {
                for (;;) {
                    c.args.push_back(parse_chain());
                    skip_newlines();
                    if (at(Tok::Comma)) {
                        next();
                        skip_newlines();
                        continue;
                    }
                    break;
                }
            }
            expect_nl(Tok::RParen, "')'");
            c.span.end = peek().span.begin;
            chain->calls.push_back(std::move(c));
        }
        if (chain->calls.empty()) return head;
        chain->span.end = peek().span.begin;
        return chain;
    }

    ExprPtr parse_primary() {
        auto e = std::make_shared<Expr>();
        e->span = peek().span;
        switch (peek().kind) {
            case Tok::Int:
                e->kind = ExprKind::IntLit;
                e->int_value = next().int_value;
                return e;
            case Tok::Float:
                e->kind = ExprKind::FloatLit;
                e->float_value = next().float_value;
                return e;
            case Tok::KwTrue:
                e->kind = ExprKind::BoolLit;
                e->bool_value = true;
                next();
                return e;
            case Tok::KwFalse:
                e->kind = ExprKind::BoolLit;
                e->bool_value = false;
                next();
                return e;
            case Tok::KwVoid:
                e->kind = ExprKind::VoidLit;
                next();
                return e;
            case Tok::Ident:
            case Tok::KwFunc:
                e->kind = ExprKind::Ident;
                e->ident = next().text;
                return e;
            default:
                throw SyntaxError(peek().span.begin,
                                  std::string("expected expression, found ") + token_name(peek().kind));
        }
    }

    TypeExprPtr parse_type() {
        auto lhs = parse_type_atom();
        if (at(Tok::Arrow)) {
            next();
            skip_newlines();
            auto rhs = parse_type();
            auto t = arrow_type(lhs, rhs);
            t->span = {lhs->span.begin, rhs->span.end};
            return t;
        }
        return lhs;
    }

    TypeExprPtr parse_type_atom() {
        Pos begin = peek().span.begin;
        if (at(Tok::Percent)) {
            next();
            auto t = var_type(expect(Tok::Ident, "type variable name").text);
            t->span.begin = begin;
            t->span.end = peek().span.begin;
            return t;
        }
        if (at(Tok::LParen)) {
            next();
            skip_newlines();
            auto t = parse_type();
            expect_nl(Tok::RParen, "')'");
            return t;
        }
        Token name = expect(Tok::Ident, "type name");
        if (name.text == "Array") {
            expect(Tok::Lt, "'<'");
            skip_newlines();
            auto elem = parse_type();
            long len = -1;
            skip_newlines();
            if (at(Tok::Comma)) {
                next();
                skip_newlines();
                Token n = expect(Tok::Int, "array length");
                if (n.int_value < 1 || n.int_value > 1 << 20)
                    throw SyntaxError(n.span.begin, "array length out of range");
                len = static_cast<long>(n.int_value);
            }
            expect_nl(Tok::Gt, "'>'");
            auto t = array_type(elem, len);
            t->span = {begin, peek().span.begin};
            return t;
        }
        auto t = named_type(name.text);
        t->span = name.span;
        return t;
    }

    void end_of_line() {
        if (at(Tok::Newline) || at(Tok::Semi)) {
            next();
            return;
        }
        if (at(Tok::End)) return;
        throw SyntaxError(peek().span.begin,
                          std::string("expected end of declaration, found ") + token_name(peek().kind));
    }
};

}  // namespace

SourceProgram parse_program(const std::string& src) {
    Parser p(src);
    return p.run();
}

}  // namespace purevm
