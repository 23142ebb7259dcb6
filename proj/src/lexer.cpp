#include "purevm/lexer.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <unordered_map>

namespace purevm {

namespace {

const std::unordered_map<std::string, Tok>& keywords() {
    static const std::unordered_map<std::string, Tok> kw = {
        {"primitive", Tok::KwPrimitive}, {"func", Tok::KwFunc},
        {"global", Tok::KwGlobal},       {"event", Tok::KwEvent},
        {"interrupt", Tok::KwInterrupt}, {"true", Tok::KwTrue},
        {"false", Tok::KwFalse},         {"void", Tok::KwVoid},
    };
    return kw;
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

}  // namespace

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1, col = 1;

    auto pos = [&] { return Pos{line, col}; };
    auto push = [&](Tok k, Pos begin, const std::string& text) {
        Token t;
        t.kind = k;
        t.text = text;
        t.span = {begin, pos()};
        out.push_back(std::move(t));
    };
    auto advance = [&] {
        if (src[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        ++i;
    };

    while (i < src.size()) {
        char c = src[i];
        Pos begin = pos();
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') advance();
            continue;
        }
        if (c == '\n') {
            advance();
            push(Tok::Newline, begin, "\\n");
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            advance();
            continue;
        }
        if (ident_start(c)) {
            std::string word;
            while (i < src.size() && ident_char(src[i])) {
                word.push_back(src[i]);
                advance();
            }
            auto it = keywords().find(word);
            push(it == keywords().end() ? Tok::Ident : it->second, begin, word);
            continue;
        }
        if (digit(c) || (c == '-' && i + 1 < src.size() && digit(src[i + 1]))) {
            std::string num;
            if (c == '-') {
                num.push_back('-');
                advance();
            }
            bool hex = false;
            if (src[i] == '0' && i + 1 < src.size() && (src[i + 1] == 'x' || src[i + 1] == 'X')) {
                hex = true;
                num += "0x";
                advance();
                advance();
                if (i >= src.size() || !std::isxdigit(static_cast<unsigned char>(src[i])))
                    throw SyntaxError(begin, "incomplete hex literal");
                while (i < src.size() && std::isxdigit(static_cast<unsigned char>(src[i]))) {
                    num.push_back(src[i]);
                    advance();
                }
            } else {
                while (i < src.size() && digit(src[i])) {
                    num.push_back(src[i]);
                    advance();
                }
            }
            // A float needs digits on both sides of the dot; "1.foo()" stays
            // an int literal followed by a call.
            if (!hex && i + 1 < src.size() && src[i] == '.' && digit(src[i + 1])) {
                num.push_back('.');
                advance();
                while (i < src.size() && digit(src[i])) {
                    num.push_back(src[i]);
                    advance();
                }
                Token t;
                t.kind = Tok::Float;
                t.text = num;
                t.float_value = std::strtof(num.c_str(), nullptr);
                t.span = {begin, pos()};
                out.push_back(std::move(t));
                continue;
            }
            Token t;
            t.kind = Tok::Int;
            t.text = num;
            errno = 0;
            t.int_value = std::strtoll(num.c_str(), nullptr, 0);
            if (errno == ERANGE || t.int_value > 2147483647LL || t.int_value < -2147483648LL)
                throw SyntaxError(begin, "integer literal out of range: " + num);
            t.span = {begin, pos()};
            out.push_back(std::move(t));
            continue;
        }
        switch (c) {
            case '(': advance(); push(Tok::LParen, begin, "("); continue;
            case ')': advance(); push(Tok::RParen, begin, ")"); continue;
            case '{': advance(); push(Tok::LBrace, begin, "{"); continue;
            case '}': advance(); push(Tok::RBrace, begin, "}"); continue;
            case '[': advance(); push(Tok::LBracket, begin, "["); continue;
            case ']': advance(); push(Tok::RBracket, begin, "]"); continue;
            case '<': advance(); push(Tok::Lt, begin, "<"); continue;
            case '>': advance(); push(Tok::Gt, begin, ">"); continue;
            case ',': advance(); push(Tok::Comma, begin, ","); continue;
            case ':': advance(); push(Tok::Colon, begin, ":"); continue;
            case '.': advance(); push(Tok::Dot, begin, "."); continue;
            case ';': advance(); push(Tok::Semi, begin, ";"); continue;
            case '%': advance(); push(Tok::Percent, begin, "%"); continue;
            case '=': advance(); push(Tok::Assign, begin, "="); continue;
            case '-':
                advance();
                if (i < src.size() && src[i] == '>') {
                    advance();
                    push(Tok::Arrow, begin, "->");
                    continue;
                }
                throw SyntaxError(begin, "stray '-'");
            default:
                throw SyntaxError(begin, std::string("unexpected character '") + c + "'");
        }
    }
    Token end;
    end.kind = Tok::End;
    end.span = {pos(), pos()};
    out.push_back(end);
    return out;
}

const char* token_name(Tok t) {
    switch (t) {
        case Tok::Ident: return "identifier";
        case Tok::Int: return "integer literal";
        case Tok::Float: return "float literal";
        case Tok::KwPrimitive: return "'primitive'";
        case Tok::KwFunc: return "'func'";
        case Tok::KwGlobal: return "'global'";
        case Tok::KwEvent: return "'event'";
        case Tok::KwInterrupt: return "'interrupt'";
        case Tok::KwTrue: return "'true'";
        case Tok::KwFalse: return "'false'";
        case Tok::KwVoid: return "'void'";
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::LBrace: return "'{'";
        case Tok::RBrace: return "'}'";
        case Tok::LBracket: return "'['";
        case Tok::RBracket: return "']'";
        case Tok::Lt: return "'<'";
        case Tok::Gt: return "'>'";
        case Tok::Comma: return "','";
        case Tok::Colon: return "':'";
        case Tok::Dot: return "'.'";
        case Tok::Assign: return "'='";
        case Tok::Arrow: return "'->'";
        case Tok::Percent: return "'%'";
        case Tok::Semi: return "';'";
        case Tok::Newline: return "end of line";
        case Tok::End: return "end of input";
    }
    return "?";
}

}  // namespace purevm
