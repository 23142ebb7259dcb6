#pragma once

#include <string>
#include <vector>

#include "purevm/source.hpp"

namespace purevm {

enum class Tok {
    Ident,
    Int,
    Float,
    KwPrimitive,
    KwFunc,
    KwGlobal,
    KwEvent,
    KwInterrupt,
    KwTrue,
    KwFalse,
    KwVoid,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Comma,
    Colon,
    Dot,
    Assign,
    Arrow,
    Percent,
    Semi,
    Newline,
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    long long int_value = 0;
    float float_value = 0.0f;
    Span span;
};

// Tokenizes a whole buffer. '#' starts a comment running to end of line.
// Newlines are emitted as tokens; the parser decides where they matter.
std::vector<Token> lex(const std::string& src);

const char* token_name(Tok t);

}  // namespace purevm
