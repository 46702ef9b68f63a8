use super::ast::{Pos, Span};
use super::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Kw(k) => format!("`{k}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub const KEYWORDS: &[&str] = &[
    "call",
    "class",
    "construct",
    "copy",
    "delete",
    "delocal",
    "destruct",
    "do",
    "else",
    "fi",
    "from",
    "if",
    "inherits",
    "int",
    "local",
    "loop",
    "method",
    "new",
    "nil",
    "skip",
    "then",
    "uncall",
    "uncopy",
    "until",
];

// Longest first so that `<=>` wins over `<=` and `<`.
const SYMBOLS: &[&str] = &[
    "<=>", "+=", "-=", "^=", "&&", "||", "!=", "<=", ">=", "::", "+", "-", "^", "*", "/", "%", "&", "|", "<", ">", "=",
    "(", ")", "[", "]", ",",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! advance {
        ($n:expr) => {{
            for _ in 0..$n {
                if bytes[i] == b'\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        }};
    }

    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            advance!(1);
            continue;
        }
        if src[i..].starts_with("//") {
            while i < bytes.len() && bytes[i] != b'\n' {
                advance!(1);
            }
            continue;
        }
        let start = Pos { line, col };
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            let len = src[i..]
                .bytes()
                .take_while(|b| b.is_ascii_alphanumeric() || *b == b'_')
                .count();
            let word = &src[i..i + len];
            advance!(len);
            match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word.to_string()),
            }
        } else if c.is_ascii_digit() {
            let len = src[i..].bytes().take_while(u8::is_ascii_digit).count();
            let text = &src[i..i + len];
            let n = text.parse::<i64>().map_err(|_| SyntaxError {
                pos: start,
                message: format!("integer literal `{text}` is too large"),
                expected: vec![],
            })?;
            advance!(len);
            Tok::Int(n)
        } else if let Some(sym) = SYMBOLS.iter().find(|s| src[i..].starts_with(**s)) {
            advance!(sym.len());
            Tok::Sym(sym)
        } else {
            let ch = src[i..].chars().next().unwrap();
            return Err(SyntaxError {
                pos: start,
                message: format!("unexpected character `{ch}`"),
                expected: vec![],
            });
        };
        out.push(Token {
            tok,
            span: Span::new(start, Pos { line, col }),
        });
    }
    let end = Pos { line, col };
    out.push(Token {
        tok: Tok::Eof,
        span: Span::new(end, end),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn swap_beats_less_equal() {
        assert_eq!(
            toks("a <=> b <= c"),
            vec![
                Tok::Ident("a".into()),
                Tok::Sym("<=>"),
                Tok::Ident("b".into()),
                Tok::Sym("<="),
                Tok::Ident("c".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("// hi\n  skip // trailing\nnil").unwrap();
        assert_eq!(t[0].tok, Tok::Kw("skip"));
        assert_eq!(t[0].span.start, Pos { line: 2, col: 3 });
        assert_eq!(t[1].tok, Tok::Kw("nil"));
        assert_eq!(t[1].span.start, Pos { line: 3, col: 1 });
    }

    #[test]
    fn self_is_an_identifier() {
        assert_eq!(toks("self")[0], Tok::Ident("self".into()));
    }

    #[test]
    fn rejects_stray_character() {
        let e = tokenize("x += $").unwrap_err();
        assert_eq!(e.pos, Pos { line: 1, col: 6 });
    }
}
