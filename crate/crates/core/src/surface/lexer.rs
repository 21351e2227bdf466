use crate::error::{Error, Result};
use crate::surface::Span;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// `??`
    Hole,
    /// `case?`
    CaseAny,
    /// `fields?`
    FieldsAny,
    /// `cons?`
    ConsAny,
    At,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LAngle,
    RAngle,
    Le,
    Ge,
    EqEq,
    NotEq,
    Assign,
    AndAnd,
    OrOr,
    Bang,
    Plus,
    Minus,
    Star,
    Comma,
    Semi,
    Colon,
    Question,
    Dot,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Hole => "??",
            Tok::CaseAny => "case?",
            Tok::FieldsAny => "fields?",
            Tok::ConsAny => "cons?",
            Tok::At => "@",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LAngle => "<",
            Tok::RAngle => ">",
            Tok::Le => "<=",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Assign => "=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Question => "?",
            Tok::Dot => ".",
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col);
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            bump!();
            bump!();
            while i < chars.len() && !(chars[i] == '*' && chars.get(i + 1) == Some(&'/')) {
                bump!();
            }
            if i >= chars.len() {
                return Err(Error::Syntax { span, msg: "unterminated block comment".into() });
            }
            bump!();
            bump!();
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let n = text
                .parse::<i64>()
                .map_err(|_| Error::Syntax { span, msg: format!("integer literal `{text}` out of range") })?;
            out.push((Tok::Int(n), span));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                bump!();
            }
            let word: String = chars[start..i].iter().collect();
            // `case?`, `fields?` and `cons?` are single tokens; `x??` is not.
            let psc = matches!(word.as_str(), "case" | "fields" | "cons")
                && chars.get(i) == Some(&'?')
                && chars.get(i + 1) != Some(&'?');
            if psc {
                bump!();
                out.push((
                    match word.as_str() {
                        "case" => Tok::CaseAny,
                        "fields" => Tok::FieldsAny,
                        _ => Tok::ConsAny,
                    },
                    span,
                ));
            } else {
                out.push((Tok::Ident(word), span));
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, width) = match (c, next) {
            ('?', Some('?')) => (Tok::Hole, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('=', Some('=')) => (Tok::EqEq, 2),
            ('!', Some('=')) => (Tok::NotEq, 2),
            ('&', Some('&')) => (Tok::AndAnd, 2),
            ('|', Some('|')) => (Tok::OrOr, 2),
            ('@', _) => (Tok::At, 1),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            ('[', _) => (Tok::LBracket, 1),
            (']', _) => (Tok::RBracket, 1),
            ('<', _) => (Tok::LAngle, 1),
            ('>', _) => (Tok::RAngle, 1),
            ('=', _) => (Tok::Assign, 1),
            ('!', _) => (Tok::Bang, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            (',', _) => (Tok::Comma, 1),
            (';', _) => (Tok::Semi, 1),
            (':', _) => (Tok::Colon, 1),
            ('?', _) => (Tok::Question, 1),
            ('.', _) => (Tok::Dot, 1),
            _ => return Err(Error::Syntax { span, msg: format!("unexpected character `{c}`") }),
        };
        for _ in 0..width {
            bump!();
        }
        out.push((tok, span));
    }
    out.push((Tok::Eof, Span::new(line, col)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn psc_tokens() {
        assert_eq!(
            toks("case?: e.fields? cons? ??"),
            vec![
                Tok::CaseAny,
                Tok::Colon,
                Tok::Ident("e".into()),
                Tok::Dot,
                Tok::FieldsAny,
                Tok::ConsAny,
                Tok::Hole,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn hole_after_identifier_is_not_psc() {
        assert_eq!(toks("a[??]")[2], Tok::Hole);
    }

    #[test]
    fn positions_and_comments() {
        let t = tokenize("// c\n  x /* y */ z").unwrap();
        assert_eq!(t[0].1, Span::new(2, 3));
        assert_eq!(t[1].0, Tok::Ident("z".into()));
    }

    #[test]
    fn bad_char() {
        assert!(matches!(tokenize("a $ b"), Err(Error::Syntax { span, .. }) if span == Span::new(1, 3)));
    }
}
