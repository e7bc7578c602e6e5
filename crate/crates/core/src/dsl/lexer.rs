use crate::model::Comparator;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Num(f64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Semi,
    Assign,
    Colon,
    At,
    /// `->`
    Direct,
    /// `~>`
    Indirect,
    /// `..>`
    Allocation,
    /// `=>`
    FatArrow,
    Plus,
    Minus,
    Star,
    Cmp(Comparator),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Assign => "=",
            Tok::Colon => ":",
            Tok::At => "@",
            Tok::Direct => "->",
            Tok::Indirect => "~>",
            Tok::Allocation => "..>",
            Tok::FatArrow => "=>",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Cmp(c) => c.as_str(),
            _ => "?",
        }
    }
}

/// Byte offset, line and column of a token start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Pos {
    pub line: usize,
    pub column: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LexError {
    pub code: &'static str,
    pub message: String,
    pub pos: Pos,
}

pub(crate) struct Lexer<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Lexer {
            src,
            offset: 0,
            line: 1,
            column: 1,
        }
    }

    /// Tokenizes the whole input; lexical errors are collected and the
    /// offending character skipped.
    pub(crate) fn tokenize(mut self) -> (Vec<(Tok, Pos)>, Vec<LexError>) {
        let mut toks = Vec::new();
        let mut errors = Vec::new();
        loop {
            self.skip_trivia();
            let start = (self.offset, self.line, self.column);
            let Some(c) = self.peek() else {
                toks.push((
                    Tok::Eof,
                    Pos {
                        line: self.line,
                        column: self.column,
                        len: 0,
                    },
                ));
                break;
            };
            let result = self.token(c);
            let pos = Pos {
                line: start.1,
                column: start.2,
                len: self.offset - start.0,
            };
            match result {
                Ok(tok) => toks.push((tok, pos)),
                Err((code, message)) => errors.push(LexError { code, message, pos }),
            }
        }
        (toks, errors)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.offset..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek_at(1) == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some('#') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return,
            }
        }
    }

    fn token(&mut self, c: char) -> Result<Tok, (&'static str, String)> {
        let next = self.peek_at(1);
        let simple = |t: Tok, n: usize, lexer: &mut Self| {
            for _ in 0..n {
                lexer.bump();
            }
            Ok(t)
        };
        match c {
            '{' => simple(Tok::LBrace, 1, self),
            '}' => simple(Tok::RBrace, 1, self),
            '[' => simple(Tok::LBracket, 1, self),
            ']' => simple(Tok::RBracket, 1, self),
            '(' => simple(Tok::LParen, 1, self),
            ')' => simple(Tok::RParen, 1, self),
            ',' => simple(Tok::Comma, 1, self),
            ';' => simple(Tok::Semi, 1, self),
            ':' => simple(Tok::Colon, 1, self),
            '@' => simple(Tok::At, 1, self),
            '+' => simple(Tok::Plus, 1, self),
            '*' => simple(Tok::Star, 1, self),
            '~' if next == Some('>') => simple(Tok::Indirect, 2, self),
            '.' if next == Some('.') && self.peek_at(2) == Some('>') => {
                simple(Tok::Allocation, 3, self)
            }
            '-' if next == Some('>') => simple(Tok::Direct, 2, self),
            '-' if next.is_some_and(|d| d.is_ascii_digit() || d == '.') => self.number(),
            '-' => simple(Tok::Minus, 1, self),
            '=' if next == Some('>') => simple(Tok::FatArrow, 2, self),
            '=' if next == Some('=') => simple(Tok::Cmp(Comparator::Eq), 2, self),
            '=' => simple(Tok::Assign, 1, self),
            '<' if next == Some('=') => simple(Tok::Cmp(Comparator::Le), 2, self),
            '<' => simple(Tok::Cmp(Comparator::Lt), 1, self),
            '>' if next == Some('=') => simple(Tok::Cmp(Comparator::Ge), 2, self),
            '>' => simple(Tok::Cmp(Comparator::Gt), 1, self),
            '!' if next == Some('=') => simple(Tok::Cmp(Comparator::Ne), 2, self),
            '"' => self.string(),
            c if c.is_ascii_digit() => self.number(),
            c if c.is_ascii_alphabetic() || c == '_' => Ok(self.ident()),
            other => {
                self.bump();
                Err(("P001", format!("unexpected character `{other}`")))
            }
        }
    }

    fn ident(&mut self) -> Tok {
        let start = self.offset;
        while let Some(c) = self.peek() {
            let continues = c.is_ascii_alphanumeric()
                || c == '_'
                || (c == '-' && self.peek_at(1) != Some('>'));
            if !continues {
                break;
            }
            self.bump();
        }
        Tok::Ident(self.src[start..self.offset].to_string())
    }

    fn number(&mut self) -> Result<Tok, (&'static str, String)> {
        let start = self.offset;
        if self.peek() == Some('-') {
            self.bump();
        }
        let digits = |lexer: &mut Self| {
            while lexer.peek().is_some_and(|c| c.is_ascii_digit()) {
                lexer.bump();
            }
        };
        digits(self);
        if self.peek() == Some('.') && self.peek_at(1) != Some('.') {
            self.bump();
            digits(self);
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.peek_at(1), Some('+' | '-'));
            let after = self.peek_at(if sign { 2 } else { 1 });
            if after.is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
                if sign {
                    self.bump();
                }
                digits(self);
            }
        }
        let text = &self.src[start..self.offset];
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Tok::Num(v)),
            _ => Err(("P004", format!("invalid number `{text}`"))),
        }
    }

    fn string(&mut self) -> Result<Tok, (&'static str, String)> {
        self.bump();
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return Err(("P002", "unterminated string".to_string())),
                Some('"') => return Ok(Tok::Str(out)),
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    Some('t') => out.push('\t'),
                    Some('r') => out.push('\r'),
                    Some('u') => {
                        if self.bump() != Some('{') {
                            return Err(("P002", "malformed \\u escape".to_string()));
                        }
                        let mut hex = String::new();
                        loop {
                            match self.bump() {
                                Some('}') => break,
                                Some(h) if h.is_ascii_hexdigit() && hex.len() < 6 => hex.push(h),
                                _ => {
                                    return Err(("P002", "malformed \\u escape".to_string()))
                                }
                            }
                        }
                        let ch = u32::from_str_radix(&hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or(("P002", format!("invalid code point `{hex}`")))?;
                        out.push(ch);
                    }
                    other => {
                        return Err((
                            "P002",
                            format!("unknown escape `\\{}`", other.unwrap_or(' ')),
                        ))
                    }
                },
                Some(c) => out.push(c),
            }
        }
    }
}

/// Quotes `s` so the lexer reads it back unchanged.
pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => out.push_str(&format!("\\u{{{:x}}}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        let (t, e) = Lexer::new(src).tokenize();
        assert!(e.is_empty(), "{e:?}");
        t.into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn arrows_and_hyphenated_ids() {
        assert_eq!(
            toks("a-b->c ~> d..>e"),
            vec![
                Tok::Ident("a-b".into()),
                Tok::Direct,
                Tok::Ident("c".into()),
                Tok::Indirect,
                Tok::Ident("d".into()),
                Tok::Allocation,
                Tok::Ident("e".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn numbers_and_minus() {
        assert_eq!(
            toks("= - -1.5 2e3 >= -0.25"),
            vec![
                Tok::Assign,
                Tok::Minus,
                Tok::Num(-1.5),
                Tok::Num(2000.0),
                Tok::Cmp(Comparator::Ge),
                Tok::Num(-0.25),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn string_escapes_round_trip() {
        for s in ["plain", "q\"uote", "back\\slash", "new\nline", "ünïcødé €", "\u{1}"] {
            assert_eq!(toks(&quote(s)), vec![Tok::Str(s.into()), Tok::Eof]);
        }
    }

    #[test]
    fn comments_skipped_and_positions_tracked() {
        let (t, _) = Lexer::new("// c\n  kbi").tokenize();
        assert_eq!(t[0].1, Pos { line: 2, column: 3, len: 3 });
    }

    #[test]
    fn errors_are_collected() {
        let (_, e) = Lexer::new("a $ b \"open").tokenize();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].code, "P001");
        assert_eq!(e[1].code, "P002");
    }
}
