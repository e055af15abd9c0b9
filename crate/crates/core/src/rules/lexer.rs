use super::ast::Location;
use super::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Int(u64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Dot,
    Plus,
    Star,
    Pipe,
    Arrow,
    LeftArrow,
    Eq,
    Ne,
    Ge,
    Gt,
    Le,
    Lt,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Int(n) => format!("integer {n}"),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Plus => "+",
            Tok::Star => "*",
            Tok::Pipe => "|",
            Tok::Arrow => "->",
            Tok::LeftArrow => "<-",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Ge => ">=",
            Tok::Gt => ">",
            Tok::Le => "<=",
            Tok::Lt => "<",
            Tok::Ident(_) | Tok::Str(_) | Tok::Int(_) => "",
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub at: Location,
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else if c.is_some() {
                column += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let at = Location { line, column };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        let tok = match c {
            '/' => {
                bump!();
                if chars.peek() != Some(&'/') {
                    return Err(ParseError::syntax(at, "unexpected `/`"));
                }
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
                continue;
            }
            '"' => {
                bump!();
                let mut s = String::new();
                loop {
                    match bump!() {
                        None => return Err(ParseError::syntax(at, "unterminated string")),
                        Some('"') => break,
                        Some('\\') => match bump!() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some(other) => {
                                return Err(ParseError::syntax(at, format!("unknown escape `\\{other}`")))
                            }
                            None => return Err(ParseError::syntax(at, "unterminated string")),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Tok::Str(s)
            }
            c if c.is_ascii_digit() => {
                let mut digits = String::new();
                while let Some(&d) = chars.peek() {
                    if !d.is_ascii_digit() {
                        break;
                    }
                    digits.push(d);
                    bump!();
                }
                let n = digits.parse().map_err(|_| ParseError::syntax(at, "integer out of range"))?;
                Tok::Int(n)
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&d) = chars.peek() {
                    if !(d.is_alphanumeric() || d == '_') {
                        break;
                    }
                    ident.push(d);
                    bump!();
                }
                Tok::Ident(ident)
            }
            _ => {
                bump!();
                let next = chars.peek().copied();
                let mut two = |tok: Tok| {
                    bump!();
                    tok
                };
                match (c, next) {
                    ('-', Some('>')) => two(Tok::Arrow),
                    ('<', Some('-')) => two(Tok::LeftArrow),
                    ('<', Some('=')) => two(Tok::Le),
                    ('>', Some('=')) => two(Tok::Ge),
                    ('!', Some('=')) => two(Tok::Ne),
                    ('(', _) => Tok::LParen,
                    (')', _) => Tok::RParen,
                    ('[', _) => Tok::LBracket,
                    (']', _) => Tok::RBracket,
                    ('{', _) => Tok::LBrace,
                    ('}', _) => Tok::RBrace,
                    (',', _) => Tok::Comma,
                    (':', _) => Tok::Colon,
                    ('.', _) => Tok::Dot,
                    ('+', _) => Tok::Plus,
                    ('*', _) => Tok::Star,
                    ('|', _) => Tok::Pipe,
                    ('=', _) => Tok::Eq,
                    ('<', _) => Tok::Lt,
                    ('>', _) => Tok::Gt,
                    _ => return Err(ParseError::syntax(at, format!("unexpected character `{c}`"))),
                }
            }
        };
        out.push(Token { tok, at });
    }
    Ok(out)
}
