//! Tokenizer and parser for the call-style mini-language shared by rule and
//! law descriptions, e.g. `min(Tpm(1,2), fixed(5))` or `bm(dt=1e-3,T=10)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// A bare word or number: `randrate`, `-1/3`, `1e-3`.
    Atom(String),
    Call(String, Vec<Expr>),
    /// `key=value`
    Keyed(String, Box<Expr>),
    /// `rule @ event`
    Guarded(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expr()?;
        if parser.pos != parser.tokens.len() {
            return Err(Error::Parse(format!(
                "unexpected trailing input in {src:?} at token {}",
                parser.pos
            )));
        }
        Ok(expr)
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Expr::Atom(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Atom(s) => f.write_str(s),
            Expr::Call(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Keyed(k, v) => write!(f, "{k}={v}"),
            Expr::Guarded(r, e) => write!(f, "{r}@{e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Word(String),
    Open,
    Close,
    Comma,
    Equals,
    At,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            c if c.is_whitespace() => {
                chars.next();
            }
            '(' => {
                chars.next();
                out.push(Token::Open);
            }
            ')' => {
                chars.next();
                out.push(Token::Close);
            }
            ',' => {
                chars.next();
                out.push(Token::Comma);
            }
            '=' => {
                chars.next();
                out.push(Token::Equals);
            }
            '@' => {
                chars.next();
                out.push(Token::At);
            }
            c if c.is_ascii_alphanumeric() || "_.+-/".contains(c) => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || "_.+-/".contains(c) {
                        word.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push(Token::Word(word));
            }
            other => {
                return Err(Error::Parse(format!(
                    "unexpected character {other:?} in {src:?}"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.tokens.get(self.pos) {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            other => Err(Error::Parse(format!("expected {want:?}, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let head = self.term()?;
        if self.peek() == Some(&Token::At) {
            self.pos += 1;
            let guard = self.term()?;
            return Ok(Expr::Guarded(Box::new(head), Box::new(guard)));
        }
        Ok(head)
    }

    fn term(&mut self) -> Result<Expr> {
        let word = match self.tokens.get(self.pos) {
            Some(Token::Word(w)) => w.clone(),
            other => return Err(Error::Parse(format!("expected a name, found {other:?}"))),
        };
        self.pos += 1;
        match self.peek() {
            Some(Token::Open) => {
                self.pos += 1;
                let mut args = Vec::new();
                if self.peek() != Some(&Token::Close) {
                    loop {
                        args.push(self.expr()?);
                        if self.peek() == Some(&Token::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Token::Close)?;
                Ok(Expr::Call(word, args))
            }
            Some(Token::Equals) => {
                self.pos += 1;
                let value = self.term()?;
                Ok(Expr::Keyed(word, Box::new(value)))
            }
            _ => Ok(Expr::Atom(word)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nested_calls() {
        let e = Expr::parse("min(Tpm(1,2), fixed(5))").unwrap();
        assert_eq!(e.to_string(), "min(Tpm(1,2),fixed(5))");
        let e = Expr::parse("bm(dt=1e-3, T=10)").unwrap();
        match e {
            Expr::Call(name, args) => {
                assert_eq!(name, "bm");
                assert_eq!(args[0], Expr::Keyed("dt".into(), Box::new(Expr::Atom("1e-3".into()))));
            }
            _ => panic!("expected call"),
        }
        let e = Expr::parse("mix(fixed(1) @ before(T(1)), T(1) @ not(before(T(1))))").unwrap();
        assert!(e.to_string().contains("@before(T(1))"));
        assert_eq!(Expr::parse("counterexample()").unwrap(), Expr::Call("counterexample".into(), vec![]));
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("min(1,").is_err());
        assert!(Expr::parse("a)b").is_err());
        assert!(Expr::parse("x # y").is_err());
        assert!(Expr::parse("").is_err());
    }
}
