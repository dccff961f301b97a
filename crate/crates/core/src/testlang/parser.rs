//! Recursive-descent parser for the test-function language.
//!
//! The grammar has two top-level shapes: a bare ternary expression, or a
//! dyadic sum `rational * ternary + ...`. The parser first attempts the
//! ternary reading of the whole input, then the dyadic one, and reports the
//! error that got furthest.

use std::fmt;

use super::ast::{BoolExpr, TernExpr, TestFn};
use super::Dyadic;
use crate::transforms::GSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
    /// True for type errors (a well-formed expression of the wrong type),
    /// false for syntax errors.
    pub type_error: bool,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.type_error { "type error" } else { "syntax error" };
        write!(f, "{kind}: {} at offset {}", self.message, self.offset)
    }
}

impl std::error::Error for ParseError {}

pub fn parse(text: &str) -> Result<TestFn, ParseError> {
    let tokens = lex(text)?;
    let ternary_attempt = {
        let mut p = Parser { tokens: &tokens, pos: 0, end: text.len() };
        p.ternary().and_then(|t| {
            p.expect_end()?;
            Ok(TestFn::Ternary(t))
        })
    };
    let ternary_err = match ternary_attempt {
        Ok(f) => return Ok(f),
        Err(e) => e,
    };
    let dyadic_attempt = {
        let mut p = Parser { tokens: &tokens, pos: 0, end: text.len() };
        p.dyadic_sum().and_then(|terms| {
            p.expect_end()?;
            TestFn::dyadic(terms)
                .map_err(|e| ParseError { offset: text.len(), message: e.to_string(), type_error: true })
        })
    };
    match dyadic_attempt {
        Ok(f) => Ok(f),
        Err(dyadic_err) => {
            // Report whichever parse got further; prefer type errors on ties.
            if dyadic_err.offset > ternary_err.offset
                || (dyadic_err.offset == ternary_err.offset
                    && dyadic_err.type_error
                    && !ternary_err.type_error)
            {
                Err(dyadic_err)
            } else {
                Err(ternary_err)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Star,
    Plus,
    Slash,
    Percent,
    EqEq,
    Lt,
    Ge,
    LParen,
    RParen,
    LBracket,
    Comma,
    Colon,
    Semi,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Star => "`*`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Percent => "`%`".into(),
            Tok::EqEq => "`==`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Semi => "`;`".into(),
        }
    }
}

struct Token {
    tok: Tok,
    offset: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let offset = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
            }
            b'a'..=b'z' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_lowercase() {
                    i += 1;
                }
                tokens.push(Token { tok: Tok::Ident(text[start..i].to_string()), offset });
            }
            b'0'..=b'9' | b'-' => {
                let start = i;
                i += 1;
                if c == b'-' && (i >= bytes.len() || !bytes[i].is_ascii_digit()) {
                    return Err(syntax(offset, "`-` must begin a number"));
                }
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let value: i64 = text[start..i].parse().map_err(|_| {
                    syntax(offset, "integer literal out of range")
                })?;
                tokens.push(Token { tok: Tok::Int(value), offset });
            }
            b'*' => {
                tokens.push(Token { tok: Tok::Star, offset });
                i += 1;
            }
            b'+' => {
                // A `+` directly followed by a digit is a signed literal.
                if i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    let start = i + 1;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let value: i64 = text[start..i]
                        .parse()
                        .map_err(|_| syntax(offset, "integer literal out of range"))?;
                    tokens.push(Token { tok: Tok::Int(value), offset });
                } else {
                    tokens.push(Token { tok: Tok::Plus, offset });
                    i += 1;
                }
            }
            b'/' => {
                tokens.push(Token { tok: Tok::Slash, offset });
                i += 1;
            }
            b'%' => {
                tokens.push(Token { tok: Tok::Percent, offset });
                i += 1;
            }
            b'=' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    tokens.push(Token { tok: Tok::EqEq, offset });
                    i += 2;
                } else {
                    return Err(syntax(offset, "expected `==`"));
                }
            }
            b'<' => {
                tokens.push(Token { tok: Tok::Lt, offset });
                i += 1;
            }
            b'>' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'=' {
                    tokens.push(Token { tok: Tok::Ge, offset });
                    i += 2;
                } else {
                    return Err(syntax(offset, "expected `>=`"));
                }
            }
            b'(' => {
                tokens.push(Token { tok: Tok::LParen, offset });
                i += 1;
            }
            b')' => {
                tokens.push(Token { tok: Tok::RParen, offset });
                i += 1;
            }
            b'[' => {
                tokens.push(Token { tok: Tok::LBracket, offset });
                i += 1;
            }
            b',' => {
                tokens.push(Token { tok: Tok::Comma, offset });
                i += 1;
            }
            b':' => {
                tokens.push(Token { tok: Tok::Colon, offset });
                i += 1;
            }
            b';' => {
                tokens.push(Token { tok: Tok::Semi, offset });
                i += 1;
            }
            _ => return Err(syntax(offset, "unexpected character")),
        }
    }
    Ok(tokens)
}

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError { offset, message: message.into(), type_error: false }
}

fn type_err(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError { offset, message: message.into(), type_error: true }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn bump(&mut self) -> Option<&'a Tok> {
        let t = self.tokens.get(self.pos).map(|t| &t.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            Err(syntax(self.offset(), format!("expected {}", tok.describe())))
        }
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(syntax(self.offset(), format!("expected end of input, found {}", t.describe()))),
        }
    }

    fn expect_ident(&mut self, name: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == name => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(syntax(self.offset(), format!("expected `{name}`"))),
        }
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(*v)
            }
            _ => Err(syntax(self.offset(), "expected an integer")),
        }
    }

    fn uint(&mut self, what: &str) -> Result<u64, ParseError> {
        let offset = self.offset();
        let v = self.int()?;
        u64::try_from(v).map_err(|_| syntax(offset, format!("{what} must be nonnegative")))
    }

    // --- ternary layer ---

    fn ternary(&mut self) -> Result<TernExpr, ParseError> {
        let first = self.tern_primary()?;
        let mut parts = vec![first];
        while self.eat(&Tok::Star) {
            parts.push(self.tern_primary()?);
        }
        Ok(TernExpr::product(parts))
    }

    fn tern_primary(&mut self) -> Result<TernExpr, ParseError> {
        let offset = self.offset();
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                if !(-1..=1).contains(&v) {
                    return Err(syntax(offset, "ternary literal must be -1, 0 or 1"));
                }
                Ok(TernExpr::Lit(v as i8))
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "pm" => {
                    self.pos += 1;
                    self.expect(Tok::LParen)?;
                    let b = self.bool_expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(TernExpr::Pm(b))
                }
                "ind" => {
                    self.pos += 1;
                    self.expect(Tok::LParen)?;
                    let b = self.bool_expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(TernExpr::Ind(b))
                }
                "tern" => {
                    self.pos += 1;
                    self.tern_cases()
                }
                "lift" => {
                    self.pos += 1;
                    self.lift()
                }
                "bit" | "popcount" | "n" | "not" => Err(type_err(
                    offset,
                    "boolean expression where a ternary expression was expected (wrap it in pm(...) or ind(...))",
                )),
                other => Err(syntax(offset, format!("unknown function `{other}`"))),
            },
            Some(Tok::LParen) => Err(type_err(
                offset,
                "boolean expression where a ternary expression was expected (wrap it in pm(...) or ind(...))",
            )),
            _ => Err(syntax(offset, "expected a ternary expression")),
        }
    }

    fn tern_cases(&mut self) -> Result<TernExpr, ParseError> {
        self.expect(Tok::LParen)?;
        self.expect_ident("n")?;
        self.expect(Tok::Percent)?;
        let mod_offset = self.offset();
        let modulus = self.uint("modulus")?;
        if modulus == 0 {
            return Err(syntax(mod_offset, "modulus must be at least 1"));
        }
        self.expect(Tok::Colon)?;
        let mut values = Vec::new();
        loop {
            let offset = self.offset();
            let v = self.int()?;
            if !(-1..=1).contains(&v) {
                return Err(syntax(offset, "case value must be -1, 0 or 1"));
            }
            values.push(v as i8);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        let close_offset = self.offset();
        self.expect(Tok::RParen)?;
        if values.len() as u64 != modulus {
            return Err(syntax(
                close_offset,
                format!("tern(n % {modulus} : ...) needs exactly {modulus} case values, found {}", values.len()),
            ));
        }
        Ok(TernExpr::Cases(values))
    }

    fn lift(&mut self) -> Result<TernExpr, ParseError> {
        self.expect(Tok::LParen)?;
        let g = self.gspec()?;
        self.expect(Tok::Semi)?;
        let n0 = self.uint("n0")?;
        self.expect(Tok::Semi)?;
        let inner = self.ternary()?;
        self.expect(Tok::RParen)?;
        Ok(TernExpr::Lift { g: Box::new(g), n0, inner: Box::new(inner) })
    }

    fn gspec(&mut self) -> Result<GSpec, ParseError> {
        let offset = self.offset();
        match self.peek() {
            Some(Tok::Ident(name)) if name == "affine" => {
                self.pos += 1;
                self.expect(Tok::LParen)?;
                let a = self.uint("scale a")?;
                self.expect(Tok::Comma)?;
                let b = self.int()?;
                self.expect(Tok::Comma)?;
                let x_min = self.uint("x_min")?;
                self.expect(Tok::RParen)?;
                GSpec::affine(a, b, x_min).map_err(|e| type_err(offset, e.to_string()))
            }
            Some(Tok::Ident(name)) if name == "poly" => {
                self.pos += 1;
                self.expect(Tok::LParen)?;
                let mut coeffs = vec![self.uint("coefficient")?];
                while self.eat(&Tok::Comma) {
                    coeffs.push(self.uint("coefficient")?);
                }
                self.expect(Tok::Semi)?;
                let x_min = self.uint("x_min")?;
                self.expect(Tok::RParen)?;
                GSpec::poly(coeffs, x_min).map_err(|e| type_err(offset, e.to_string()))
            }
            _ => Err(syntax(offset, "expected `affine(...)` or `poly(...)`")),
        }
    }

    // --- boolean layer; precedence: or < xor < and < not ---

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn bool_expr(&mut self) -> Result<BoolExpr, ParseError> {
        let mut acc = self.bool_xor()?;
        while self.at_keyword("or") {
            self.pos += 1;
            let rhs = self.bool_xor()?;
            acc = BoolExpr::Or(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn bool_xor(&mut self) -> Result<BoolExpr, ParseError> {
        let mut acc = self.bool_and()?;
        while self.at_keyword("xor") {
            self.pos += 1;
            let rhs = self.bool_and()?;
            acc = BoolExpr::Xor(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn bool_and(&mut self) -> Result<BoolExpr, ParseError> {
        let mut acc = self.bool_not()?;
        while self.at_keyword("and") {
            self.pos += 1;
            let rhs = self.bool_not()?;
            acc = BoolExpr::And(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn bool_not(&mut self) -> Result<BoolExpr, ParseError> {
        if self.at_keyword("not") {
            self.pos += 1;
            let inner = self.bool_not()?;
            return Ok(BoolExpr::Not(Box::new(inner)));
        }
        self.bool_atom()
    }

    fn bool_atom(&mut self) -> Result<BoolExpr, ParseError> {
        let offset = self.offset();
        match self.bump() {
            Some(Tok::LParen) => {
                let inner = self.bool_expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "bit" => {
                    self.expect(Tok::LParen)?;
                    self.expect_ident("n")?;
                    self.expect(Tok::Comma)?;
                    let idx_offset = self.offset();
                    let i = self.uint("bit index")?;
                    if i > 63 {
                        return Err(syntax(idx_offset, "bit index must be at most 63"));
                    }
                    self.expect(Tok::RParen)?;
                    Ok(BoolExpr::Bit(i as u32))
                }
                "popcount" => {
                    self.expect(Tok::LParen)?;
                    self.expect_ident("n")?;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::Ge)?;
                    let t = self.uint("popcount threshold")?;
                    let t = u32::try_from(t)
                        .map_err(|_| syntax(offset, "popcount threshold out of range"))?;
                    Ok(BoolExpr::PopCountGe(t))
                }
                "n" => match self.bump() {
                    Some(Tok::Percent) => {
                        let mod_offset = self.offset();
                        let modulus = self.uint("modulus")?;
                        if modulus == 0 {
                            return Err(syntax(mod_offset, "modulus must be at least 1"));
                        }
                        self.expect(Tok::EqEq)?;
                        let res_offset = self.offset();
                        let residue = self.uint("residue")?;
                        if residue >= modulus {
                            return Err(syntax(res_offset, "residue must be below the modulus"));
                        }
                        Ok(BoolExpr::ModEq { modulus, residue })
                    }
                    Some(Tok::Lt) => {
                        let bound = self.uint("bound")?;
                        Ok(BoolExpr::Less(bound))
                    }
                    Some(Tok::Ident(kw)) if kw == "in" => {
                        self.expect(Tok::LBracket)?;
                        let lo = self.uint("interval start")?;
                        self.expect(Tok::Comma)?;
                        let hi_offset = self.offset();
                        let hi = self.uint("interval end")?;
                        self.expect(Tok::RParen)?;
                        if lo > hi {
                            return Err(syntax(hi_offset, "interval end must be at least its start"));
                        }
                        Ok(BoolExpr::InRange { lo, hi })
                    }
                    _ => Err(syntax(offset, "expected `%`, `<` or `in` after `n`")),
                },
                other => Err(syntax(offset, format!("unknown boolean atom `{other}`"))),
            },
            _ => Err(syntax(offset, "expected a boolean atom")),
        }
    }

    // --- dyadic layer ---

    fn dyadic_sum(&mut self) -> Result<Vec<(Dyadic, TernExpr)>, ParseError> {
        let mut terms = vec![self.dyadic_term()?];
        while self.eat(&Tok::Plus) {
            terms.push(self.dyadic_term()?);
        }
        Ok(terms)
    }

    fn dyadic_term(&mut self) -> Result<(Dyadic, TernExpr), ParseError> {
        let weight = self.rational()?;
        self.expect(Tok::Star)?;
        let t = self.tern_primary()?;
        let mut parts = vec![t];
        while self.eat(&Tok::Star) {
            parts.push(self.tern_primary()?);
        }
        Ok((weight, TernExpr::product(parts)))
    }

    fn rational(&mut self) -> Result<Dyadic, ParseError> {
        let offset = self.offset();
        let num = self.int()?;
        if self.eat(&Tok::Slash) {
            let den_offset = self.offset();
            let den = self.int()?;
            let den = u64::try_from(den)
                .ok()
                .filter(|&d| d > 0)
                .ok_or_else(|| syntax(den_offset, "denominator must be positive"))?;
            if !den.is_power_of_two() {
                return Err(type_err(den_offset, "denominator must be a power of two"));
            }
            if den > (1u64 << 32) {
                return Err(syntax(den_offset, "denominator is limited to 2^32"));
            }
            let value = Dyadic::ratio(num, den).expect("validated dyadic denominator");
            if !value.in_unit_interval() {
                return Err(type_err(offset, "weight must lie in [-1, 1]"));
            }
            Ok(value)
        } else {
            if !(-1..=1).contains(&num) {
                return Err(type_err(offset, "integer weight must be -1, 0 or 1"));
            }
            Ok(Dyadic::from_int(num))
        }
    }
}
