//! Infix expression grammar and canonicalization into [`ScalarFn`].
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?
//! primary := number | coord | 'pi' | func '(' expr ')' | '(' expr ')'
//! func    := 'sin' | 'cos' | 'exp'
//! ```

use num_traits::{Signed, ToPrimitive, Zero};

use super::{parse_rational, Chart, ScalarFn, Q};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Q),
    Pi,
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Q),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            let v = parse_rational(&lit).ok_or_else(|| Error::Parse { column: col, message: format!("bad number `{lit}`") })?;
            out.push((col, Tok::Num(v)));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((col, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(c) {
            out.push((col, Tok::Op(c)));
            i += 1;
        } else {
            return Err(Error::Parse { column: col, message: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end_col: usize,
    chart: &'a Chart,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(c, _)| *c)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse { column: self.col(), message: message.into() })
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.primary()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let Some(tok) = self.peek().cloned() else {
            return self.err("unexpected end of expression");
        };
        match tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::Op('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.err("expected `)`");
                }
                Ok(e)
            }
            Tok::Op(c) => self.err(format!("unexpected `{c}`")),
            Tok::Ident(name) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    _ => None,
                };
                if let Some(func) = func {
                    if !self.eat('(') {
                        return self.err(format!("expected `(` after `{name}`"));
                    }
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return self.err("expected `)`");
                    }
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Expr::Pi);
                }
                match self.chart.index_of(&name) {
                    Some(i) => Ok(Expr::Var(i)),
                    None => Err(Error::UnknownCoordinate(name)),
                }
            }
        }
    }
}

/// Parses an expression over the coordinates of `chart`.
pub fn parse_expr(text: &str, chart: &Chart) -> Result<Expr> {
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end_col: text.chars().count() + 1, chart };
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

impl Expr {
    /// Canonical form on a chart of dimension `dim`.
    pub fn canonicalize(&self, dim: usize) -> Result<ScalarFn> {
        self.canon(dim, None)
    }

    /// `pi_slot` is the index of an auxiliary coordinate standing for pi while
    /// canonicalizing the argument of a trigonometric atom.
    fn canon(&self, dim: usize, pi_slot: Option<usize>) -> Result<ScalarFn> {
        Ok(match self {
            Expr::Num(v) => ScalarFn::constant(dim, v.clone()),
            Expr::Pi => match pi_slot {
                Some(i) => ScalarFn::var(dim, i),
                None => return Err(Error::NonCanonicalizable("pi may only appear in the phase of sin/cos".into())),
            },
            Expr::Var(i) => ScalarFn::var(dim, *i),
            Expr::Neg(a) => -a.canon(dim, pi_slot)?,
            Expr::Add(a, b) => a.canon(dim, pi_slot)? + b.canon(dim, pi_slot)?,
            Expr::Sub(a, b) => a.canon(dim, pi_slot)? - b.canon(dim, pi_slot)?,
            Expr::Mul(a, b) => a.canon(dim, pi_slot)? * b.canon(dim, pi_slot)?,
            Expr::Div(a, b) => {
                let num = a.canon(dim, pi_slot)?;
                let den = b.canon(dim, pi_slot)?;
                num.div_unit(&den)?
            }
            Expr::Pow(a, e) => {
                let base = a.canon(dim, pi_slot)?;
                let n = e
                    .canon(dim, pi_slot)?
                    .as_constant()
                    .filter(|c| c.is_integer())
                    .ok_or_else(|| Error::NonCanonicalizable("exponent must be an integer constant".into()))?;
                let n = n.to_i64().ok_or_else(|| Error::NonCanonicalizable("exponent too large".into()))?;
                let m = u32::try_from(n.unsigned_abs()).map_err(|_| Error::NonCanonicalizable("exponent too large".into()))?;
                if n >= 0 {
                    base.pow(m)
                } else {
                    let inv = base.unit_inverse().ok_or_else(|| Error::NotAUnit("negative power of a non-unit".into()))?;
                    inv.pow(m)
                }
            }
            Expr::Call(func, arg) => {
                if pi_slot.is_some() {
                    return Err(Error::NonCanonicalizable("nested transcendental atom".into()));
                }
                let inner = arg.canon(dim + 1, Some(dim))?;
                let (mut slope, constant) =
                    inner.as_affine().ok_or_else(|| Error::NonCanonicalizable("atom argument must be rational-linear".into()))?;
                let pi_coeff = slope.pop().unwrap();
                if !constant.is_zero() {
                    return Err(Error::NonCanonicalizable("atom argument has a constant term that is not a multiple of pi/2".into()));
                }
                match func {
                    Func::Exp => {
                        if !pi_coeff.is_zero() {
                            return Err(Error::NonCanonicalizable("exp of a multiple of pi".into()));
                        }
                        ScalarFn::exp_linear(slope)
                    }
                    Func::Sin | Func::Cos => {
                        let twice = &pi_coeff * Q::from_integer(2.into());
                        if !twice.is_integer() {
                            return Err(Error::NonCanonicalizable("trigonometric phase must be a multiple of pi/2".into()));
                        }
                        let mut k: num_bigint::BigInt = twice.to_integer() % 4;
                        if k.is_negative() {
                            k += 4u8;
                        }
                        let mut k = k.to_i64().unwrap();
                        if *func == Func::Cos {
                            k = (k + 1) % 4;
                        }
                        // sin(u + k*pi/2)
                        match k {
                            0 => ScalarFn::sin_linear(slope),
                            1 => ScalarFn::cos_linear(slope),
                            2 => -ScalarFn::sin_linear(slope),
                            _ => -ScalarFn::cos_linear(slope),
                        }
                    }
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart() -> Chart {
        Chart::new("C", &[("theta", true), ("x", false)]).unwrap()
    }

    #[test]
    fn precedence() {
        let c = chart();
        assert_eq!(c.parse("-x^2").unwrap(), -c.parse("x*x").unwrap());
        assert_eq!(c.parse("2*x^2^1").unwrap(), c.parse("2*x*x").unwrap());
        assert_eq!(c.parse("1 - x - x").unwrap(), c.parse("1 - 2*x").unwrap());
        assert_eq!(c.parse("x/2/2").unwrap(), c.parse("x/4").unwrap());
    }

    #[test]
    fn phase_shifts() {
        let c = chart();
        assert_eq!(c.parse("sin(theta + pi/2)").unwrap(), c.parse("cos(theta)").unwrap());
        assert_eq!(c.parse("cos(theta + pi)").unwrap(), c.parse("-cos(theta)").unwrap());
        assert_eq!(c.parse("sin(-theta)").unwrap(), c.parse("-sin(theta)").unwrap());
        assert_eq!(c.parse("cos(-theta - 3*pi/2)").unwrap(), c.parse("sin(theta)").unwrap());
        assert_eq!(c.parse("sin(2*pi)").unwrap(), ScalarFn::zero(2));
    }

    #[test]
    fn rejects_noncanonical_input() {
        let c = chart();
        assert!(matches!(c.parse("sin(x + 1)"), Err(Error::NonCanonicalizable(_))));
        assert!(matches!(c.parse("sin(x^2)"), Err(Error::NonCanonicalizable(_))));
        assert!(matches!(c.parse("exp(sin(x))"), Err(Error::NonCanonicalizable(_))));
        assert!(matches!(c.parse("sin(theta + pi/3)"), Err(Error::NonCanonicalizable(_))));
        assert!(matches!(c.parse("pi*x"), Err(Error::NonCanonicalizable(_))));
        assert!(matches!(c.parse("1/x"), Err(Error::NotAUnit(_))));
        assert!(matches!(c.parse("x^-1"), Err(Error::NotAUnit(_))));
        assert_eq!(c.parse("y"), Err(Error::UnknownCoordinate("y".into())));
        assert!(matches!(c.parse("x +"), Err(Error::Parse { .. })));
        assert!(matches!(c.parse("(x"), Err(Error::Parse { .. })));
        assert!(matches!(c.parse("x $ 2"), Err(Error::Parse { column: 3, .. })));
    }

    #[test]
    fn unit_division() {
        let c = chart();
        assert_eq!(c.parse("x/exp(x)").unwrap(), c.parse("x*exp(-x)").unwrap());
        assert_eq!(c.parse("exp(x)^-2").unwrap(), c.parse("exp(-2*x)").unwrap());
    }
}
