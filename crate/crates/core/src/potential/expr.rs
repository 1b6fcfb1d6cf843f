//! A small arithmetic language for user-supplied potentials.
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := base ("^" integer)?
//! base   := number | ident | "(" expr ")" | "-" base | func "(" expr ")"
//! func   := "abs" | "exp"
//! ident  := ("x" | "y") positive-integer
//! ```
//!
//! Unary minus binds tighter than `^`, so `-x1^2` is `(-x1)^2`. Both ASCII
//! `-` and U+2212 are accepted as minus. Exponents are (optionally signed)
//! integer literals.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Reference to coordinate `x<index>` or `y<index>` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Var {
    pub axis: Axis,
    pub index: usize,
}

impl Var {
    /// Position in a point laid out as `(x1..xn, y1..yp)`.
    pub fn slot(&self, n: usize) -> usize {
        match self.axis {
            Axis::X => self.index - 1,
            Axis::Y => n + self.index - 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Func {
    Abs,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unbound variable `{name}` at position {pos}")]
    UnboundVariable { name: String, pos: usize },
    #[error("exponent at position {pos} must be an integer, found `{found}`")]
    NonIntegerExponent { pos: usize, found: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("expression evaluated to a non-finite value")]
    NonFinite,
}

/// A parsed potential expression bound to `n` x-dimensions and `p`
/// y-dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialExpr {
    pub ast: Expr,
    pub n: usize,
    pub p: usize,
}

impl PotentialExpr {
    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        let v = self.ast.eval(point, self.n)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }
}

impl fmt::Display for PotentialExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}

impl Expr {
    pub fn eval(&self, point: &[f64], n: usize) -> Result<f64, ExprError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(var) => point[var.slot(n)],
            Expr::Neg(e) => -e.eval(point, n)?,
            Expr::Bin(op, a, b) => {
                let a = a.eval(point, n)?;
                let b = b.eval(point, n)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(ExprError::DivisionByZero);
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(base, k) => {
                let b = base.eval(point, n)?;
                if b == 0.0 && *k < 0 {
                    return Err(ExprError::DivisionByZero);
                }
                b.powi(*k)
            }
            Expr::Call(func, e) => {
                let v = e.eval(point, n)?;
                match func {
                    Func::Abs => v.abs(),
                    Func::Exp => v.exp(),
                }
            }
        })
    }

    /// Every variable referenced by the tree.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

/// Fully parenthesized rendering that re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(v) => write!(
                f,
                "{}{}",
                match v.axis {
                    Axis::X => 'x',
                    Axis::Y => 'y',
                },
                v.index
            ),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                };
                write!(f, "({a} {sym} {b})")
            }
            Expr::Pow(b, k) => write!(f, "({b})^{k}"),
            Expr::Call(func, e) => {
                let name = match func {
                    Func::Abs => "abs",
                    Func::Exp => "exp",
                };
                write!(f, "{name}({e})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' => {
                out.push((Tok::Plus, pos));
                i += 1
            }
            '-' | '\u{2212}' => {
                out.push((Tok::Minus, pos));
                i += 1
            }
            '*' => {
                out.push((Tok::Star, pos));
                i += 1
            }
            '/' => {
                out.push((Tok::Slash, pos));
                i += 1
            }
            '^' => {
                out.push((Tok::Caret, pos));
                i += 1
            }
            '(' => {
                out.push((Tok::LParen, pos));
                i += 1
            }
            ')' => {
                out.push((Tok::RParen, pos));
                i += 1
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                // optional exponent part, e.g. 1.5e-3
                if i < chars.len() && matches!(chars[i].1, 'e' | 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && matches!(chars[j].1, '+' | '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        while j < chars.len() && chars[j].1.is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let s: String = chars[start..i].iter().map(|(_, c)| c).collect();
                out.push((Tok::Num(s), pos));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].1.is_ascii_alphanumeric() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().map(|(_, c)| c).collect();
                out.push((Tok::Ident(s), pos));
            }
            other => {
                return Err(ExprError::Syntax {
                    pos,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
    n: usize,
    p: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ExprError> {
        if self.peek() == Some(&tok) {
            self.at += 1;
            Ok(())
        } else {
            self.syntax(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.base()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.at += 1;
        let pos = self.pos();
        let negative = if self.peek() == Some(&Tok::Minus) {
            self.at += 1;
            true
        } else {
            false
        };
        let found = match self.toks.get(self.at) {
            Some((Tok::Num(s), _)) => s.clone(),
            Some((Tok::Ident(s), _)) => s.clone(),
            Some((Tok::LParen, _)) => "(".to_string(),
            _ => return self.syntax("expected integer exponent"),
        };
        let is_int = !found.is_empty() && found.chars().all(|c| c.is_ascii_digit());
        let k: i32 = match (is_int, found.parse::<i32>()) {
            (true, Ok(k)) => k,
            _ => return Err(ExprError::NonIntegerExponent { pos, found }),
        };
        self.at += 1;
        Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
    }

    fn base(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.toks.get(self.at).cloned() {
            Some((Tok::Num(s), _)) => {
                self.at += 1;
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(Expr::Num(v)),
                    _ => Err(ExprError::Syntax {
                        pos,
                        msg: format!("invalid number `{s}`"),
                    }),
                }
            }
            Some((Tok::Minus, _)) => {
                self.at += 1;
                Ok(Expr::Neg(Box::new(self.base()?)))
            }
            Some((Tok::LParen, _)) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some((Tok::Ident(name), _)) => {
                self.at += 1;
                let func = match name.as_str() {
                    "abs" => Some(Func::Abs),
                    "exp" => Some(Func::Exp),
                    _ => None,
                };
                if let Some(func) = func {
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let e = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Expr::Call(func, Box::new(e)));
                }
                self.variable(&name, pos).map(Expr::Var)
            }
            Some(_) => self.syntax("expected a number, variable, function or `(`"),
            None => self.syntax(format!("unexpected end of input `{}`", self.text)),
        }
    }

    fn variable(&self, name: &str, pos: usize) -> Result<Var, ExprError> {
        let unbound = || ExprError::UnboundVariable {
            name: name.to_string(),
            pos,
        };
        let mut chars = name.chars();
        let axis = match chars.next() {
            Some('x') => Axis::X,
            Some('y') => Axis::Y,
            _ => return Err(unbound()),
        };
        let digits = chars.as_str();
        if digits.is_empty()
            || !digits.chars().all(|c| c.is_ascii_digit())
            || digits.starts_with('0')
        {
            return Err(unbound());
        }
        let index: usize = digits.parse().map_err(|_| unbound())?;
        let limit = match axis {
            Axis::X => self.n,
            Axis::Y => self.p,
        };
        if index > limit {
            return Err(unbound());
        }
        Ok(Var { axis, index })
    }
}

/// Parses `text` over variables `x1..xn`, `y1..yp`.
pub fn parse_potential(text: &str, n: usize, p: usize) -> Result<PotentialExpr, ExprError> {
    if text.trim().is_empty() {
        return Err(ExprError::Syntax {
            pos: 0,
            msg: "empty expression".into(),
        });
    }
    let toks = tokenize(text)?;
    let mut parser = Parser {
        toks,
        at: 0,
        end: text.len(),
        n,
        p,
        text,
    };
    let ast = parser.expr()?;
    if parser.at != parser.toks.len() {
        return parser.syntax("unexpected trailing input");
    }
    Ok(PotentialExpr { ast, n, p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(text: &str, n: usize, p: usize, point: &[f64]) -> f64 {
        parse_potential(text, n, p).unwrap().eval(point).unwrap()
    }

    #[test]
    fn sum_of_squares() {
        assert_eq!(eval("x1^2 + 2*y1^2", 1, 1, &[1.0, 1.0]), 3.0);
        assert_eq!(eval("x1^2", 1, 0, &[0.0]), 0.0);
    }

    #[test]
    fn unbound_variable_is_named() {
        let err = parse_potential("x1 + z3", 1, 0).unwrap_err();
        assert_eq!(
            err,
            ExprError::UnboundVariable {
                name: "z3".into(),
                pos: 5
            }
        );
        assert!(matches!(
            parse_potential("y1", 1, 0),
            Err(ExprError::UnboundVariable { .. })
        ));
        assert!(matches!(
            parse_potential("x0", 1, 0),
            Err(ExprError::UnboundVariable { .. })
        ));
    }

    #[test]
    fn rejects_fractional_exponent() {
        assert!(matches!(
            parse_potential("x1^2.5", 1, 0),
            Err(ExprError::NonIntegerExponent { .. })
        ));
        assert!(matches!(
            parse_potential("x1^x1", 1, 0),
            Err(ExprError::NonIntegerExponent { .. })
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(eval("1 - 2 - 3", 1, 0, &[0.0]), -4.0);
        assert_eq!(eval("8 / 4 / 2", 1, 0, &[0.0]), 1.0);
        assert_eq!(eval("1 + 2 * 3", 1, 0, &[0.0]), 7.0);
        assert_eq!(eval("2 * x1^3", 1, 0, &[2.0]), 16.0);
        // unary minus binds to the base
        assert_eq!(eval("-x1^2", 1, 0, &[3.0]), 9.0);
        assert_eq!(eval("0 - x1^2", 1, 0, &[3.0]), -9.0);
        assert_eq!(eval("x1^-2", 1, 0, &[2.0]), 0.25);
    }

    #[test]
    fn functions_and_unicode_minus() {
        assert_eq!(eval("abs(x1 − 3)", 1, 0, &[1.0]), 2.0);
        assert!((eval("exp(x1)", 1, 0, &[1.0]) - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn division_by_zero_is_domain_error() {
        let e = parse_potential("1 / x1", 1, 0).unwrap();
        assert_eq!(e.eval(&[0.0]), Err(ExprError::DivisionByZero));
        let e = parse_potential("x1^-1", 1, 0).unwrap();
        assert_eq!(e.eval(&[0.0]), Err(ExprError::DivisionByZero));
    }

    #[test]
    fn syntax_errors_carry_position() {
        assert!(matches!(
            parse_potential("", 1, 0),
            Err(ExprError::Syntax { pos: 0, .. })
        ));
        assert!(matches!(
            parse_potential("x1 +", 1, 0),
            Err(ExprError::Syntax { pos: 4, .. })
        ));
        assert!(matches!(
            parse_potential("(x1", 1, 0),
            Err(ExprError::Syntax { .. })
        ));
        assert!(matches!(
            parse_potential("x1 x1", 1, 0),
            Err(ExprError::Syntax { pos: 3, .. })
        ));
        assert!(matches!(
            parse_potential("x1 # 2", 1, 0),
            Err(ExprError::Syntax { pos: 3, .. })
        ));
    }

    #[test]
    fn display_reparses() {
        let e = parse_potential("-x1^2 + abs(y1 - 0.5) / 3 * exp(-y1)", 1, 1).unwrap();
        let again = parse_potential(&e.to_string(), 1, 1).unwrap();
        assert_eq!(e.ast, again.ast);
    }
}
