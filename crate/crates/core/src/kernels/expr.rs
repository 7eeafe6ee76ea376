//! Expression grammar for custom kernels: variables `x`, `y`, `z`, the
//! imaginary unit `i`, `pi`, arithmetic with `^`, and a few functions.

use num_complex::Complex64;

use crate::error::{FlagError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Sgn,
    Conj,
    Re,
    Im,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(Complex64),
    Var(usize),
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Sym(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| FlagError::Kernel(format!("bad number '{text}'")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Sym(c));
            i += 1;
        } else {
            return Err(FlagError::Kernel(format!("unexpected character '{c}' at {i}")));
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

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Token::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| FlagError::Kernel("unexpected end of expression".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Expr::Num(Complex64::new(v, 0.0))),
            Token::Sym('(') => {
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(FlagError::Kernel("missing ')'".into()));
                }
                Ok(e)
            }
            Token::Ident(name) => {
                let func = match name.as_str() {
                    "x" => return Ok(Expr::Var(0)),
                    "y" => return Ok(Expr::Var(1)),
                    "z" => return Ok(Expr::Var(2)),
                    "i" => return Ok(Expr::Num(Complex64::new(0.0, 1.0))),
                    "pi" => return Ok(Expr::Num(Complex64::new(std::f64::consts::PI, 0.0))),
                    "abs" => Func::Abs,
                    "sqrt" => Func::Sqrt,
                    "exp" => Func::Exp,
                    "log" => Func::Log,
                    "sin" => Func::Sin,
                    "cos" => Func::Cos,
                    "sgn" => Func::Sgn,
                    "conj" => Func::Conj,
                    "re" => Func::Re,
                    "im" => Func::Im,
                    other => return Err(FlagError::Kernel(format!("unknown identifier '{other}'"))),
                };
                if !self.eat('(') {
                    return Err(FlagError::Kernel(format!("'{name}' needs an argument in parentheses")));
                }
                let arg = self.expr()?;
                if !self.eat(')') {
                    return Err(FlagError::Kernel("missing ')'".into()));
                }
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Token::Sym(c) => Err(FlagError::Kernel(format!("unexpected '{c}'"))),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser {
            tokens: tokenize(src)?,
            pos: 0,
        };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(FlagError::Kernel(format!("trailing input in '{src}'")));
        }
        Ok(e)
    }

    /// Number of coordinates the expression reads (2 or 3).
    pub fn arity(&self) -> usize {
        fn max_var(e: &Expr) -> usize {
            match e {
                Expr::Num(_) => 0,
                Expr::Var(v) => v + 1,
                Expr::Neg(a) | Expr::Call(_, a) => max_var(a),
                Expr::Bin(_, a, b) => max_var(a).max(max_var(b)),
            }
        }
        max_var(self).max(2)
    }

    pub fn eval(&self, p: &[f64]) -> Complex64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => Complex64::new(p.get(*i).copied().unwrap_or(0.0), 0.0),
            Expr::Neg(a) => -a.eval(p),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(p), b.eval(p));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                    Op::Pow if b.im == 0.0 && b.re.fract() == 0.0 && b.re.abs() < 64.0 => a.powi(b.re as i32),
                    Op::Pow if b.im == 0.0 && a.im == 0.0 && a.re >= 0.0 => Complex64::new(a.re.powf(b.re), 0.0),
                    Op::Pow => a.powc(b),
                }
            }
            Expr::Call(f, a) => {
                let a = a.eval(p);
                let real = |v: f64| Complex64::new(v, 0.0);
                match f {
                    Func::Abs => real(a.norm()),
                    Func::Sqrt => a.sqrt(),
                    Func::Exp => a.exp(),
                    Func::Log => a.ln(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sgn => real(if a.re > 0.0 {
                        1.0
                    } else if a.re < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }),
                    Func::Conj => a.conj(),
                    Func::Re => real(a.re),
                    Func::Im => real(a.im),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates() {
        let e = Expr::parse("1/(x*(x+i*y))").unwrap();
        let v = e.eval(&[2.0, 1.0]);
        let want = Complex64::new(1.0, 0.0) / (Complex64::new(2.0, 0.0) * Complex64::new(2.0, 1.0));
        assert!((v - want).norm() < 1e-15);
        assert_eq!(e.arity(), 2);
        let e = Expr::parse("-2^2 + abs(z)*1.5e1 - sgn(x)").unwrap();
        assert_eq!(e.eval(&[-1.0, 0.0, -2.0]), Complex64::new(27.0, 0.0));
        assert_eq!(e.arity(), 3);
        assert!((Expr::parse("exp(i*pi)").unwrap().eval(&[]) + 1.0).norm() < 1e-15);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "x +", "foo(x)", "(x", "x $ y", "sqrt x", "x y"] {
            assert!(matches!(Expr::parse(bad), Err(FlagError::Kernel(_))), "{bad}");
        }
    }
}
