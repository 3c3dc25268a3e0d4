//! Text form: `c * x1^a1 * x2^a2 + …` with rational coefficients `p/q`.
//!
//! Multiplication is always explicit (`*`); juxtaposition is rejected.

use std::cmp::Reverse;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{MultiIndex, SimplexPolynomial};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

impl<S: Scalar> SimplexPolynomial<S> {
    /// Parses the text form over variables `x1..x{n_vars}`.
    pub fn parse(text: &str, n_vars: usize) -> Result<Self> {
        let mut parser = Parser {
            src: text.as_bytes(),
            pos: 0,
            n_vars,
        };
        let terms = parser.polynomial()?;
        let mut p = Self::zero(n_vars);
        for (alpha, c) in terms {
            p.add_term(alpha, S::from_rational(&c));
        }
        Ok(p)
    }

    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut terms: Vec<(&MultiIndex, &S)> = self.terms().collect();
        terms.sort_by_key(|(a, _)| (Reverse(a.order()), Reverse(a.to_dense(self.n_vars()))));
        let mut out = String::new();
        for (i, (alpha, c)) in terms.into_iter().enumerate() {
            let negative = c.is_negative();
            if i == 0 {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            let mag = c.abs();
            let mut factors: Vec<String> = Vec::new();
            if alpha.is_zero() || !mag.is_one() {
                factors.push(mag.to_text());
            }
            for (slot, e) in alpha.iter() {
                if e == 1 {
                    factors.push(format!("x{}", slot + 1));
                } else {
                    factors.push(format!("x{}^{e}", slot + 1));
                }
            }
            out.push_str(&factors.join(" * "));
        }
        out
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n_vars: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn polynomial(&mut self) -> Result<Vec<(MultiIndex, BigRational)>> {
        let mut terms = Vec::new();
        let mut sign = BigRational::one();
        match self.peek() {
            None => return self.err("empty polynomial"),
            Some(b'-') => {
                sign = -sign;
                self.pos += 1;
            }
            Some(b'+') => self.pos += 1,
            _ => {}
        }
        loop {
            let (alpha, c) = self.term()?;
            terms.push((alpha, c * sign.clone()));
            match self.peek() {
                None => break,
                Some(b'+') => {
                    self.pos += 1;
                    sign = BigRational::one();
                }
                Some(b'-') => {
                    self.pos += 1;
                    sign = -BigRational::one();
                }
                Some(_) => return self.err("expected '+', '-', '*' or end of input"),
            }
            // a sign directly after the operator, e.g. "x1 + -2"
            if let Some(b'-') = self.peek() {
                self.pos += 1;
                sign = -sign;
            }
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<(MultiIndex, BigRational)> {
        let mut alpha = MultiIndex::zero();
        let mut coeff = BigRational::one();
        loop {
            match self.peek() {
                Some(b'x') => {
                    let (slot, e) = self.variable()?;
                    alpha = alpha.product(&MultiIndex::unit(slot).with_exponent(slot, e));
                }
                Some(c) if c.is_ascii_digit() || c == b'.' => coeff *= self.number()?,
                Some(_) => return self.err("expected a number or variable"),
                None => return self.err("unexpected end of input"),
            }
            match self.peek() {
                Some(b'*') => self.pos += 1,
                Some(b'x') | Some(b'0'..=b'9') | Some(b'.') => {
                    return self.err("implicit multiplication is not allowed; use '*'")
                }
                _ => break,
            }
        }
        Ok((alpha, coeff))
    }

    fn digits(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap()
    }

    fn uint(&mut self) -> Result<u32> {
        let d = self.digits().to_string();
        if d.is_empty() {
            return self.err("expected an unsigned integer");
        }
        d.parse().or_else(|_| self.err("integer too large"))
    }

    fn variable(&mut self) -> Result<(usize, u32)> {
        self.pos += 1; // 'x'
        let index = self.uint()? as usize;
        if index == 0 || index > self.n_vars {
            return self.err(format!("variable x{index} outside x1..x{}", self.n_vars));
        }
        let mut e = 1;
        if let Some(b'^') = self.peek() {
            self.pos += 1;
            self.skip_ws();
            e = self.uint()?;
        }
        Ok((index - 1, e))
    }

    fn number(&mut self) -> Result<BigRational> {
        let start = self.pos;
        self.digits();
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            self.digits();
        }
        let mut end = self.pos;
        self.skip_ws();
        if self.src.get(self.pos) == Some(&b'/') {
            self.pos += 1;
            self.skip_ws();
            let den_start = self.pos;
            self.digits();
            if self.pos == den_start {
                return self.err("expected a denominator");
            }
            end = self.pos;
        } else {
            self.pos = end;
        }
        let text: String = std::str::from_utf8(&self.src[start..end])
            .unwrap()
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect();
        match crate::scalar::parse_rational(&text) {
            Ok(v) if !v.is_zero() || text.chars().any(|c| c.is_ascii_digit()) => Ok(v),
            _ => {
                self.pos = start;
                self.err(format!("invalid number {text:?}"))
            }
        }
    }
}
