//! Text grammar for algebra elements, e.g. `3/2*x^2*e1*e2 - y*e1`.
//!
//! An element is a signed sum of terms; a term is an optional rational
//! coefficient (`p` or `p/q`) followed by `*`-separated factors
//! `name` or `name^exp` (exponents may be negative on Laurent variables).
//! `print` and `parse` round-trip exactly.

use alloc::string::{String, ToString};


use num_traits::One;

use super::{Algebra, GcaElement, GcaError, Monomial, Rat};

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

#[derive(Debug, PartialEq, Eq, Clone)]
enum Tok {
    Plus,
    Minus,
    Star,
    Caret,
    Slash,
    Num(String),
    Name(String),
    End,
}

impl<'a> Lexer<'a> {
    fn new(s: &'a str) -> Self {
        Lexer { src: s.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<Tok, GcaError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(Tok::End);
        }
        let c = self.src[self.pos];
        let start = self.pos;
        match c {
            b'+' => {
                self.pos += 1;
                Ok(Tok::Plus)
            }
            b'-' => {
                self.pos += 1;
                Ok(Tok::Minus)
            }
            b'*' => {
                self.pos += 1;
                Ok(Tok::Star)
            }
            b'^' => {
                self.pos += 1;
                Ok(Tok::Caret)
            }
            b'/' => {
                self.pos += 1;
                Ok(Tok::Slash)
            }
            b'0'..=b'9' => {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                Ok(Tok::Num(core::str::from_utf8(&self.src[start..self.pos]).unwrap().into()))
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric()
                        || self.src[self.pos] == b'_'
                        || self.src[self.pos] == b'\'')
                {
                    self.pos += 1;
                }
                Ok(Tok::Name(core::str::from_utf8(&self.src[start..self.pos]).unwrap().into()))
            }
            other => Err(GcaError::Parse {
                pos: self.pos + 1,
                msg: alloc::format!("unexpected character `{}`", other as char),
            }),
        }
    }

    fn peek(&mut self) -> Result<Tok, GcaError> {
        let save = self.pos;
        let t = self.next()?;
        self.pos = save;
        Ok(t)
    }
}

fn parse_exponent(lx: &mut Lexer) -> Result<i64, GcaError> {
    let mut neg = false;
    let mut tok = lx.next()?;
    if tok == Tok::Minus {
        neg = true;
        tok = lx.next()?;
    }
    let Tok::Num(digits) = tok else {
        return Err(GcaError::Parse { pos: lx.pos, msg: "expected exponent".into() });
    };
    let n: i64 = digits
        .parse()
        .map_err(|_| GcaError::Parse { pos: lx.pos, msg: "exponent overflow".into() })?;
    Ok(if neg { -n } else { n })
}

fn big(digits: &str, lx: &Lexer) -> Result<num_bigint::BigInt, GcaError> {
    digits
        .parse()
        .map_err(|_| GcaError::Parse { pos: lx.pos, msg: "bad integer".into() })
}

/// Parse one term (after its sign was consumed): coefficient and factors.
fn parse_term(alg: &Algebra, lx: &mut Lexer) -> Result<(Monomial, Rat), GcaError> {
    let mut coeff = Rat::one();
    let mut mono = Monomial::one(alg);
    let mut saw_factor = false;

    let mut tok = lx.next()?;
    if let Tok::Num(ref digits) = tok {
        let numer = big(digits, lx)?;
        if lx.peek()? == Tok::Slash {
            lx.next()?;
            let Tok::Num(d) = lx.next()? else {
                return Err(GcaError::Parse { pos: lx.pos, msg: "expected denominator".into() });
            };
            let denom = big(&d, lx)?;
            if denom == 0.into() {
                return Err(GcaError::Parse { pos: lx.pos, msg: "zero denominator".into() });
            }
            coeff = Rat::new(numer, denom);
        } else {
            coeff = Rat::from_integer(numer);
        }
        saw_factor = true;
        if lx.peek()? != Tok::Star {
            return Ok((mono, coeff));
        }
        lx.next()?; // consume '*'
        tok = lx.next()?;
    }

    loop {
        let Tok::Name(ref name) = tok else {
            return Err(GcaError::Parse {
                pos: lx.pos,
                msg: if saw_factor { "expected factor name".into() } else { "expected term".into() },
            });
        };
        let exp = if lx.peek()? == Tok::Caret {
            lx.next()?;
            parse_exponent(lx)?
        } else {
            1
        };
        if let Some(i) = alg.var_index(name) {
            if exp < 0 && !alg.base.vars[i].invertible {
                return Err(GcaError::Parse {
                    pos: lx.pos,
                    msg: alloc::format!("negative power of non-invertible variable `{name}`"),
                });
            }
            mono.var_exps[i] += exp;
        } else if let Some(i) = alg.gen_index(name) {
            if exp < 0 {
                return Err(GcaError::Parse {
                    pos: lx.pos,
                    msg: alloc::format!("negative power of generator `{name}`"),
                });
            }
            if alg.gens[i].is_odd() && mono.gen_exps[i] as i64 + exp > 1 {
                // odd square: the term is zero; record it and keep parsing
                mono.gen_exps[i] = u32::MAX; // sentinel, cleared by caller
            } else {
                mono.gen_exps[i] += exp as u32;
            }
        } else {
            return Err(GcaError::UnknownName(name.to_string()));
        }
        if lx.peek()? != Tok::Star {
            return Ok((mono, coeff));
        }
        lx.next()?;
        tok = lx.next()?;
    }
}

pub fn parse_element(alg: &Algebra, input: &str) -> Result<GcaElement, GcaError> {
    let mut lx = Lexer::new(input);
    let mut out = GcaElement::zero();
    let mut first = true;
    loop {
        let mut tok = lx.peek()?;
        if tok == Tok::End {
            if first {
                return Err(GcaError::Parse { pos: 1, msg: "empty element".into() });
            }
            return Ok(out);
        }
        let mut sign = Rat::one();
        if tok == Tok::Plus || tok == Tok::Minus {
            lx.next()?;
            if tok == Tok::Minus {
                sign = -sign;
            }
            tok = lx.peek()?;
            if !first && (tok == Tok::Plus || tok == Tok::Minus) {
                return Err(GcaError::Parse { pos: lx.pos, msg: "doubled sign".into() });
            }
        } else if !first {
            return Err(GcaError::Parse { pos: lx.pos, msg: "expected `+` or `-`".into() });
        }
        let (mono, coeff) = parse_term(alg, &mut lx)?;
        if mono.gen_exps.contains(&u32::MAX) {
            // an odd generator was squared: the term is zero
        } else {
            out.add_term(mono, coeff * sign);
        }
        first = false;
    }
}

/// `0` prints specially and must parse back.
pub fn parse_element_or_zero(alg: &Algebra, input: &str) -> Result<GcaElement, GcaError> {
    if input.trim() == "0" {
        return Ok(GcaElement::zero());
    }
    parse_element(alg, input)
}

#[cfg(test)]
mod tests {
    use super::super::{BaseRing, GeneratorSpec};
    use super::*;

    fn alg() -> Algebra {
        Algebra::new(
            BaseRing::new(alloc::vec![
                super::super::VarSpec { name: "x".into(), invertible: false, weight: 1 },
                super::super::VarSpec { name: "z".into(), invertible: true, weight: 1 },
            ]),
            alloc::vec![GeneratorSpec::new("e1", -1, 1), GeneratorSpec::new("e2", -1, 1)],
        )
    }

    #[test]
    fn parses_spec_example() {
        let a = alg();
        let el = a.parse("3/2*x^2*e1*e2 - x*e1").unwrap();
        // canonical term order: lex on generator multidegree first
        assert_eq!(a.print(&el), "-x*e1 + 3/2*x^2*e1*e2");
        assert_eq!(a.parse(&a.print(&el)).unwrap(), el);
    }

    #[test]
    fn laurent_exponents() {
        let a = alg();
        let el = a.parse("z^-3 + 2*z^-1*e1").unwrap();
        assert_eq!(a.print(&el), "z^-3 + 2*z^-1*e1");
        let again = a.parse(&a.print(&el)).unwrap();
        assert_eq!(el, again);
    }

    #[test]
    fn odd_square_in_input_is_zero() {
        let a = alg();
        let el = a.parse("x*e1*e1 + x").unwrap();
        assert_eq!(a.print(&el), "x");
    }

    #[test]
    fn rejects_unknown_and_garbage() {
        let a = alg();
        assert!(matches!(a.parse("q + 1"), Err(GcaError::UnknownName(_))));
        assert!(matches!(a.parse("1 +"), Err(GcaError::Parse { .. })));
        assert!(matches!(a.parse("x^-2"), Err(GcaError::Parse { .. })));
    }

    #[test]
    fn zero_round_trip() {
        let a = alg();
        let el = parse_element_or_zero(&a, "0").unwrap();
        assert!(el.is_zero());
        assert_eq!(a.print(&el), "0");
    }
}
