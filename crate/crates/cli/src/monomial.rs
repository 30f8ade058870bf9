//! Parser for cubic polynomials written as sums of monomials, e.g.
//! `x1^3 - 3 x1*x2^2 + 0.5x1x2x3`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("column {column}: {message}")]
pub struct ParseError {
    /// 1-based character column.
    pub column: usize,
    pub message: String,
}

/// A parsed cubic: `n` is the largest variable index, `entries` hold
/// third derivatives `∂³h/∂x^a∂x^b∂x^c` with 0-based sorted indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCubic {
    pub n: usize,
    pub entries: Vec<(usize, usize, usize, f64)>,
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
}

impl Cursor {
    fn new(src: &str) -> Self {
        Self { chars: src.chars().collect(), pos: 0 }
    }
    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }
    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }
    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { column: self.pos + 1, message: message.into() }
    }
    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit() || *c == '.') {
            self.pos += 1;
        }
        // exponent, but not the start of a variable name
        if matches!(self.chars.get(self.pos), Some('e' | 'E'))
            && self.chars.get(self.pos + 1).is_some_and(|c| c.is_ascii_digit() || *c == '-' || *c == '+')
        {
            self.pos += 2;
            while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| ParseError { column: start + 1, message: format!("bad number '{s}'") })
    }
    fn integer(&mut self) -> Result<usize, ParseError> {
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| ParseError { column: start + 1, message: "expected an integer".into() })
    }
}

/// Parses `h` into normalised third-derivative coefficients. Repeated
/// monomials are summed.
pub fn parse_cubic(src: &str) -> Result<ParsedCubic, ParseError> {
    let mut cur = Cursor::new(src);
    let mut terms: Vec<([usize; 3], f64)> = Vec::new();
    let mut first = true;
    loop {
        let mut sign = 1.0;
        match cur.peek() {
            None if first => return Err(cur.err("empty polynomial")),
            None => break,
            Some('+') => cur.pos += 1,
            Some('-') => {
                sign = -1.0;
                cur.pos += 1;
            }
            Some(_) if first => {}
            Some(ch) => return Err(cur.err(format!("expected '+' or '-', found '{ch}'"))),
        }
        first = false;
        cur.skip_ws();
        let term_col = cur.pos + 1;
        let mut coef = sign;
        if cur.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            coef *= cur.number()?;
            if cur.peek() == Some('*') {
                cur.pos += 1;
            }
        }
        let mut vars = Vec::new();
        while cur.peek() == Some('x') {
            cur.pos += 1;
            let idx = cur.integer()?;
            if idx == 0 {
                return Err(cur.err("variables are numbered from x1"));
            }
            let mut power = 1;
            if cur.peek() == Some('^') {
                cur.pos += 1;
                cur.skip_ws();
                power = cur.integer()?;
            }
            vars.extend(std::iter::repeat_n(idx - 1, power));
            if cur.peek() == Some('*') {
                cur.pos += 1;
                if cur.peek() != Some('x') {
                    return Err(cur.err("expected a variable after '*'"));
                }
            }
        }
        if vars.len() != 3 {
            return Err(ParseError {
                column: term_col,
                message: format!("term has degree {}, expected 3", vars.len()),
            });
        }
        if !coef.is_finite() {
            return Err(ParseError { column: term_col, message: "coefficient is not finite".into() });
        }
        vars.sort_unstable();
        let key = [vars[0], vars[1], vars[2]];
        match terms.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => *v += coef,
            None => terms.push((key, coef)),
        }
    }
    let n = terms.iter().map(|(k, _)| k[2] + 1).max().unwrap_or(0);
    terms.sort_by_key(|t| t.0);
    let entries = terms
        .into_iter()
        .map(|([a, b, c], v)| {
            let mult = if a == c {
                6.0
            } else if a == b || b == c {
                2.0
            } else {
                1.0
            };
            (a, b, c, mult * v)
        })
        .collect();
    Ok(ParsedCubic { n, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cube() {
        let p = parse_cubic("x1^3").unwrap();
        assert_eq!(p, ParsedCubic { n: 1, entries: vec![(0, 0, 0, 6.0)] });
    }

    #[test]
    fn mixed_terms() {
        let p = parse_cubic("x1^2 x2 - 0.5*x1*x2*x3 + 2x2^3").unwrap();
        assert_eq!(p.n, 3);
        assert_eq!(p.entries, vec![(0, 0, 1, 2.0), (0, 1, 2, -0.5), (1, 1, 1, 12.0)]);
    }

    #[test]
    fn repeated_monomials_add() {
        let p = parse_cubic("x2 x1 x1 + x1^2*x2").unwrap();
        assert_eq!(p.entries, vec![(0, 0, 1, 4.0)]);
    }

    #[test]
    fn scientific_coefficient() {
        let p = parse_cubic("1e-1 x1^3").unwrap();
        assert!((p.entries[0].3 - 0.6).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_columns() {
        assert_eq!(parse_cubic("x1^2").unwrap_err().column, 1);
        assert_eq!(parse_cubic("x1^3 + x0^3").unwrap_err().column, 10);
        assert_eq!(parse_cubic("x1^3 x2").unwrap_err().message, "term has degree 4, expected 3");
        assert!(parse_cubic("").is_err());
        assert!(parse_cubic("x1^3 y").is_err());
        assert!(parse_cubic("x1*^3").is_err());
    }
}
