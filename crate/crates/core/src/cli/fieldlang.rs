//! Field expressions for the command line.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor ('*' factor)*        at most one factor may be a field
//! factor  := number | builtin | '(' expr ')'
//! builtin := normsq | normsq1 | re-q1-conj-q2 | abs | gaussian(s) | quadform(path)
//! ```
//!
//! `quadform(path)` reads a JSON array of 16 rows of 16 numbers. Names may contain
//! `-`, so write a binary minus with spaces around it: `normsq - abs`.

use std::path::Path;

use crate::calculus::field::{field, Abs, Affine, Field, Gaussian, NormSq, NormSq1, QuadForm, ReQ1ConjQ2, Sum};
use crate::error::{Error, Result};
use crate::hermitian2::RealSym16;
use crate::{Mat16, Vec16};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Arg(String),
    Plus,
    Minus,
    Star,
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            ')' => {
                out.push(Tok::Close);
                i += 1;
            }
            '(' => {
                // a builtin's argument is taken verbatim (it may be a path)
                if matches!(out.last(), Some(Tok::Ident(_))) {
                    let end = chars[i..].iter().position(|&c| c == ')').map(|p| p + i).ok_or_else(|| {
                        Error::Parse(format!("unclosed argument list in `{s}`"))
                    })?;
                    out.push(Tok::Arg(chars[i + 1..end].iter().collect::<String>().trim().to_string()));
                    i = end + 1;
                } else {
                    out.push(Tok::Open);
                    i += 1;
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || ((chars[i] == '-' || chars[i] == '+') && chars[i - 1] == 'e'))
                {
                    i += 1;
                }
                let lit: String = chars[start..i].iter().collect();
                out.push(Tok::Num(lit.parse().map_err(|_| Error::Parse(format!("bad number `{lit}`")))?));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_alphanumeric() || (chars[i] == '-' && chars.get(i + 1).is_some_and(|c| c.is_ascii_alphanumeric())))
                {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            c => return Err(Error::Parse(format!("unexpected character `{c}` in field `{s}`"))),
        }
    }
    Ok(out)
}

/// Linear combination of fields plus a constant.
#[derive(Clone, Default)]
struct Lin {
    terms: Vec<(f64, Field)>,
    constant: f64,
}

impl Lin {
    fn scale(mut self, c: f64) -> Lin {
        for t in &mut self.terms {
            t.0 *= c;
        }
        self.constant *= c;
        self
    }

    fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }
}

struct Parser<'a> {
    toks: Vec<Tok>,
    pos: usize,
    base: &'a Path,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Lin> {
        let mut acc = self.term()?;
        while let Some(t) = self.peek() {
            let sign = match t {
                Tok::Plus => 1.0,
                Tok::Minus => -1.0,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?.scale(sign);
            acc.terms.extend(rhs.terms);
            acc.constant += rhs.constant;
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Lin> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = match (acc.is_constant(), rhs.is_constant()) {
                (true, _) => rhs.scale(acc.constant),
                (false, true) => acc.scale(rhs.constant),
                (false, false) => return Err(Error::Parse("product of two fields is not supported".into())),
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Lin> {
        match self.next() {
            Some(Tok::Num(x)) => Ok(Lin { terms: vec![], constant: x }),
            Some(Tok::Minus) => Ok(self.factor()?.scale(-1.0)),
            Some(Tok::Open) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::Close) => Ok(e),
                    _ => Err(Error::Parse("missing `)`".into())),
                }
            }
            Some(Tok::Ident(name)) => {
                let arg = if let Some(Tok::Arg(_)) = self.peek() {
                    match self.next() {
                        Some(Tok::Arg(a)) => Some(a),
                        _ => unreachable!(),
                    }
                } else {
                    None
                };
                Ok(Lin { terms: vec![(1.0, builtin(&name, arg.as_deref(), self.base)?)], constant: 0.0 })
            }
            Some(t) => Err(Error::Parse(format!("unexpected token {t:?}"))),
            None => Err(Error::Parse("unexpected end of field expression".into())),
        }
    }
}

fn builtin(name: &str, arg: Option<&str>, base: &Path) -> Result<Field> {
    let no_arg = |f: Field| match arg {
        None => Ok(f),
        Some(_) => Err(Error::Parse(format!("`{name}` takes no argument"))),
    };
    match name {
        "normsq" => no_arg(field(NormSq)),
        "normsq1" => no_arg(field(NormSq1)),
        "re-q1-conj-q2" => no_arg(field(ReQ1ConjQ2)),
        "abs" => no_arg(field(Abs)),
        "gaussian" => {
            let a = arg.ok_or_else(|| Error::Parse("gaussian needs a scale: gaussian(s)".into()))?;
            let scale: f64 = a.parse().map_err(|_| Error::Parse(format!("bad gaussian scale `{a}`")))?;
            if !(scale > 0.0) {
                return Err(Error::Parse(format!("gaussian scale must be positive, got {scale}")));
            }
            Ok(field(Gaussian { scale }))
        }
        "quadform" => {
            let a = arg.ok_or_else(|| Error::Parse("quadform needs a path: quadform(file.json)".into()))?;
            Ok(field(QuadForm { b: read_matrix(&base.join(a))? }))
        }
        _ => Err(Error::Parse(format!("unknown field `{name}`"))),
    }
}

/// A symmetric 16x16 matrix stored as a JSON array of rows.
pub fn read_matrix(path: &Path) -> Result<RealSym16> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if rows.len() != 16 || rows.iter().any(|r| r.len() != 16) {
        return Err(Error::Parse(format!("{}: expected 16 rows of 16 numbers", path.display())));
    }
    RealSym16::new(Mat16::from_fn(|i, j| rows[i][j])).map_err(|e| Error::Parse(e.to_string()))
}

/// Parses a field expression; relative `quadform` paths resolve against `base`.
pub fn parse_field(src: &str, base: &Path) -> Result<Field> {
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(Error::Parse("empty field expression".into()));
    }
    let mut p = Parser { toks, pos: 0, base };
    let lin = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse(format!("trailing input in field `{src}`")));
    }
    if lin.is_constant() {
        return Err(Error::Parse(format!("`{src}` is a constant, not a field")));
    }
    let mut terms = lin.terms;
    if lin.constant != 0.0 {
        terms.push((1.0, field(Affine { a: Vec16::zeros(), c: lin.constant })));
    }
    if terms.len() == 1 && terms[0].0 == 1.0 {
        return Ok(terms.pop().unwrap().1);
    }
    Ok(field(Sum { terms }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Field> {
        parse_field(s, Path::new("."))
    }

    #[test]
    fn expressions() {
        let x = Vec16::from_fn(|i, _| 0.1 * (i as f64 + 1.0));
        let n2 = x.norm_squared();
        assert_eq!(parse("normsq").unwrap().eval(&x), n2);
        let f = parse("2*normsq + 0.5 * abs - normsq1").unwrap();
        let n1: f64 = (0..8).map(|i| x[i] * x[i]).sum();
        assert!((f.eval(&x) - (2.0 * n2 + 0.5 * x.norm() - n1)).abs() < 1e-14);
        let g = parse("3 * (gaussian(2) + normsq) * 0.5").unwrap();
        assert!((g.eval(&x) - 1.5 * ((-n2 / 8.0).exp() + n2)).abs() < 1e-14);
        assert!(parse("re-q1-conj-q2").is_ok());
        assert!(parse("normsq + 1").unwrap().eval(&Vec16::zeros()) == 1.0);
    }

    #[test]
    fn errors() {
        for bad in ["", "normsq *", "foo", "normsq * abs", "gaussian(-1)", "gaussian", "(normsq", "normsq # 2", "3"] {
            assert!(matches!(parse(bad), Err(Error::Parse(_))), "{bad}");
        }
        assert!(matches!(parse("quadform(/nonexistent.json)"), Err(Error::Parse(_))));
    }
}
