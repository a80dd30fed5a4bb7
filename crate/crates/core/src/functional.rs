//! Linear functionals of the counterfactual distribution and their textual form.
//!
//! The grammar is a signed sum of optionally scaled terms:
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := [number '*'] call
//! call  := ate(i, i', y) | marginal(i, y) | stratum(y1, ..., yK) | raw([c0, ...])
//! ```
//!
//! Treatment and outcome arguments are labels when the dataset defines them,
//! or 1-based integer levels.

use crate::dataset::{Labels, Variable};
use crate::dims::Dims;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctional {
    coeffs: Vec<f64>,
    label: String,
}

impl LinearFunctional {
    pub fn raw(dims: &Dims, coeffs: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if coeffs.len() != dims.strata() {
            return Err(Error::DimensionMismatch(format!(
                "functional has {} coefficients, expected M^K={}",
                coeffs.len(),
                dims.strata()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::DomainError(
                "functional coefficients must be finite".into(),
            ));
        }
        Ok(Self {
            coeffs,
            label: label.into(),
        })
    }

    /// `P'(Y(x_i) = y)`.
    pub fn marginal(dims: &Dims, i: usize, y: usize) -> Result<Self> {
        check_level(i, dims.k(), "treatment")?;
        check_level(y, dims.m(), "outcome")?;
        let coeffs = (0..dims.strata())
            .map(|s| if dims.stratum_outcome(s, i) == y { 1.0 } else { 0.0 })
            .collect();
        Ok(Self {
            coeffs,
            label: format!("marginal({i},{y})"),
        })
    }

    /// `P'(Y(x_i) = y) - P'(Y(x_i') = y)`.
    pub fn ate(dims: &Dims, i: usize, i_prime: usize, y: usize) -> Result<Self> {
        let a = Self::marginal(dims, i, y)?;
        let b = Self::marginal(dims, i_prime, y)?;
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(p, q)| p - q).collect();
        Ok(Self {
            coeffs,
            label: format!("ate({i},{i_prime},{y})"),
        })
    }

    /// Probability of a single principal stratum.
    pub fn stratum(dims: &Dims, outcomes: &[usize]) -> Result<Self> {
        let flat = dims.stratum_flat(outcomes)?;
        let mut coeffs = vec![0.0; dims.strata()];
        coeffs[flat] = 1.0;
        let parts: Vec<String> = outcomes.iter().map(|y| y.to_string()).collect();
        Ok(Self {
            coeffs,
            label: format!("stratum({})", parts.join(",")),
        })
    }

    /// Parses the textual form, resolving names through `labels`.
    pub fn parse(text: &str, dims: &Dims, labels: &Labels) -> Result<Self> {
        let mut coeffs = vec![0.0; dims.strata()];
        for (sign, term) in split_terms(text)? {
            let (scale, call) = match split_scale(&term)? {
                Some((s, rest)) => (s, rest),
                None => (1.0, term.clone()),
            };
            let f = parse_call(&call, dims, labels)?;
            for (c, v) in coeffs.iter_mut().zip(&f.coeffs) {
                *c += sign * scale * v;
            }
        }
        let label: String = text.split_whitespace().collect();
        Self::raw(dims, coeffs, label)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn evaluate(&self, counterfactual: &[f64]) -> f64 {
        self.coeffs.iter().zip(counterfactual).map(|(c, p)| c * p).sum()
    }

    /// `[min coeff, max coeff]`, which contains every value on the simplex.
    pub fn range(&self) -> (f64, f64) {
        let lo = self.coeffs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.coeffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

fn check_level(level: usize, bound: usize, what: &str) -> Result<()> {
    if level < 1 || level > bound {
        return Err(Error::DimensionMismatch(format!(
            "{what} level {level} outside 1..={bound}"
        )));
    }
    Ok(())
}

/// Splits on top-level `+`/`-` (outside parentheses and brackets).
fn split_terms(text: &str) -> Result<Vec<(f64, String)>> {
    let mut terms = Vec::new();
    let mut depth = 0i32;
    let mut sign = 1.0;
    let mut current = String::new();
    for ch in text.chars() {
        match ch {
            '(' | '[' => {
                depth += 1;
                current.push(ch);
            }
            ')' | ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(Error::Parse(format!("unbalanced brackets in {text:?}")));
                }
                current.push(ch);
            }
            '+' | '-' if depth == 0 && !ends_with_exponent(&current) => {
                let t = current.trim().to_string();
                if t.is_empty() {
                    if ch == '-' {
                        sign = -sign;
                    }
                } else {
                    terms.push((sign, t));
                    sign = if ch == '-' { -1.0 } else { 1.0 };
                }
                current.clear();
            }
            c if c.is_whitespace() => {}
            _ => current.push(ch),
        }
    }
    if depth != 0 {
        return Err(Error::Parse(format!("unbalanced brackets in {text:?}")));
    }
    let t = current.trim().to_string();
    if t.is_empty() {
        return Err(Error::Parse(format!("empty term in {text:?}")));
    }
    terms.push((sign, t));
    Ok(terms)
}

fn ends_with_exponent(s: &str) -> bool {
    // "2.5e" followed by a sign belongs to the number.
    let b = s.as_bytes();
    b.len() >= 2
        && (b[b.len() - 1] == b'e' || b[b.len() - 1] == b'E')
        && b[b.len() - 2].is_ascii_digit()
        && !s.contains('(')
}

fn split_scale(term: &str) -> Result<Option<(f64, String)>> {
    let Some(star) = term.find('*') else {
        return Ok(None);
    };
    if term[..star].contains('(') {
        return Ok(None);
    }
    let scale: f64 = term[..star]
        .parse()
        .map_err(|_| Error::Parse(format!("bad scale in {term:?}")))?;
    Ok(Some((scale, term[star + 1..].to_string())))
}

fn parse_call(call: &str, dims: &Dims, labels: &Labels) -> Result<LinearFunctional> {
    let open = call
        .find('(')
        .ok_or_else(|| Error::Parse(format!("expected a call like marginal(i,y), got {call:?}")))?;
    if !call.ends_with(')') {
        return Err(Error::Parse(format!("missing ')' in {call:?}")));
    }
    let name = call[..open].trim().to_ascii_lowercase();
    let inner = &call[open + 1..call.len() - 1];
    if name == "raw" {
        let body = inner.trim().trim_start_matches('[').trim_end_matches(']');
        let coeffs = body
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad coefficient {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        return LinearFunctional::raw(dims, coeffs, call);
    }
    let args: Vec<&str> = inner.split(',').map(str::trim).collect();
    let expect = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "{name} takes {n} arguments, got {}",
                args.len()
            )))
        }
    };
    match name.as_str() {
        "marginal" => {
            expect(2)?;
            let i = labels.resolve(dims, Variable::X, args[0])?;
            let y = labels.resolve(dims, Variable::Y, args[1])?;
            LinearFunctional::marginal(dims, i, y)
        }
        "ate" => {
            expect(3)?;
            let i = labels.resolve(dims, Variable::X, args[0])?;
            let ip = labels.resolve(dims, Variable::X, args[1])?;
            let y = labels.resolve(dims, Variable::Y, args[2])?;
            LinearFunctional::ate(dims, i, ip, y)
        }
        "stratum" => {
            expect(dims.k())?;
            let outcomes = args
                .iter()
                .map(|a| labels.resolve(dims, Variable::Y, a))
                .collect::<Result<Vec<_>>>()?;
            LinearFunctional::stratum(dims, &outcomes)
        }
        other => Err(Error::Parse(format!("unknown functional {other:?}"))),
    }
}
