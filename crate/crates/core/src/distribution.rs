//! Repetition-degree distributions.
//!
//! A distribution is the coefficient list of the polynomial
//! `λ(x) = Σ_l λ_l x^l`: entry `l` is the probability that a user transmits
//! `l` copies of its packet in a frame. The text form used on the command line
//! is the polynomial itself, e.g. `0.25x2+0.6x3+0.15x8` or
//! `0.25 x^2 + 0.6 x^3 + 0.15 x^8`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

/// Allowed deviation of the coefficient sum from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl DegreeDistribution {
    /// Builds a distribution from probabilities indexed by degree.
    ///
    /// Trailing zero entries are dropped so that the last entry is the
    /// maximum degree.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Domain(format!("probability {bad} is negative or not finite")));
        }
        while probs.last() == Some(&0.0) {
            probs.pop();
        }
        let sum: f64 = probs.iter().sum();
        if probs.is_empty() || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Normalization { sum });
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { probs, cdf })
    }

    /// The distribution that puts all mass on one degree.
    pub fn degenerate(degree: usize) -> Self {
        let mut probs = vec![0.0; degree + 1];
        probs[degree] = 1.0;
        Self::new(probs).expect("degenerate distribution is valid")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut probs: Vec<f64> = Vec::new();
        for (coeff, degree) in parse_terms(text)? {
            if probs.len() <= degree {
                probs.resize(degree + 1, 0.0);
            }
            probs[degree] += coeff;
        }
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of degree `l`, zero beyond the maximum degree.
    pub fn prob(&self, degree: usize) -> f64 {
        self.probs.get(degree).copied().unwrap_or(0.0)
    }

    /// Maximum degree `q`.
    pub fn max_degree(&self) -> usize {
        self.probs.len() - 1
    }

    /// Degrees carrying strictly positive mass, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(l, _)| l)
    }

    /// Mean degree `λ'(1)`.
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(l, p)| l as f64 * p).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("non-empty");
        let u: f64 = rng.random::<f64>() * total;
        // Rounding can leave u at or above the last partial sum; the final
        // entry is always positive so it is the right fallback.
        self.cdf
            .iter()
            .position(|c| u < *c)
            .unwrap_or(self.probs.len() - 1)
    }

    /// Canonical text form: ascending degree, 12 significant digits, no caret.
    pub fn render(&self) -> String {
        let terms: Vec<String> = self
            .probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(l, p)| {
                let c = format_significant(*p, 12);
                if l == 0 {
                    c
                } else {
                    format!("{c}x{l}")
                }
            })
            .collect();
        terms.join("+")
    }
}

impl fmt::Display for DegreeDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl FromStr for DegreeDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Formats `value` with at most `digits` significant digits in positional
/// notation, trailing zeros removed.
fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let exponent = value.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - exponent).max(0) as usize;
    let mut s = format!("{value:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    at: usize,
    text: &'a str,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).map(|(_, c)| *c)
    }

    fn position(&self) -> usize {
        self.chars
            .get(self.at)
            .map(|(p, _)| *p)
            .unwrap_or(self.text.len())
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            position: self.position(),
            message: message.into(),
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            out.push(c);
            self.at += 1;
        }
        out
    }
}

fn parse_terms(text: &str) -> Result<Vec<(f64, usize)>> {
    let mut cursor = Cursor {
        chars: text
            .char_indices()
            .filter(|(_, c)| !c.is_whitespace())
            .collect(),
        at: 0,
        text,
    };
    let mut terms = Vec::new();
    loop {
        terms.push(parse_term(&mut cursor)?);
        match cursor.peek() {
            None => return Ok(terms),
            Some('+') => cursor.at += 1,
            Some(c) => return Err(cursor.error(format!("unexpected '{c}'"))),
        }
    }
}

fn parse_term(cursor: &mut Cursor<'_>) -> Result<(f64, usize)> {
    let start = cursor.position();
    let negative = cursor.peek() == Some('-');
    if negative {
        cursor.at += 1;
    }
    let digits = cursor.take_while(|c| c.is_ascii_digit() || c == '.');
    let coeff = if digits.is_empty() {
        if negative {
            return Err(Error::Domain(format!("negative coefficient at position {start}")));
        }
        1.0
    } else {
        let value: f64 = digits.parse().map_err(|_| Error::Parse {
            position: start,
            message: format!("bad coefficient '{digits}'"),
        })?;
        if negative && value > 0.0 {
            return Err(Error::Domain(format!(
                "negative coefficient -{digits} at position {start}"
            )));
        }
        value
    };
    let degree = match cursor.peek() {
        Some('x') | Some('X') => {
            cursor.at += 1;
            if cursor.peek() == Some('^') {
                cursor.at += 1;
                if !cursor.peek().is_some_and(|c| c.is_ascii_digit()) {
                    return Err(cursor.error("expected degree after '^'"));
                }
            }
            let deg_pos = cursor.position();
            let deg = cursor.take_while(|c| c.is_ascii_digit());
            if deg.is_empty() {
                1
            } else {
                deg.parse().map_err(|_| Error::Parse {
                    position: deg_pos,
                    message: format!("bad degree '{deg}'"),
                })?
            }
        }
        _ if digits.is_empty() => return Err(cursor.error("expected a coefficient or 'x'")),
        _ => 0,
    };
    Ok((coeff, degree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_the_liva_distribution() {
        let d = DegreeDistribution::parse("0.25x2+0.6x3+0.15x8").unwrap();
        assert_eq!(d.max_degree(), 8);
        assert_eq!(d.prob(2), 0.25);
        assert_eq!(d.prob(3), 0.6);
        assert_eq!(d.prob(8), 0.15);
        assert_eq!(d.prob(4), 0.0);
    }

    #[test]
    fn accepts_caret_and_whitespace() {
        let a = DegreeDistribution::parse("0.25 x^2 + 0.6 x^3 + 0.15 x^8").unwrap();
        let b = DegreeDistribution::parse("0.25x2+0.6x3+0.15x8").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn default_coefficient_and_degree() {
        let d = DegreeDistribution::parse("x3").unwrap();
        assert_eq!(d.probs(), &[0.0, 0.0, 0.0, 1.0]);
        let d = DegreeDistribution::parse("0.5x+0.5x^2").unwrap();
        assert_eq!(d.probs(), &[0.0, 0.5, 0.5]);
        let d = DegreeDistribution::parse("0.5 + 0.5x").unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn repeated_degrees_accumulate() {
        let d = DegreeDistribution::parse("0.5x2+0.5x2").unwrap();
        assert_eq!(d.probs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_unnormalized() {
        match DegreeDistribution::parse("0.5x1+0.6x2") {
            Err(Error::Normalization { sum }) => assert!((sum - 1.1).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_negative_coefficient() {
        assert!(matches!(
            DegreeDistribution::parse("-0.5x1+1.5x2"),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            DegreeDistribution::new(vec![0.5, -0.5, 1.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn reports_parse_position() {
        match DegreeDistribution::parse("0.5x1+0.5y2") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 9),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            DegreeDistribution::parse("0.5x1++0.5x2"),
            Err(Error::Parse { position: 6, .. })
        ));
        assert!(matches!(DegreeDistribution::parse(""), Err(Error::Parse { .. })));
        assert!(matches!(
            DegreeDistribution::parse("1x^"),
            Err(Error::Parse { position: 3, .. })
        ));
        assert!(matches!(
            DegreeDistribution::parse("0.5.5x1"),
            Err(Error::Parse { position: 0, .. })
        ));
    }

    #[test]
    fn renders_canonically() {
        let d = DegreeDistribution::parse("0.15 x^8 + 0.6x^3 + 0.25x^2").unwrap();
        assert_eq!(d.render(), "0.25x2+0.6x3+0.15x8");
        assert_eq!(DegreeDistribution::parse("x3").unwrap().render(), "1x3");
        assert_eq!(DegreeDistribution::parse("0.5+0.5x").unwrap().render(), "0.5+0.5x1");
    }

    #[test]
    fn degenerate_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = DegreeDistribution::parse("x3").unwrap();
        assert!((0..1000).all(|_| d.sample(&mut rng) == 3));
        let d = DegreeDistribution::new(vec![1.0]).unwrap();
        assert!((0..1000).all(|_| d.sample(&mut rng) == 0));
    }

    #[test]
    fn sampling_frequency_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = DegreeDistribution::parse("0.5x+0.5x^2").unwrap();
        let draws = 1_000_000;
        let ones = (0..draws).filter(|_| d.sample(&mut rng) == 1).count();
        let freq = ones as f64 / draws as f64;
        assert!((freq - 0.5).abs() < 0.002, "frequency {freq}");
    }
}
