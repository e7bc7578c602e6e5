//! Metric units as maps from base-unit symbol to integer exponent.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A unit of measurement. The empty map is dimensionless.
///
/// Percent is dimensionless with a display hint; it never carries base units.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Unit {
    dims: BTreeMap<String, i32>,
    percent: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnitParseError {
    #[error("empty unit expression")]
    Empty,
    #[error("invalid unit symbol `{0}`")]
    InvalidSymbol(String),
    #[error("invalid exponent in `{0}`")]
    InvalidExponent(String),
}

impl Unit {
    pub fn dimensionless() -> Self {
        Unit::default()
    }

    pub fn percent() -> Self {
        Unit {
            dims: BTreeMap::new(),
            percent: true,
        }
    }

    pub fn base(symbol: &str) -> Self {
        Unit::from_exponents([(symbol, 1)])
    }

    pub fn from_exponents<'a>(pairs: impl IntoIterator<Item = (&'a str, i32)>) -> Self {
        let mut dims = BTreeMap::new();
        for (sym, exp) in pairs {
            *dims.entry(sym.to_string()).or_insert(0) += exp;
        }
        dims.retain(|_, e| *e != 0);
        Unit {
            dims,
            percent: false,
        }
    }

    pub fn exponents(&self) -> &BTreeMap<String, i32> {
        &self.dims
    }

    pub fn is_percent(&self) -> bool {
        self.percent
    }

    pub fn is_dimensionless(&self) -> bool {
        self.dims.is_empty()
    }

    /// Same dimensions, ignoring the percent display hint.
    pub fn same_dimension(&self, other: &Unit) -> bool {
        self.dims == other.dims
    }

    pub fn mul(&self, other: &Unit) -> Unit {
        self.combine(other, 1)
    }

    pub fn div(&self, other: &Unit) -> Unit {
        self.combine(other, -1)
    }

    fn combine(&self, other: &Unit, sign: i32) -> Unit {
        let mut dims = self.dims.clone();
        for (sym, exp) in &other.dims {
            *dims.entry(sym.clone()).or_insert(0) += sign * exp;
        }
        dims.retain(|_, e| *e != 0);
        Unit {
            dims,
            percent: false,
        }
    }
}

fn valid_symbol(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| !c.is_whitespace() && !matches!(c, '*' | '/' | '^' | '"' | '\\' | '%'))
        && s != "1"
}

fn parse_factor(term: &str) -> Result<(String, i32), UnitParseError> {
    let term = term.trim();
    let (sym, exp) = match term.split_once('^') {
        Some((s, e)) => {
            let exp: i32 = e
                .trim()
                .parse()
                .map_err(|_| UnitParseError::InvalidExponent(term.to_string()))?;
            (s.trim(), exp)
        }
        None => (term, 1),
    };
    if !valid_symbol(sym) {
        return Err(UnitParseError::InvalidSymbol(sym.to_string()));
    }
    Ok((sym.to_string(), exp))
}

impl FromStr for Unit {
    type Err = UnitParseError;

    /// Accepts `%`, `1`, and products/quotients such as `$/piece` or `h*FTE^-1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(UnitParseError::Empty);
        }
        if s == "%" {
            return Ok(Unit::percent());
        }
        if s == "1" {
            return Ok(Unit::dimensionless());
        }
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n, Some(d)),
            None => (s, None),
        };
        let mut pairs = Vec::new();
        let num = num.trim();
        if num != "1" {
            for term in num.split('*') {
                pairs.push(parse_factor(term)?);
            }
        }
        if let Some(den) = den {
            for term in den.split('*') {
                let (sym, exp) = parse_factor(term)?;
                pairs.push((sym, -exp));
            }
        }
        Ok(Unit::from_exponents(
            pairs.iter().map(|(s, e)| (s.as_str(), *e)),
        ))
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.percent {
            return f.write_str("%");
        }
        if self.dims.is_empty() {
            return f.write_str("1");
        }
        let render = |items: Vec<(&String, i32)>| -> String {
            items
                .into_iter()
                .map(|(s, e)| if e == 1 { s.clone() } else { format!("{s}^{e}") })
                .collect::<Vec<_>>()
                .join("*")
        };
        let pos: Vec<_> = self.dims.iter().filter(|(_, e)| **e > 0).map(|(s, e)| (s, *e)).collect();
        let neg: Vec<_> = self.dims.iter().filter(|(_, e)| **e < 0).map(|(s, e)| (s, -*e)).collect();
        let num = if pos.is_empty() { "1".to_string() } else { render(pos) };
        if neg.is_empty() {
            f.write_str(&num)
        } else {
            write!(f, "{num}/{}", render(neg))
        }
    }
}
