//! Text form of symbols: `term ('*' term)*`, `term = name (':' arg (',' arg)*)?`,
//! `arg = number | key '=' number`.
//!
//! Names: `one`, `dplus:b`, `dminus:b`, `cone:a`, `cind`, `ck:k[,a=alpha]`,
//! `m0:bm[,k0=n]`, `mkappa:d=..,k=..,bp=..,bm=..`.

use std::fmt;

use super::{Symbol, K0};
use crate::error::{Error, Result};

fn perr<T>(pos: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { pos, msg: msg.into() })
}

struct Args<'a> {
    pos: usize,
    positional: Vec<(usize, f64)>,
    named: Vec<(usize, &'a str, f64)>,
}

impl<'a> Args<'a> {
    fn take(&mut self, key: &str, index: usize) -> Option<f64> {
        if let Some(i) = self.named.iter().position(|(_, k, _)| *k == key) {
            return Some(self.named.remove(i).2);
        }
        if index < self.positional.len() && !self.positional[index].1.is_nan() {
            let v = self.positional[index].1;
            self.positional[index].1 = f64::NAN;
            return Some(v);
        }
        None
    }

    fn need(&mut self, key: &str, index: usize) -> Result<f64> {
        match self.take(key, index) {
            Some(v) => Ok(v),
            None => perr(self.pos, format!("missing argument '{key}'")),
        }
    }

    fn int(&mut self, key: &str, index: usize, default: Option<i64>) -> Result<i64> {
        let v = match (self.take(key, index), default) {
            (Some(v), _) => v,
            (None, Some(d)) => return Ok(d),
            (None, None) => return perr(self.pos, format!("missing argument '{key}'")),
        };
        if v.fract() != 0.0 || v.abs() > 1e9 {
            return perr(self.pos, format!("argument '{key}' must be an integer"));
        }
        Ok(v as i64)
    }

    fn finish(self) -> Result<()> {
        if let Some((p, k, _)) = self.named.first() {
            return perr(*p, format!("unknown argument '{k}'"));
        }
        if let Some((p, _)) = self.positional.iter().find(|(_, v)| !v.is_nan()) {
            return perr(*p, "unexpected positional argument");
        }
        Ok(())
    }
}

fn parse_number(s: &str, pos: usize) -> Result<f64> {
    let t = s.trim();
    let v = if t.contains('/') {
        crate::exponent_calculus::parse_q(t).ok().map(crate::exponent_calculus::to_f64)
    } else {
        t.parse::<f64>().ok()
    };
    match v {
        Some(v) if v.is_finite() => Ok(v),
        _ => perr(pos, format!("invalid number '{t}'")),
    }
}

fn parse_term(src: &str, start: usize) -> Result<Symbol> {
    let lead = src.len() - src.trim_start().len();
    let body = src.trim();
    let pos = start + lead;
    if body.is_empty() {
        return perr(pos, "empty term");
    }
    let (name, rest) = match body.find(':') {
        Some(i) => (&body[..i], Some((&body[i + 1..], pos + i + 1))),
        None => (body, None),
    };
    let name = name.trim();
    let mut args = Args { pos, positional: Vec::new(), named: Vec::new() };
    if let Some((rest, mut p)) = rest {
        for a in rest.split(',') {
            let ap = p + a.len() - a.trim_start().len();
            match a.find('=') {
                Some(j) => {
                    let key = a[..j].trim();
                    if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                        return perr(ap, format!("invalid key '{key}'"));
                    }
                    args.named.push((ap, key, parse_number(&a[j + 1..], ap)?));
                }
                None => {
                    if !args.named.is_empty() {
                        return perr(ap, "positional argument after named argument");
                    }
                    args.positional.push((ap, parse_number(a, ap)?));
                }
            }
            p += a.len() + 1;
        }
    }
    let map = |r: Result<Symbol>| r.map_err(|e| Error::Parse { pos, msg: e.to_string() });
    let sym = match name {
        "one" => Symbol::One,
        "dplus" => super::d_plus_symbol(args.need("b", 0)?),
        "dminus" => super::d_minus_symbol(args.need("b", 0)?),
        "cone" => map(super::cone_symbol(args.need("a", 0)?))?,
        "cind" => Symbol::ConeIndicator,
        "ck" => {
            let k = args.int("k", 0, None)?;
            let a = args.take("a", 1).unwrap_or(0.0);
            map(super::dyadic_cone_symbol_alpha(k as i32, a))?
        }
        "m0" => {
            let bm = args.need("bm", 0)?;
            let k0 = args.int("k0", 1, Some(K0 as i64))?;
            map(super::m0_symbol(bm, k0 as i32))?
        }
        "mkappa" => {
            let d = args.int("d", 0, None)?;
            let k = args.need("k", 1)?;
            let bp = args.need("bp", 2)?;
            let bm = args.need("bm", 3)?;
            if !(2..=3).contains(&d) {
                return perr(pos, "mkappa needs d in {2, 3}");
            }
            map(super::m_kappa_symbol(d as u32, k, bp, bm))?
        }
        _ => return perr(pos, format!("unknown symbol '{name}'")),
    };
    args.finish()?;
    Ok(sym)
}

/// Parses the text form; errors carry the byte offset of the offending term or argument.
pub fn parse_symbol(src: &str) -> Result<Symbol> {
    let mut terms = Vec::new();
    let mut start = 0;
    for part in src.split('*') {
        terms.push(parse_term(part, start)?);
        start += part.len() + 1;
    }
    Ok(Symbol::product(terms))
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::One => write!(f, "one"),
            Symbol::DPlus { beta } => write!(f, "dplus:{beta:?}"),
            Symbol::DMinus { beta } => write!(f, "dminus:{beta:?}"),
            Symbol::Cone { alpha } => write!(f, "cone:{alpha:?}"),
            Symbol::ConeIndicator => write!(f, "cind"),
            Symbol::DyadicCone { k, alpha } => write!(f, "ck:k={k},a={alpha:?}"),
            Symbol::M0 { beta_minus, k0 } => write!(f, "m0:bm={beta_minus:?},k0={k0}"),
            Symbol::MKappa { d, kappa, beta_plus, beta_minus } => {
                write!(f, "mkappa:d={d},k={kappa:?},bp={beta_plus:?},bm={beta_minus:?}")
            }
            Symbol::RadonRoot { d, kappa, scale } => write!(f, "radonroot(d={d},k={kappa:?},s={scale:?})"),
            Symbol::Product(v) => {
                for (i, s) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    write!(f, "{s}")?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples_from_config_syntax() {
        assert_eq!(
            parse_symbol("dplus:0.25 * dminus:0.25").unwrap(),
            Symbol::Product(vec![Symbol::DPlus { beta: 0.25 }, Symbol::DMinus { beta: 0.25 }])
        );
        assert_eq!(parse_symbol("cone:0").unwrap(), Symbol::Cone { alpha: 0.0 });
        assert_eq!(parse_symbol("ck:5").unwrap(), Symbol::DyadicCone { k: 5, alpha: 0.0 });
        assert_eq!(
            parse_symbol("mkappa:d=2,k=-1,bp=0.25,bm=0.25").unwrap(),
            Symbol::MKappa { d: 2, kappa: -1.0, beta_plus: 0.25, beta_minus: 0.25 }
        );
        assert_eq!(parse_symbol("dminus:1/4").unwrap(), Symbol::DMinus { beta: 0.25 });
        assert_eq!(parse_symbol("m0:0.1").unwrap(), Symbol::M0 { beta_minus: 0.1, k0: K0 });
        assert_eq!(parse_symbol(" one ").unwrap(), Symbol::One);
    }

    #[test]
    fn errors_carry_position() {
        for (src, pos) in [
            ("dplus:0.25 * bogus:1", 13),
            ("cone:-1", 0),
            ("ck:2", 0),
            ("ck:4.5", 0),
            ("dplus:x", 6),
            ("dplus:", 6),
            ("dplus:1,2", 8),
            ("mkappa:d=2,k=-1,bp=0.25", 0),
            ("mkappa:d=2,k=-1,bp=0.25,bm=0.25,z=1", 32),
            ("one *", 5),
            ("dplus:inf", 6),
        ] {
            match parse_symbol(src) {
                Err(Error::Parse { pos: p, .. }) => assert_eq!(p, pos, "{src}"),
                other => panic!("{src}: {other:?}"),
            }
        }
    }

    fn leaf() -> impl Strategy<Value = Symbol> {
        let b = -2.0f64..2.0;
        prop_oneof![
            Just(Symbol::One),
            b.clone().prop_map(|beta| Symbol::DPlus { beta }),
            b.clone().prop_map(|beta| Symbol::DMinus { beta }),
            (-0.99f64..3.0).prop_map(|alpha| Symbol::Cone { alpha }),
            Just(Symbol::ConeIndicator),
            (3i32..20, b.clone()).prop_map(|(k, alpha)| Symbol::DyadicCone { k, alpha }),
            (b.clone(), 1i32..8).prop_map(|(beta_minus, k0)| Symbol::M0 { beta_minus, k0 }),
            (2u32..=3, -1.0f64..=0.0, b.clone(), b).prop_map(|(d, kappa, beta_plus, beta_minus)| Symbol::MKappa {
                d,
                kappa,
                beta_plus,
                beta_minus
            }),
        ]
    }

    proptest! {
        #[test]
        fn display_parse_roundtrip(terms in proptest::collection::vec(leaf(), 1..4)) {
            let s = Symbol::product(terms);
            let back = parse_symbol(&s.to_string()).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn parser_never_panics(s in "\\PC{0,40}") {
            let _ = parse_symbol(&s);
        }
    }
}
