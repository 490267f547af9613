//! Text formats: family descriptors, homotopy classes, sampled `h` tables
//! and stability jump files.
//!
//! Family descriptors:
//!
//! ```text
//! linear:<n>
//! giroux:n=<slope>,eps=<amplitude>,freq=<k>[,order=<n>][,gluing=a:b:c:d]
//! giroux:file=<path>[,order=<n>][,gluing=a:b:c:d]
//! giroux:<path>
//! ```
//!
//! A sampled table starts with `offset=<real>` and continues with one
//! `z,h` pair per line. A jump file has one
//! `A,sign,tminus,tplus,Tminus,Tplus` line per jump. Blank lines and lines
//! starting with `#` are ignored in both.

use std::f64::consts::TAU;

use crate::contact::{ContactFamily, MonotoneFunction, SampledMonotone};
use crate::error::{Error, Result};
use crate::manifold::{GluingMatrix, HomotopyClass2};
use crate::stability::{DiracDeformation, Jump};

fn real(field: &str, what: &str) -> std::result::Result<f64, String> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| format!("{what}: cannot read {:?} as a number", field.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what}: {v} is not finite"))
    }
}

fn integer<T: std::str::FromStr>(field: &str, what: &str) -> std::result::Result<T, String> {
    field
        .trim()
        .parse()
        .map_err(|_| format!("{what}: cannot read {:?} as an integer", field.trim()))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// `m,l`.
pub fn parse_class(text: &str) -> Result<HomotopyClass2> {
    let bad = |m: String| Error::InvalidArgument(format!("class {text:?}: {m}"));
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(bad("expected two integers m,l".into()));
    }
    let m = integer(parts[0], "m").map_err(bad)?;
    let l = integer(parts[1], "l").map_err(bad)?;
    Ok(HomotopyClass2::new(m, l))
}

/// `a:b:c:d`, row-major.
pub fn parse_gluing(text: &str) -> Result<GluingMatrix> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(Error::InvalidGluing(format!("{text:?}: expected a:b:c:d")));
    }
    let mut e = [0i64; 4];
    for (slot, p) in e.iter_mut().zip(&parts) {
        *slot = integer(p, "gluing entry").map_err(Error::InvalidGluing)?;
    }
    GluingMatrix::new(e[0], e[1], e[2], e[3])
}

pub fn parse_sampled(text: &str) -> Result<SampledMonotone> {
    let mut lines = content_lines(text);
    let (first, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty table, expected offset=<real>"))?;
    let offset = header
        .strip_prefix("offset=")
        .ok_or_else(|| Error::parse(first, "first line must be offset=<real>"))
        .and_then(|v| real(v, "offset").map_err(|m| Error::parse(first, m)))?;
    let mut pairs = Vec::new();
    for (n, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::parse(n, "expected z,h"));
        }
        let z = real(fields[0], "z").map_err(|m| Error::parse(n, m))?;
        let h = real(fields[1], "h").map_err(|m| Error::parse(n, m))?;
        pairs.push((z, h));
    }
    SampledMonotone::new(&pairs, offset)
}

pub fn parse_jumps(text: &str) -> Result<DiracDeformation> {
    let mut jumps = Vec::new();
    for (n, line) in content_lines(text) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::parse(n, "expected A,sign,tminus,tplus,Tminus,Tplus"));
        }
        let r = |i: usize, what: &str| real(fields[i], what).map_err(|m| Error::parse(n, m));
        let sign = match fields[1].trim() {
            "1" | "+1" | "+" => 1,
            "-1" | "-" => -1,
            other => return Err(Error::parse(n, format!("sign {other:?} is not +1 or -1"))),
        };
        jumps.push(Jump {
            amplitude: r(0, "A")?,
            sign,
            t_minus: r(2, "tminus")?,
            t_plus: r(3, "tplus")?,
            window_minus: r(4, "Tminus")?,
            window_plus: r(5, "Tplus")?,
        });
    }
    DiracDeformation::new(jumps)
}

/// Parses a descriptor, reading table files through `load`.
pub fn parse_family_with<L>(desc: &str, load: L) -> Result<ContactFamily>
where
    L: Fn(&str) -> Result<String>,
{
    let bad = |m: &str| Error::InvalidFamily(format!("{desc:?}: {m}"));
    let desc = desc.trim();
    if let Some(rest) = desc.strip_prefix("linear:") {
        let n = rest.trim().parse::<u32>().map_err(|_| bad("linear:<n> needs a positive integer"))?;
        return ContactFamily::linear(n);
    }
    let rest = desc
        .strip_prefix("giroux:")
        .ok_or_else(|| bad("expected linear:<n> or giroux:..."))?;

    let mut slope = None;
    let mut eps = None;
    let mut freq = None;
    let mut order = None;
    let mut gluing = GluingMatrix::IDENTITY;
    let mut file = None;
    for (i, item) in rest.split(',').enumerate() {
        let item = item.trim();
        let Some((key, value)) = item.split_once('=') else {
            if i == 0 && !item.is_empty() {
                file = Some(item.to_string());
                continue;
            }
            return Err(bad(&format!("expected key=value, got {item:?}")));
        };
        let num = |what: &str| integer::<u32>(value, what).map_err(|m| bad(&m));
        match key.trim() {
            "n" => slope = Some(num("n")?),
            "eps" => eps = Some(real(value, "eps").map_err(|m| bad(&m))?),
            "freq" => freq = Some(num("freq")?),
            "order" => order = Some(num("order")?),
            "gluing" => gluing = parse_gluing(value)?,
            "file" => file = Some(value.trim().to_string()),
            other => return Err(bad(&format!("unknown key {other:?}"))),
        }
    }

    let h = match (file, slope) {
        (Some(_), Some(_)) => return Err(bad("give either file= or n=, not both")),
        (Some(path), None) => {
            if eps.is_some() || freq.is_some() {
                return Err(bad("eps and freq only apply to the closed form"));
            }
            MonotoneFunction::Sampled(parse_sampled(&load(&path)?)?)
        }
        (None, Some(n)) => MonotoneFunction::parametric(n, eps.unwrap_or(0.0), freq.unwrap_or(1))?,
        (None, None) => return Err(bad("missing n= or file=")),
    };
    let order = match (order, &h) {
        (Some(o), _) => o,
        (None, MonotoneFunction::Parametric { slope, .. }) => *slope,
        (None, MonotoneFunction::Sampled(s)) => {
            let turns = (s.offset() / TAU + 1e-9).floor();
            if !(1.0..=u32::MAX as f64).contains(&turns) {
                return Err(bad("table offset is below 2pi"));
            }
            turns as u32
        }
    };
    ContactFamily::giroux(h, order, gluing)
}

/// Parses a descriptor, reading table files from disk.
pub fn parse_family(desc: &str) -> Result<ContactFamily> {
    parse_family_with(desc, |path| {
        std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidFamily(format!("cannot read {path}: {e}")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(offset: f64, f: impl Fn(f64) -> f64) -> String {
        let mut s = format!("# h table\noffset={offset}\n");
        for i in 0..=32 {
            let z = TAU * i as f64 / 32.0;
            s.push_str(&format!("{z},{}\n", f(z)));
        }
        s
    }

    #[test]
    fn classes() {
        assert_eq!(parse_class("1,0").unwrap(), HomotopyClass2::new(1, 0));
        assert_eq!(parse_class(" -2 , 3 ").unwrap(), HomotopyClass2::new(-2, 3));
        for bad in ["", "1", "1,2,3", "a,b", "1.5,2"] {
            assert!(parse_class(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn linear_descriptors() {
        assert_eq!(parse_family("linear:3").unwrap(), ContactFamily::linear(3).unwrap());
        assert!(parse_family("linear:0").is_err());
        assert!(parse_family("linear:x").is_err());
        assert!(parse_family("circle:2").is_err());
    }

    #[test]
    fn parametric_descriptors() {
        let f = parse_family("giroux:n=2,eps=0.3,freq=1").unwrap();
        assert_eq!(f.order(), 2);
        assert!((f.theta(1.0) - (2.0 + 0.3 * 1f64.sin())).abs() < 1e-15);
        let eq = parse_family("giroux:n=3,eps=0.2,order=2").unwrap();
        assert!(eq.is_pinching_equality());
        let sheared = parse_family("giroux:n=1,gluing=1:1:0:1").unwrap();
        assert_eq!(sheared.gluing(), GluingMatrix::new(1, 1, 0, 1).unwrap());
        assert!(parse_family("giroux:n=2,eps=3").is_err());
        assert!(parse_family("giroux:n=2,order=5").is_err());
        assert!(parse_family("giroux:n=2,gluing=1:1:1:1").is_err());
        assert!(parse_family("giroux:n=2,colour=red").is_err());
        assert!(parse_family("giroux:").is_err());
    }

    #[test]
    fn table_descriptors() {
        let text = table(4.0 * std::f64::consts::PI, |z| 2.0 * z + 0.3 * z.sin());
        let load = |path: &str| {
            assert_eq!(path, "h.txt");
            Ok(text.clone())
        };
        let a = parse_family_with("giroux:file=h.txt", load).unwrap();
        let b = parse_family_with("giroux:h.txt,order=2", load).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.order(), 2);
        assert!((a.theta(1.0) - (2.0 + 0.3 * 1f64.sin())).abs() < 1e-3);
        assert!(parse_family_with("giroux:file=h.txt,eps=0.1", load).is_err());
        assert!(parse_family("giroux:file=/nonexistent/h.txt").is_err());
    }

    #[test]
    fn tables() {
        let t = parse_sampled(&table(TAU, |z| z)).unwrap();
        assert_eq!(t.offset(), TAU);
        assert_eq!(parse_sampled("").unwrap_err(), Error::parse(1, "empty table, expected offset=<real>"));
        assert!(matches!(parse_sampled("0,0\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(
            parse_sampled("offset=6.283185307179586\n0,0\n1;2\n"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(parse_sampled("offset=nan\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn jump_files() {
        let d = parse_jumps("# A,sign,t-,t+,T-,T+\n1,+1,0.1,0.35,0,0.5\n2,-1,0.6,0.7,0.5,1\n").unwrap();
        assert_eq!(d.jumps().len(), 2);
        assert_eq!(d.jumps()[1].sign, -1);
        assert!(matches!(parse_jumps("1,2,0.1,0.2,0,1"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_jumps("1,1,0.1,0.2,0"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_jumps("1,1,0.1,0.2,0,0.5"), Err(Error::InvalidWindow(_))));
        assert!(parse_jumps("").is_err());
    }
}
