//! Parsers for sweep arguments.
//!
//! Numeric grids accept `start:step:stop` (inclusive), comma lists and
//! single values. Integer lists additionally accept inclusive `a..b` ranges,
//! so `1..20` and `1..3,7` are valid seed sets.

use anyhow::{bail, Context, Result};

/// Parses `start:step:stop`, `a,b,c` or a single number.
pub fn parse_f64_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    let parts: Vec<&str> = text.split(':').collect();
    let values = match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (number(start)?, number(step)?, number(stop)?);
            if !(step > 0.0) || stop < start {
                bail!("grid `{text}` needs a positive step and stop >= start");
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 1_000_000 {
                bail!("grid `{text}` has {count} points");
            }
            (0..count).map(|i| start + step * i as f64).collect()
        }
        [_] => text.split(',').map(number).collect::<Result<Vec<_>>>()?,
        _ => bail!("grid `{text}` must be start:step:stop or a comma list"),
    };
    if values.is_empty() {
        bail!("empty grid");
    }
    Ok(values)
}

fn number(s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().with_context(|| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        bail!("`{s}` is not finite");
    }
    Ok(v)
}

/// Parses comma-separated integers and inclusive `a..b` ranges.
pub fn parse_u64_list(text: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for item in text.split(',').map(str::trim) {
        if let Some((a, b)) = item.split_once("..") {
            let a: u64 = a.trim().parse().with_context(|| format!("bad range start in `{item}`"))?;
            let b: u64 = b.trim().parse().with_context(|| format!("bad range end in `{item}`"))?;
            if b < a {
                bail!("range `{item}` is empty");
            }
            out.extend(a..=b);
        } else {
            out.push(item.parse().with_context(|| format!("`{item}` is not a non-negative integer"))?);
        }
    }
    if out.is_empty() {
        bail!("empty list");
    }
    Ok(out)
}

pub fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    parse_u64_list(text)?.into_iter().map(|v| usize::try_from(v).context("value out of range")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stepped_grid_includes_stop() {
        let g = parse_f64_grid("0:0.1:2").unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 0.0);
        assert!((g[20] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lists_and_scalars() {
        assert_eq!(parse_f64_grid("0,1e7, 3e9").unwrap(), vec![0.0, 1e7, 3e9]);
        assert_eq!(parse_f64_grid("0.5").unwrap(), vec![0.5]);
        assert!(parse_f64_grid("1:0:2").is_err());
        assert!(parse_f64_grid("2:1:1").is_err());
        assert!(parse_f64_grid("a,b").is_err());
    }

    #[test]
    fn seed_sets() {
        assert_eq!(parse_u64_list("7").unwrap(), vec![7]);
        assert_eq!(parse_u64_list("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_u64_list("1..2,9").unwrap(), vec![1, 2, 9]);
        assert!(parse_u64_list("3..1").is_err());
        assert!(parse_u64_list("-1").is_err());
    }
}
