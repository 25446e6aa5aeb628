use std::io::{BufRead, Write};

use super::{EnsembleSpec, Observation};
use crate::error::{Error, Result};
use crate::linalg::{RectMatrix, SymmetricMatrix};

/// Write an instance as a header line followed by one `i j value` line per
/// stored entry (upper triangle for symmetric matrices).
pub fn write_instance<W: Write>(mut out: W, spec: &EnsembleSpec, obs: &Observation) -> Result<()> {
    match obs {
        Observation::Symmetric(a) => {
            writeln!(out, "# n={} variant={}", a.dim(), spec.variant())?;
            for (i, j, v) in a.upper_triplets() {
                writeln!(out, "{i} {j} {v}")?;
            }
        }
        Observation::Rect(m) => {
            let (n1, n2) = m.shape();
            writeln!(out, "# n1={n1} n2={n2} variant={}", spec.variant())?;
            for (i, j, v) in m.triplets() {
                writeln!(out, "{i} {j} {v}")?;
            }
        }
    }
    Ok(())
}

/// Read back a file produced by [`write_instance`].
pub fn read_instance<R: BufRead>(input: R) -> Result<Observation> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("empty instance file"))??;
    let field = |key: &str| -> Option<usize> {
        header
            .split_whitespace()
            .find_map(|t| t.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
    };
    let mut triplets = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::invalid(format!("malformed entry on line {}: {line:?}", k + 2));
        let mut it = line.split_whitespace();
        let i: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        let j: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        let v: f64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
        triplets.push((i, j, v));
    }
    if let Some(n) = field("n") {
        Ok(Observation::Symmetric(
            SymmetricMatrix::from_upper_triplets(n, &triplets)?,
        ))
    } else if let (Some(n1), Some(n2)) = (field("n1"), field("n2")) {
        Ok(Observation::Rect(RectMatrix::from_triplets(
            n1, n2, triplets,
        )?))
    } else {
        Err(Error::invalid(format!("unrecognized header {header:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample, Sbm2Spec};
    use crate::rng;

    #[test]
    fn round_trip() {
        let spec = EnsembleSpec::Sbm2(Sbm2Spec::random(40, 8.0, 2.0, &mut rng::seeded(1)));
        let (obs, _) = sample(&spec, 2).unwrap();
        let mut buf = Vec::new();
        write_instance(&mut buf, &spec, &obs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# n=40 variant=sbm2\n"));
        let back = read_instance(buf.as_slice()).unwrap();
        assert_eq!(
            back.symmetric().unwrap().upper_triplets(),
            obs.symmetric().unwrap().upper_triplets()
        );
    }
}
