//! Plain-text state files for restarting a run. Values are written with the
//! shortest representation that parses back to the same `f64`.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::assembly::SystemState;
use crate::error::{Error, Result};

const MAGIC: &str = "# chns state v1";

pub fn write_state<W: Write>(mut w: W, step: usize, state: &SystemState) -> std::io::Result<()> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "step {step}")?;
    writeln!(w, "r {:?}", state.r)?;
    for (name, field) in [
        ("phi", &state.phi),
        ("mu", &state.mu),
        ("ux", &state.ux),
        ("uy", &state.uy),
        ("p", &state.p),
    ] {
        writeln!(w, "{name} {}", field.len())?;
        for v in field {
            writeln!(w, "{v:?}")?;
        }
    }
    Ok(())
}

fn bad(line: usize, message: impl std::fmt::Display) -> Error {
    Error::Contract(format!("state file line {line}: {message}"))
}

struct Lines {
    lines: Vec<String>,
    pos: usize,
}

impl Lines {
    fn next(&mut self, what: &str) -> Result<(usize, &str)> {
        let l = self
            .lines
            .get(self.pos)
            .ok_or_else(|| Error::Contract(format!("state file ends before {what}")))?;
        self.pos += 1;
        Ok((self.pos, l.trim()))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, String)> {
        let (i, l) = self.next(key)?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok((i, v.trim().to_string())),
            _ => Err(bad(i, format!("expected `{key}`"))),
        }
    }
}

/// Parses a file produced by [`write_state`]; returns the step and the state.
pub fn read_state<R: BufRead>(r: R) -> Result<(usize, SystemState)> {
    let lines = r
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::Contract(format!("state file unreadable: {e}")))?;
    let mut cur = Lines { lines, pos: 0 };
    let (i, magic) = cur.next("header")?;
    if magic != MAGIC {
        return Err(bad(i, "not a state file"));
    }
    let (i, step) = cur.keyed("step")?;
    let step: usize = step.parse().map_err(|e| bad(i, e))?;
    let (i, r) = cur.keyed("r")?;
    let r: f64 = r.parse().map_err(|e| bad(i, e))?;
    let mut fields = Vec::with_capacity(5);
    for name in ["phi", "mu", "ux", "uy", "p"] {
        let (i, n) = cur.keyed(name)?;
        let n: usize = n.parse().map_err(|e| bad(i, e))?;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let (i, l) = cur.next(name)?;
            v.push(l.parse::<f64>().map_err(|e| bad(i, e))?);
        }
        fields.push(v);
    }
    let [phi, mu, ux, uy, p]: [Vec<f64>; 5] = fields.try_into().expect("five fields");
    Ok((step, SystemState { phi, mu, ux, uy, p, r }))
}

pub fn save(path: &Path, step: usize, state: &SystemState) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_state(&mut w, step, state).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(usize, SystemState)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_state(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn text_round_trip_is_exact(
            phi in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..20),
            r in -1e300f64..1e300,
            step in 0usize..1_000_000,
        ) {
            let state = SystemState {
                mu: phi.iter().map(|x| x * 0.5).collect(),
                p: phi.iter().rev().copied().collect(),
                ux: vec![1e-310, -0.0, 3.0],
                uy: vec![f64::MIN_POSITIVE, 1.0 / 3.0, -2.5e-17],
                phi,
                r,
            };
            let mut buf = Vec::new();
            write_state(&mut buf, step, &state).unwrap();
            let (s2, back) = read_state(&buf[..]).unwrap();
            prop_assert_eq!(s2, step);
            let bits = |s: &SystemState| s.to_vector().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back), bits(&state));
        }
    }

    #[test]
    fn rejects_truncated_files() {
        let state = SystemState {
            phi: vec![0.5; 3],
            mu: vec![0.0; 3],
            ux: vec![0.0; 2],
            uy: vec![0.0; 2],
            p: vec![0.0; 3],
            r: 0.0,
        };
        let mut buf = Vec::new();
        write_state(&mut buf, 4, &state).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(8).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_state(cut.as_bytes()), Err(Error::Contract(_))));
        assert!(read_state("hello\n".as_bytes()).is_err());
    }
}
