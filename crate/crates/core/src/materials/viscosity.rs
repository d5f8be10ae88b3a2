//! Carreau-Yasuda fits and their piecewise-linear blend in the composition.

use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_FITS: &str = include_str!("../../data/viscosity_fits.txt");
pub const FORMAT_VERSION: &str = "1";
pub const CONVENTION: &str = "eta(gdot) = eta_inf + (eta0 - eta_inf) * (1 + (a2*gdot)^a3)^a1";
pub const BREAKPOINTS: [f64; 7] = [0.0, 0.2, 0.4, 0.5, 0.6, 0.8, 1.0];
pub const PREFACTOR: f64 = 1.0 / 3375.0;

#[derive(Debug, Clone, PartialEq)]
pub struct CarreauYasudaFit {
    pub label: String,
    pub eta0: f64,
    pub eta_inf: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl CarreauYasudaFit {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.eta0, self.eta_inf, self.a1, self.a2, self.a3]
            .iter()
            .all(|v| v.is_finite())
            && self.eta0 > self.eta_inf
            && self.eta_inf > 0.0
            && self.a1 < 0.0
            && self.a2 > 0.0
            && self.a3 > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::config(
                "viscosity_file",
                format!(
                    "fit {} violates eta0 > eta_inf > 0, a1 < 0, a2 > 0, a3 > 0",
                    self.label
                ),
            ))
        }
    }

    /// Viscosity at shear rate `gdot >= 0` (not checked).
    pub fn eval(&self, gdot: f64) -> f64 {
        self.eta_inf + (self.eta0 - self.eta_inf) * (1.0 + (self.a2 * gdot).powf(self.a3)).powf(self.a1)
    }
}

pub fn carreau_yasuda(fit: &CarreauYasudaFit, gdot: f64) -> Result<f64> {
    check_rate(gdot)?;
    Ok(fit.eval(gdot))
}

fn check_rate(gdot: f64) -> Result<()> {
    if gdot >= 0.0 && gdot.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("shear rate must be finite and nonnegative, got {gdot}")))
    }
}

/// Seven fits blended linearly between the composition breakpoints and
/// scaled by the box-size prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityModel {
    pub fits: Vec<CarreauYasudaFit>,
    pub breakpoints: [f64; 7],
    pub prefactor: f64,
}

impl Default for ViscosityModel {
    fn default() -> Self {
        ViscosityModel::parse(DEFAULT_FITS).expect("bundled viscosity fits are valid")
    }
}

impl ViscosityModel {
    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut convention = None;
        let mut fits = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((k, v)) = comment.split_once(':') {
                    match k.trim() {
                        "version" => version = Some(v.trim().to_string()),
                        "convention" => convention = Some(v.trim().to_string()),
                        _ => {}
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(Error::config(
                    "viscosity_file",
                    format!("line {}: expected 6 fields, found {}", lineno + 1, fields.len()),
                ));
            }
            let num = |i: usize| {
                fields[i].parse::<f64>().map_err(|_| {
                    Error::config(
                        "viscosity_file",
                        format!("line {}: cannot parse '{}'", lineno + 1, fields[i]),
                    )
                })
            };
            let fit = CarreauYasudaFit {
                label: fields[0].to_string(),
                eta0: num(1)?,
                eta_inf: num(2)?,
                a1: num(3)?,
                a2: num(4)?,
                a3: num(5)?,
            };
            fit.validate()?;
            fits.push(fit);
        }
        if version.as_deref() != Some(FORMAT_VERSION) {
            return Err(Error::config(
                "viscosity_file",
                format!("unsupported or missing version {version:?}"),
            ));
        }
        if convention.as_deref() != Some(CONVENTION) {
            return Err(Error::config(
                "viscosity_file",
                format!("file declares convention {convention:?}, expected '{CONVENTION}'"),
            ));
        }
        if fits.len() != BREAKPOINTS.len() {
            return Err(Error::config(
                "viscosity_file",
                format!("expected {} fits, found {}", BREAKPOINTS.len(), fits.len()),
            ));
        }
        Ok(ViscosityModel {
            fits,
            breakpoints: BREAKPOINTS,
            prefactor: PREFACTOR,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ViscosityModel::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# Carreau-Yasuda viscosity fits\n");
        out.push_str(&format!("# version: {FORMAT_VERSION}\n# convention: {CONVENTION}\n"));
        out.push_str("# columns: label eta0 eta_inf a1 a2 a3\n");
        for f in &self.fits {
            out.push_str(&format!(
                "{} {:?} {:?} {:?} {:?} {:?}\n",
                f.label, f.eta0, f.eta_inf, f.a1, f.a2, f.a3
            ));
        }
        out
    }

    /// Blended viscosity without argument checks; `gdot` must be nonnegative.
    pub fn eval(&self, gdot: f64, phi: f64) -> f64 {
        let b = &self.breakpoints;
        let last = b.len() - 1;
        let raw = if phi < b[0] {
            self.fits[0].eval(gdot)
        } else if phi >= b[last] {
            self.fits[last].eval(gdot)
        } else {
            let k = (0..last).rev().find(|&k| phi >= b[k]).unwrap_or(0);
            let s = (phi - b[k]) / (b[k + 1] - b[k]);
            let (lo, hi) = (self.fits[k].eval(gdot), self.fits[k + 1].eval(gdot));
            lo + s * (hi - lo)
        };
        self.prefactor * raw
    }

    pub fn viscosity(&self, gdot: f64, phi: f64) -> Result<f64> {
        check_rate(gdot)?;
        if !phi.is_finite() {
            return Err(Error::Domain(format!("composition must be finite, got {phi}")));
        }
        Ok(self.eval(gdot, phi))
    }

    /// `[min eta_inf, max eta0] * prefactor`.
    pub fn bounds(&self) -> (f64, f64) {
        let lo = self.fits.iter().map(|f| f.eta_inf).fold(f64::INFINITY, f64::min);
        let hi = self.fits.iter().map(|f| f.eta0).fold(0.0, f64::max);
        (self.prefactor * lo, self.prefactor * hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bundled_file_parses() {
        let m = ViscosityModel::default();
        assert_eq!(m.fits.len(), 7);
        assert_eq!(m.fits[1].eta0, 424.982);
        assert_eq!(m.fits[1].eval(0.0), 424.982);
        assert_eq!(m.fits[2].label, "eta_3");
        let again = ViscosityModel::parse(&m.to_text()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn rejects_bad_files() {
        let good = DEFAULT_FITS;
        assert!(ViscosityModel::parse(&good.replace("# version: 1", "# version: 2")).is_err());
        assert!(ViscosityModel::parse(&good.replace("(eta0 - eta_inf)", "(eta_inf - eta0)")).is_err());
        let six: String = good.lines().filter(|l| !l.starts_with("eta_7")).collect::<Vec<_>>().join("\n");
        assert!(ViscosityModel::parse(&six).is_err());
        assert!(ViscosityModel::parse(&good.replace("-0.6487544203489711", "0.6487544203489711")).is_err());
        assert!(ViscosityModel::parse(&good.replace("424.982", "4x4")).is_err());
    }

    #[test]
    fn limits() {
        let m = ViscosityModel::default();
        for f in &m.fits {
            assert_eq!(f.eval(0.0), f.eta0);
            assert!((f.eval(1e30) - f.eta_inf).abs() < 1e-6 * f.eta0);
        }
        assert!(carreau_yasuda(&m.fits[0], -1.0).is_err());
        assert!(m.viscosity(-1e-3, 0.5).is_err());
    }

    #[test]
    fn blend_examples() {
        let m = ViscosityModel::default();
        for gdot in [0.0, 1e-3, 0.5, 30.0] {
            let eta = |i: usize| m.fits[i].eval(gdot);
            assert_eq!(m.viscosity(gdot, -0.2).unwrap(), eta(0) / 3375.0);
            assert!((m.viscosity(gdot, 0.5).unwrap() - eta(3) / 3375.0).abs() < 1e-15);
            let mid = 0.5 * (eta(1) + eta(2)) / 3375.0;
            assert!((m.viscosity(gdot, 0.3).unwrap() - mid).abs() < 1e-14 * mid.max(1.0));
            assert_eq!(m.viscosity(gdot, 1.7).unwrap(), eta(6) / 3375.0);
        }
        // Listed-order mapping: the breakpoint phi = 0.5 uses the fourth record.
        assert!((m.viscosity(0.0, 0.5).unwrap() - 22.0876 / 3375.0).abs() < 1e-15);
    }

    #[test]
    fn continuous_at_breakpoints() {
        let m = ViscosityModel::default();
        for &b in &BREAKPOINTS {
            for gdot in [0.0, 0.1, 10.0] {
                let l = m.eval(gdot, b - 1e-12);
                let r = m.eval(gdot, b);
                assert!((l - r).abs() < 1e-9 * r, "breakpoint {b}");
            }
        }
    }

    #[test]
    fn fits_shear_thin() {
        let m = ViscosityModel::default();
        for f in &m.fits {
            let mut prev = f.eval(0.0);
            for k in 0..=80 {
                let gdot = 10f64.powf(-6.0 + 0.125 * k as f64);
                let v = f.eval(gdot);
                assert!(v <= prev, "{} not monotone at {gdot}", f.label);
                prev = v;
            }
        }
    }

    proptest! {
        #[test]
        fn bounded(gdot in 0.0f64..1e4, phi in -1.0f64..2.0) {
            let m = ViscosityModel::default();
            let (lo, hi) = m.bounds();
            let v = m.viscosity(gdot, phi).unwrap();
            prop_assert!(v >= lo * (1.0 - 1e-14) && v <= hi * (1.0 + 1e-14));
            prop_assert!(v > 0.0);
        }
    }
}
