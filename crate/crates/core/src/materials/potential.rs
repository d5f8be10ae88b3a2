//! Flory-Huggins bulk potential with quadratic cutoff, its convex-concave
//! splitting, and the quadratic wall potential.

use crate::error::{Error, Result};

/// Lower end of the bisection bracket for the minimizer search.
const MINIMA_EPS: f64 = 1e-9;
const MINIMA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloryHugginsParams {
    pub chi: f64,
    pub n1: f64,
    pub n2: f64,
    /// Cutoff position; `None` selects the lower minimizer.
    pub alpha: Option<f64>,
}

impl FloryHugginsParams {
    pub fn new(chi: f64, n1: f64, n2: f64) -> Self {
        FloryHugginsParams {
            chi,
            n1,
            n2,
            alpha: None,
        }
    }

    /// Critical interaction parameter for equal chain lengths, `2/N`.
    pub fn chi_crit(&self) -> f64 {
        0.5 * (1.0 / self.n1.sqrt() + 1.0 / self.n2.sqrt()).powi(2)
    }

    fn validate(&self) -> Result<()> {
        if !(self.n1 > 0.0 && self.n1.is_finite()) {
            return Err(Error::config("N1", "chain length must be positive"));
        }
        if !(self.n2 > 0.0 && self.n2.is_finite()) {
            return Err(Error::config("N2", "chain length must be positive"));
        }
        if !(self.chi >= 0.0 && self.chi.is_finite()) {
            return Err(Error::config(
                "chi",
                "interaction parameter must be finite and nonnegative (concave part chi*phi*(1-phi))",
            ));
        }
        Ok(())
    }
}

/// Uncut Flory-Huggins density and its first two derivatives on `(0, 1)`.
pub fn fh_raw(phi: f64, p: &FloryHugginsParams) -> (f64, f64, f64) {
    let q = 1.0 - phi;
    let f = phi * phi.ln() / p.n1 + q * q.ln() / p.n2 + p.chi * phi * q;
    let df = (phi.ln() + 1.0) / p.n1 - (q.ln() + 1.0) / p.n2 + p.chi * (1.0 - 2.0 * phi);
    let d2f = 1.0 / (p.n1 * phi) + 1.0 / (p.n2 * q) - 2.0 * p.chi;
    (f, df, d2f)
}

/// Minimizers `(phi_lower, phi_upper)` of the Flory-Huggins density on `[0, 1]`.
/// Requires equal chain lengths, which makes the density symmetric about 1/2.
pub fn fh_minima(p: &FloryHugginsParams) -> Result<(f64, f64)> {
    p.validate()?;
    if p.n1 != p.n2 {
        return Err(Error::config(
            "N2",
            "minimizer search assumes N1 = N2 (symmetric potential)",
        ));
    }
    if fh_raw(0.5, p).2 >= 0.0 {
        return Ok((0.5, 0.5));
    }
    // f' increases up to the spinodal point and decreases to f'(1/2) = 0
    // beyond it, so it is positive there and the lower root is bracketed.
    let spinodal = 0.5 * (1.0 - (1.0 - 2.0 / (p.chi * p.n1)).sqrt());
    let (mut lo, mut hi) = (MINIMA_EPS, spinodal);
    let d = |x: f64| fh_raw(x, p).1;
    if d(lo) > 0.0 || d(hi) < 0.0 {
        return Err(Error::Numerical(format!(
            "minimizer bracket [{lo}, {hi}] does not contain a sign change"
        )));
    }
    for _ in 0..200 {
        if hi - lo <= MINIMA_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if d(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo > MINIMA_TOL {
        return Err(Error::Numerical("minimizer bisection did not converge".into()));
    }
    let lower = 0.5 * (lo + hi);
    Ok((lower, 1.0 - lower))
}

/// Values of the cut-off bulk potential and its split parts at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValues {
    pub f: f64,
    pub df: f64,
    pub d2f: f64,
    pub vex_d1: f64,
    pub vex_d2: f64,
    pub cav_d1: f64,
    pub cav_d2: f64,
}

/// Taylor data of the uncut density at a junction point.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Junction {
    at: f64,
    f: f64,
    df: f64,
    d2f: f64,
}

impl Junction {
    fn eval(&self, phi: f64) -> (f64, f64, f64) {
        let d = phi - self.at;
        (
            self.f + self.df * d + 0.5 * self.d2f * d * d,
            self.df + self.d2f * d,
            self.d2f,
        )
    }
}

/// Globally C² bulk potential: Flory-Huggins on `[alpha, 1 - alpha]` and the
/// second-order Taylor polynomials at the junctions outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkPotential {
    pub params: FloryHugginsParams,
    pub alpha: f64,
    pub minima: (f64, f64),
    left: Junction,
    right: Junction,
}

impl BulkPotential {
    pub fn new(params: FloryHugginsParams) -> Result<Self> {
        let minima = fh_minima(&params)?;
        let alpha = params.alpha.unwrap_or(minima.0);
        if !(alpha > 0.0 && alpha <= minima.0) {
            return Err(Error::config(
                "alpha",
                format!("cutoff must lie in (0, {}], got {alpha}", minima.0),
            ));
        }
        let junction = |at: f64| {
            let (f, df, d2f) = fh_raw(at, &params);
            Junction { at, f, df, d2f }
        };
        Ok(BulkPotential {
            params,
            alpha,
            minima,
            left: junction(alpha),
            right: junction(1.0 - alpha),
        })
    }

    /// `(f, f', f'')` of the cut-off potential.
    pub fn f(&self, phi: f64) -> (f64, f64, f64) {
        if phi < self.alpha {
            self.left.eval(phi)
        } else if phi > 1.0 - self.alpha {
            self.right.eval(phi)
        } else {
            fh_raw(phi, &self.params)
        }
    }

    /// Density only.
    pub fn energy(&self, phi: f64) -> f64 {
        self.f(phi).0
    }

    pub fn eval(&self, phi: f64) -> PotentialValues {
        let (f, df, d2f) = self.f(phi);
        let chi = self.params.chi;
        let cav_d1 = chi * (1.0 - 2.0 * phi);
        let cav_d2 = -2.0 * chi;
        PotentialValues {
            f,
            df,
            d2f,
            vex_d1: df - cav_d1,
            vex_d2: d2f - cav_d2,
            cav_d1,
            cav_d2,
        }
    }
}

/// Quadratic wall potential centred at the lower bulk minimizer. Entirely
/// convex, so the split is `(g, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallPotential {
    pub center: f64,
    pub offset: f64,
    pub curvature: f64,
}

impl WallPotential {
    pub fn from_bulk(bulk: &BulkPotential) -> Self {
        let center = bulk.minima.0;
        let (f, _, d2f) = bulk.f(center);
        WallPotential {
            center,
            offset: f,
            curvature: d2f,
        }
    }

    /// `(g, g', g'')`.
    pub fn eval(&self, phi: f64) -> (f64, f64, f64) {
        let d = phi - self.center;
        (
            self.offset + 0.5 * self.curvature * d * d,
            self.curvature * d,
            self.curvature,
        )
    }

    pub fn energy(&self, phi: f64) -> f64 {
        self.eval(phi).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn separating() -> FloryHugginsParams {
        FloryHugginsParams::new(3f64.ln() / 6.0, 15.0, 15.0)
    }

    #[test]
    fn minima_examples() {
        let (a, b) = fh_minima(&separating()).unwrap();
        assert!((a - 0.1).abs() < 1e-11, "{a}");
        assert!((b - 0.9).abs() < 1e-11);
        let mixing = FloryHugginsParams::new(2.0 / 15.0 - 0.001, 15.0, 15.0);
        assert_eq!(fh_minima(&mixing).unwrap(), (0.5, 0.5));
        assert_eq!(fh_minima(&FloryHugginsParams::new(0.0, 15.0, 15.0)).unwrap(), (0.5, 0.5));
        assert!((separating().chi_crit() - 2.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(fh_minima(&FloryHugginsParams::new(-0.1, 15.0, 15.0)).is_err());
        assert!(fh_minima(&FloryHugginsParams::new(0.1, 0.0, 15.0)).is_err());
        assert!(fh_minima(&FloryHugginsParams::new(0.1, 10.0, 15.0)).is_err());
        let mut p = separating();
        p.alpha = Some(0.2);
        assert!(BulkPotential::new(p).is_err());
        p.alpha = Some(0.05);
        assert!(BulkPotential::new(p).is_ok());
    }

    #[test]
    fn value_at_half_and_vanishing_slopes() {
        let bulk = BulkPotential::new(separating()).unwrap();
        let expected = 0.5f64.ln() / 15.0 + 3f64.ln() / 24.0;
        assert!((bulk.energy(0.5) - expected).abs() < 1e-15);
        assert!((expected + 4.34e-4).abs() < 1e-6);
        assert!(bulk.f(0.1).1.abs() < 1e-10);
        assert!(bulk.f(0.9).1.abs() < 1e-10);
    }

    #[test]
    fn wall_potential_examples() {
        let bulk = BulkPotential::new(separating()).unwrap();
        let g = WallPotential::from_bulk(&bulk);
        let chi = 3f64.ln() / 6.0;
        let oracle = (1.0 / 0.1 + 1.0 / 0.9) / 15.0 - 2.0 * chi;
        assert!((g.curvature - oracle).abs() < 1e-9);
        assert!((oracle - 0.374537).abs() < 1e-6);
        let star = bulk.minima.0;
        assert_eq!(g.eval(star).0, bulk.energy(star));
        assert_eq!(g.eval(star).1, 0.0);
        assert!((g.energy(star + 1.0) - g.energy(star) - 0.5 * g.curvature).abs() < 1e-14);
    }

    #[test]
    fn c2_junctions() {
        for (chi, alpha) in [(3f64.ln() / 6.0, None), (3f64.ln() / 6.0, Some(0.03)), (0.1, None)] {
            let mut p = FloryHugginsParams::new(chi, 15.0, 15.0);
            p.alpha = alpha;
            let bulk = BulkPotential::new(p).unwrap();
            for at in [bulk.alpha, 1.0 - bulk.alpha] {
                let central = fh_raw(at, &p);
                let ext = if at < 0.5 { bulk.left.eval(at) } else { bulk.right.eval(at) };
                assert!((central.0 - ext.0).abs() < 1e-10);
                assert!((central.1 - ext.1).abs() < 1e-10);
                assert!((central.2 - ext.2).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn splitting_signs_on_grid() {
        for chi in [0.0, 0.1, 3f64.ln() / 6.0, 0.3] {
            let bulk = BulkPotential::new(FloryHugginsParams::new(chi, 15.0, 15.0)).unwrap();
            for i in 0..1000 {
                let phi = -1.0 + 3.0 * i as f64 / 999.0;
                let v = bulk.eval(phi);
                assert!(v.vex_d2 >= 0.0, "chi {chi} phi {phi}: {}", v.vex_d2);
                assert!(v.cav_d2 <= 0.0);
            }
        }
    }

    #[test]
    fn symmetric_about_half() {
        let bulk = BulkPotential::new(separating()).unwrap();
        for i in 0..=100 {
            let phi = i as f64 / 100.0;
            assert!((bulk.energy(phi) - bulk.energy(1.0 - phi)).abs() < 1e-14);
        }
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-3)
    }

    proptest! {
        #[test]
        fn split_sums_to_total(phi in -1.0f64..2.0, chi in 0.0f64..0.4) {
            let bulk = BulkPotential::new(FloryHugginsParams::new(chi, 15.0, 15.0)).unwrap();
            let v = bulk.eval(phi);
            prop_assert!((v.vex_d1 + v.cav_d1 - v.df).abs() < 1e-14);
            prop_assert!((v.vex_d2 + v.cav_d2 - v.d2f).abs() < 1e-14);
        }

        #[test]
        fn derivatives_match_finite_differences(phi in -0.5f64..1.5, chi in 0.0f64..0.3) {
            let bulk = BulkPotential::new(FloryHugginsParams::new(chi, 15.0, 15.0)).unwrap();
            let wall = WallPotential::from_bulk(&bulk);
            let h = 1e-5;
            // Stay away from the junctions where f'' jumps only in higher derivatives.
            let (f, df, d2f) = bulk.f(phi);
            let fd1 = (bulk.energy(phi + h) - bulk.energy(phi - h)) / (2.0 * h);
            let fd2 = (bulk.f(phi + h).1 - bulk.f(phi - h).1) / (2.0 * h);
            prop_assert!(f.is_finite());
            prop_assert!(rel_close(df, fd1, 1e-6), "f' {df} vs {fd1}");
            prop_assert!(rel_close(d2f, fd2, 1e-6) || (phi - bulk.alpha).abs() < 2.0 * h
                || (phi - 1.0 + bulk.alpha).abs() < 2.0 * h, "f'' {d2f} vs {fd2}");
            let (_, dg, d2g) = wall.eval(phi);
            let gd1 = (wall.energy(phi + h) - wall.energy(phi - h)) / (2.0 * h);
            let gd2 = (wall.eval(phi + h).1 - wall.eval(phi - h).1) / (2.0 * h);
            prop_assert!(rel_close(dg, gd1, 1e-6));
            prop_assert!(rel_close(d2g, gd2, 1e-6));
        }
    }
}
