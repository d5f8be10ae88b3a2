//! Property suites over the constitutive functions and the discretization
//! building blocks. Each check reports its worst observed deviation; the CLI
//! `validate` command and the acceptance harness print them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{eoc, InjectionOperator, Norms};
use crate::assembly::Discretization;
use crate::error::Result;
use crate::materials::{fh_minima, BulkPotential, FloryHugginsParams, ViscosityModel, WallPotential};
use crate::mesh::{build_channel_mesh, build_convergence_mesh, validate_admissibility, MeshConfig};
use crate::spaces::basis::{eval_reference_basis, p2_nodes, AffineMap, ElementKind};
use crate::spaces::quadrature::{line_rule, quadrature_rule};

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst deviation found, or a count, depending on the check.
    pub detail: String,
}

impl Check {
    fn bound(name: &str, worst: f64, tol: f64) -> Self {
        Check {
            name: name.to_string(),
            passed: worst <= tol,
            detail: format!("worst {worst:.3e}, tolerance {tol:.0e}"),
        }
    }

    fn flag(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Separating (`chi = ln 3 / 6`) and mixing (`chi = 2/15 - 0.001`)
/// parameters with `N1 = N2 = 15`.
fn regimes() -> [FloryHugginsParams; 2] {
    [
        FloryHugginsParams::new(3f64.ln() / 6.0, 15.0, 15.0),
        FloryHugginsParams::new(2.0 / 15.0 - 0.001, 15.0, 15.0),
    ]
}

fn scaled(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn eoc_checks() -> Check {
    let mut worst = 0.0f64;
    let mut ok = true;
    for (a, b, expected) in [(2e-2, 1e-2, 1.0), (4.0, 1.0, 2.0), (0.3, 0.3, 0.0), (1e-3, 8e-3, -3.0)] {
        match eoc(a, b) {
            Ok(v) => worst = worst.max((v - expected).abs()),
            Err(_) => ok = false,
        }
    }
    // Orders add over consecutive refinements.
    let (a, b, c) = (0.37, 0.11, 0.023);
    match (eoc(a, b), eoc(b, c), eoc(a, c)) {
        (Ok(x), Ok(y), Ok(z)) => worst = worst.max((x + y - z).abs()),
        _ => ok = false,
    }
    ok &= [(0.0, 1.0), (1.0, -1.0), (f64::NAN, 1.0), (f64::INFINITY, 1.0)]
        .iter()
        .all(|&(a, b)| eoc(a, b).is_err());
    Check::flag(
        "eoc identities",
        ok && worst <= 1e-14,
        format!("worst {worst:.3e}, invalid inputs rejected: {ok}"),
    )
}

/// Sample points inside, across and outside the cutoff interval, away
/// from the junctions themselves.
fn potential_samples(alpha: f64) -> Vec<f64> {
    let mut s: Vec<f64> = (0..=200).map(|i| -0.3 + 1.6 * f64::from(i) / 200.0).collect();
    s.retain(|x| (x - alpha).abs() > 1e-3 && (x - (1.0 - alpha)).abs() > 1e-3);
    s
}

fn derivative_checks(bulk: &BulkPotential) -> (f64, f64) {
    let h = 1e-6;
    let chi = bulk.params.chi;
    let cav = |x: f64| chi * x * (1.0 - x);
    let wall = WallPotential::from_bulk(bulk);
    let mut worst_f = 0.0f64;
    let mut worst_g = 0.0f64;
    for x in potential_samples(bulk.alpha) {
        let v = bulk.eval(x);
        let fd1 = (bulk.energy(x + h) - bulk.energy(x - h)) / (2.0 * h);
        let fd2 = (bulk.f(x + h).1 - bulk.f(x - h).1) / (2.0 * h);
        let vex = |y: f64| bulk.energy(y) - cav(y);
        let fd_vex = (vex(x + h) - vex(x - h)) / (2.0 * h);
        let fd_cav = (cav(x + h) - cav(x - h)) / (2.0 * h);
        for (fd, an) in [(fd1, v.df), (fd2, v.d2f), (fd_vex, v.vex_d1), (fd_cav, v.cav_d1)] {
            worst_f = worst_f.max(scaled(fd, an));
        }
        let (_, g1, g2) = wall.eval(x);
        let gd1 = (wall.energy(x + h) - wall.energy(x - h)) / (2.0 * h);
        let gd2 = (wall.eval(x + h).1 - wall.eval(x - h).1) / (2.0 * h);
        worst_g = worst_g.max(scaled(gd1, g1)).max(scaled(gd2, g2));
    }
    (worst_f, worst_g)
}

/// Jump of `(f, f', f'')` between the last float before a junction and the
/// junction itself.
fn junction_jump(bulk: &BulkPotential) -> f64 {
    let mut worst = 0.0f64;
    for at in [bulk.alpha, 1.0 - bulk.alpha] {
        let before = at.next_down();
        let after = at.next_up();
        for (x, y) in [(before, at), (at, after)] {
            let (a, b) = (bulk.f(x), bulk.f(y));
            worst = worst.max(scaled(a.0, b.0)).max(scaled(a.1, b.1)).max(scaled(a.2, b.2));
        }
    }
    worst
}

fn viscosity_checks(model: &ViscosityModel) -> Vec<Check> {
    let rates: Vec<f64> = std::iter::once(0.0)
        .chain((0..=70).map(|i| 10f64.powf(-3.0 + f64::from(i) / 10.0)))
        .collect();
    let phis: Vec<f64> = (0..=300).map(|i| -1.0 + 3.0 * f64::from(i) / 300.0).collect();
    let lo = model.fits.iter().map(|f| f.eta_inf).fold(f64::INFINITY, f64::min) * model.prefactor;
    let hi = model.fits.iter().map(|f| f.eta0).fold(0.0, f64::max) * model.prefactor;
    let mut positive = true;
    let mut within = true;
    let mut jump = 0.0f64;
    for &g in &rates {
        for &phi in &phis {
            let eta = model.eval(g, phi);
            positive &= eta > 0.0;
            within &= eta >= lo * (1.0 - 1e-14) && eta <= hi * (1.0 + 1e-14);
        }
        for &b in &model.breakpoints {
            let left = model.eval(g, b.next_down());
            let right = model.eval(g, b.next_up());
            let at = model.eval(g, b);
            jump = jump.max((left - at).abs() / at).max((right - at).abs() / at);
        }
    }
    let mut monotone = true;
    for fit in &model.fits {
        for w in rates.windows(2) {
            monotone &= fit.eval(w[1]) <= fit.eval(w[0]);
        }
    }
    vec![
        Check::flag("viscosity positive", positive, format!("{} samples", rates.len() * phis.len())),
        Check::flag(
            "viscosity within fit bounds",
            within,
            format!("[{lo:.4e}, {hi:.4e}] for shear rate in [0, 1e4], phi in [-1, 2]"),
        ),
        Check::bound("viscosity continuous at breakpoints", jump, 1e-10),
        Check::flag("every fit shear-thinning", monotone, format!("{} fits", model.fits.len())),
    ]
}

/// Constitutive-function properties.
pub fn material_suite() -> Result<Vec<Check>> {
    let mut checks = vec![eoc_checks()];
    let mut worst_f = 0.0f64;
    let mut worst_g = 0.0f64;
    let mut jump = 0.0f64;
    let mut convex = true;
    let mut concave = true;
    for params in regimes() {
        let bulk = BulkPotential::new(params)?;
        let (f, g) = derivative_checks(&bulk);
        worst_f = worst_f.max(f);
        worst_g = worst_g.max(g);
        jump = jump.max(junction_jump(&bulk));
        for i in 0..1000 {
            let v = bulk.eval(-1.0 + 3.0 * f64::from(i) / 999.0);
            convex &= v.vex_d2 >= 0.0;
            concave &= v.cav_d2 <= 0.0;
        }
    }
    checks.push(Check::bound("bulk potential derivatives vs finite differences", worst_f, 1e-6));
    checks.push(Check::bound("wall potential derivatives vs finite differences", worst_g, 1e-6));
    checks.push(Check::bound("C2 junctions at alpha and 1 - alpha", jump, 1e-10));
    checks.push(Check::flag("convex part has f'' >= 0", convex, "1000 samples on [-1, 2]"));
    checks.push(Check::flag("concave part has f'' <= 0", concave, "1000 samples on [-1, 2]"));
    checks.extend(viscosity_checks(&ViscosityModel::default()));
    let (a, b) = fh_minima(&regimes()[0])?;
    checks.push(Check::bound(
        "separating minima at (0.1, 0.9)",
        (a - 0.1).abs().max((b - 0.9).abs()),
        1e-9,
    ));
    Ok(checks)
}

/// `int_T x^a y^b` over the reference triangle.
fn monomial_integral(a: u32, b: u32) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    fact(a) * fact(b) / fact(a + b + 2)
}

fn quadrature_check() -> Result<Check> {
    let mut worst = 0.0f64;
    for d in 1..=6 {
        let rule = quadrature_rule(d)?;
        for a in 0..=rule.degree as u32 {
            for b in 0..=(rule.degree as u32 - a) {
                let q = rule.integrate(|x, y| x.powi(a as i32) * y.powi(b as i32));
                worst = worst.max((q - monomial_integral(a, b)).abs());
            }
        }
        let line = line_rule(d)?;
        for k in 0..=line.degree as i32 {
            worst = worst.max((line.integrate(|s| s.powi(k)) - 1.0 / f64::from(k + 1)).abs());
        }
    }
    Ok(Check::bound("quadrature exact to declared degree", worst, 1e-13))
}

fn random_bary(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let (mut a, mut b): (f64, f64) = (rng.gen(), rng.gen());
    if a + b > 1.0 {
        a = 1.0 - a;
        b = 1.0 - b;
    }
    [1.0 - a - b, a, b]
}

fn partition_of_unity(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let bary = random_bary(rng);
        for kind in [ElementKind::P1, ElementKind::P2] {
            let e = eval_reference_basis(kind, bary);
            let n = kind.n_nodes();
            worst = worst.max((e.values[..n].iter().sum::<f64>() - 1.0).abs());
            for c in 0..2 {
                worst = worst.max(e.grads[..n].iter().map(|g| g[c]).sum::<f64>().abs());
            }
        }
    }
    Check::bound("partition of unity", worst, 1e-14)
}

/// Interpolates a linear and a quadratic polynomial at the element nodes
/// and compares values and gradients at random points.
fn polynomial_reproduction(rng: &mut ChaCha8Rng) -> Check {
    let lin = |p: [f64; 2]| (0.3 - 1.2 * p[0] + 0.7 * p[1], [-1.2, 0.7]);
    let quad = |p: [f64; 2]| {
        let (x, y) = (p[0], p[1]);
        (
            0.5 + x - 2.0 * y + 0.8 * x * x - 1.5 * x * y + 0.6 * y * y,
            [1.0 + 1.6 * x - 1.5 * y, -2.0 - 1.5 * x + 1.2 * y],
        )
    };
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let tri = [[rng.gen(), rng.gen()], [1.0 + rng.gen::<f64>(), rng.gen()], [rng.gen(), 1.0 + rng.gen::<f64>()]];
        let map = AffineMap::new(tri);
        let nodes = p2_nodes();
        for (kind, poly) in [
            (ElementKind::P1, &lin as &dyn Fn([f64; 2]) -> (f64, [f64; 2])),
            (ElementKind::P2, &quad),
        ] {
            let n = kind.n_nodes();
            let coeffs: Vec<f64> = nodes[..n].iter().map(|&b| poly(map.point(b)).0).collect();
            for _ in 0..10 {
                let bary = random_bary(rng);
                let e = eval_reference_basis(kind, bary);
                let value: f64 = (0..n).map(|i| coeffs[i] * e.values[i]).sum();
                let mut grad = [0.0; 2];
                for i in 0..n {
                    let g = map.grad(e.grads[i]);
                    grad[0] += coeffs[i] * g[0];
                    grad[1] += coeffs[i] * g[1];
                }
                let (v, g) = poly(map.point(bary));
                worst = worst.max((value - v).abs()).max((grad[0] - g[0]).abs()).max((grad[1] - g[1]).abs());
            }
        }
    }
    Check::bound("P1 and P2 polynomial reproduction", worst, 1e-12)
}

fn mesh_area_partition() -> Result<Check> {
    let mut worst = 0.0f64;
    let mut admissible = true;
    let meshes = [
        build_channel_mesh(MeshConfig::new(60, 20, 3.0, 1.0))?,
        build_channel_mesh(MeshConfig::new(180, 60, 3.0, 1.0))?,
        build_convergence_mesh(0, 1.0)?,
        build_convergence_mesh(3, 1.0)?,
    ];
    for mesh in &meshes {
        let report = validate_admissibility(mesh);
        admissible &= report.passed();
        worst = worst.max((report.total_area - mesh.domain_area()).abs() / mesh.domain_area());
    }
    Ok(Check::flag(
        "mesh area partition",
        admissible && worst <= 1e-12,
        format!("worst relative {worst:.3e}, tolerance 1e-12, all admissible: {admissible}"),
    ))
}

fn injection_norms(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst = 0.0f64;
    let discs: Vec<Discretization> = (0..3)
        .map(|k| Discretization::new(build_convergence_mesh(k, 1.0)?))
        .collect::<Result<_>>()?;
    for (coarse, fine) in [(0, 1), (1, 2), (0, 2)] {
        let (c, f) = (&discs[coarse], &discs[fine]);
        let inj = InjectionOperator::new(c, f)?;
        let (nc, nf) = (Norms::new(c), Norms::new(f));
        let q: Vec<f64> = (0..c.q.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ux: Vec<f64> = (0..c.v.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let uy: Vec<f64> = (0..c.v.n_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (iq, iux, iuy) = (inj.scalar(&q), inj.velocity(&ux), inj.velocity(&uy));
        let pairs = [
            (nc.l2_q(&q, &q), nf.l2_q(&iq, &iq)),
            (nc.h1_q(&q, &q), nf.h1_q(&iq, &iq)),
            (nc.l2_u((&ux, &uy), (&ux, &uy)), nf.l2_u((&iux, &iuy), (&iux, &iuy))),
            (nc.h1_u((&ux, &uy), (&ux, &uy)), nf.h1_u((&iux, &iuy), (&iux, &iuy))),
        ];
        for (a, b) in pairs {
            worst = worst.max((a.sqrt() - b.sqrt()).abs() / a.sqrt());
        }
    }
    Ok(Check::bound("injection preserves L2 and H1 norms", worst, 1e-12))
}

/// Quadrature, reference bases, meshes and injection between levels.
pub fn discretization_suite() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    Ok(vec![
        quadrature_check()?,
        partition_of_unity(&mut rng),
        polynomial_reproduction(&mut rng),
        mesh_area_partition()?,
        injection_norms(&mut rng)?,
    ])
}
