use super::*;
use crate::materials::{FloryHugginsParams, MaterialModel, ViscosityModel};
use crate::mesh::{build_channel_mesh, MeshConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn materials(chi: f64) -> MaterialModel {
    MaterialModel::new(FloryHugginsParams::new(chi, 15.0, 15.0), ViscosityModel::default()).unwrap()
}

fn separating() -> MaterialModel {
    materials(3f64.ln() / 6.0)
}

fn disc(nx: usize, ny: usize, lx: f64, ly: f64) -> Discretization {
    Discretization::new(build_channel_mesh(MeshConfig::new(nx, ny, lx, ly)).unwrap()).unwrap()
}

fn params(force: [f64; 2]) -> StepParams {
    StepParams {
        dt: 0.01,
        gamma: 0.001,
        s: 0.1,
        force,
    }
}

fn constant_state(d: &Discretization, phi: f64) -> SystemState {
    let mut s = SystemState::zeros(&d.layout);
    s.phi.iter_mut().for_each(|v| *v = phi);
    s
}

fn random_state(d: &Discretization, rng: &mut ChaCha8Rng) -> SystemState {
    let mut s = SystemState::zeros(&d.layout);
    s.phi.iter_mut().for_each(|v| *v = rng.gen_range(0.05..0.95));
    s.mu.iter_mut().for_each(|v| *v = rng.gen_range(-0.1..0.1));
    s.ux.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
    s.uy.iter_mut().for_each(|v| *v = rng.gen_range(-0.5..0.5));
    s.p.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    s.r = rng.gen_range(-0.1..0.1);
    s
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn layout_offsets() {
    let d = disc(2, 2, 1.0, 1.0);
    let l = d.layout;
    assert_eq!((l.nq, l.nv), (6, 12));
    assert_eq!(l.len(), 3 * 6 + 2 * 12 + 1);
    assert_eq!(l.r(), l.len() - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let s = random_state(&d, &mut rng);
    assert_eq!(SystemState::from_vector(&l, &s.to_vector()).unwrap(), s);
    assert!(SystemState::from_vector(&l, &[0.0; 3]).is_err());
    assert!(d.pattern().is_structurally_symmetric());
}

#[test]
fn stationary_state_is_a_root() {
    let d = disc(6, 3, 2.0, 1.0);
    let m = separating();
    let star = m.bulk.minima.0;
    let s = constant_state(&d, star);
    let ctx = StepContext::new(&d, &m, params([0.0, 0.0]), &s, AssemblyMode::Sequential).unwrap();
    let res = ctx.residual(&s).unwrap();
    let max = res.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    assert!(max <= 1e-12, "residual {max:e}");
}

#[test]
fn phase_equation_against_constants() {
    let d = disc(5, 4, 2.0, 1.0);
    let m = separating();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let prev = random_state(&d, &mut rng);
    let it = random_state(&d, &mut rng);
    let ctx = StepContext::new(&d, &m, params([0.01, 0.0]), &prev, AssemblyMode::Sequential).unwrap();
    let res = ctx.residual(&it).unwrap();
    let l = d.layout;
    let total: f64 = res[l.phi()..l.phi() + l.nq].iter().sum();
    let dm: f64 = d
        .q_integrals
        .iter()
        .zip(it.phi.iter().zip(&prev.phi))
        .map(|(w, (a, b))| w * (a - b))
        .sum();
    assert!((total - dm / 0.01).abs() < 1e-11 * (1.0 + dm.abs() / 0.01));
}

#[test]
fn mean_value_row() {
    let d = disc(4, 3, 3.0, 1.0);
    let m = separating();
    let prev = constant_state(&d, 0.5);
    let mut it = prev.clone();
    it.p.iter_mut().for_each(|v| *v = 0.7);
    let ctx = StepContext::new(&d, &m, params([0.0, 0.0]), &prev, AssemblyMode::Sequential).unwrap();
    let res = ctx.residual(&it).unwrap();
    assert!((res[d.layout.r()] - 0.7 * 3.0).abs() < 1e-13);
    let jac = ctx.jacobian(&it).unwrap();
    let (cols, vals) = jac.row(d.layout.r());
    for (&c, &v) in cols.iter().zip(vals) {
        if v != 0.0 {
            assert!(c >= d.layout.p() && c < d.layout.r(), "column {c}");
        }
    }
}

/// Directional derivative check with central differences.
fn fd_check(d: &Discretization, m: &MaterialModel, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prev = random_state(d, &mut rng);
    let it = random_state(d, &mut rng);
    let ctx = StepContext::new(d, m, params([0.01, 0.002]), &prev, AssemblyMode::Sequential).unwrap();
    let x = it.to_vector();
    let dir: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let eps = 1e-6 * norm(&x) / norm(&dir);
    let plus: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + eps * b).collect();
    let minus: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a - eps * b).collect();
    let rp = ctx.residual_vec(&plus).unwrap();
    let rm = ctx.residual_vec(&minus).unwrap();
    let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
    let jv = ctx.jacobian_vec(&x).unwrap().matvec(&dir);
    let diff: Vec<f64> = fd.iter().zip(&jv).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(&jv)
}

#[test]
fn jacobian_matches_finite_differences() {
    let d = disc(4, 3, 2.0, 1.0);
    let m = separating();
    for seed in 0..5 {
        let rel = fd_check(&d, &m, seed);
        assert!(rel < 1e-6, "seed {seed}: relative error {rel:e}");
    }
}

#[test]
fn stationary_velocity_block_is_mass_plus_viscous() {
    let d = disc(4, 3, 2.0, 1.0);
    let m = separating();
    let s = constant_state(&d, 0.5);
    let ctx = StepContext::new(&d, &m, params([0.0, 0.0]), &s, AssemblyMode::Sequential).unwrap();
    let jac = ctx.jacobian(&s).unwrap();
    let l = d.layout;
    let range = l.ux()..l.p();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let v: Vec<f64> = range.clone().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut full = vec![0.0; l.len()];
        full[range.clone()].copy_from_slice(&v);
        let jv = jac.matvec(&full);
        let quad: f64 = v.iter().zip(&jv[range.clone()]).map(|(a, b)| a * b).sum();
        let mass = d.mass_v.bilinear(&v[..l.nv], &v[..l.nv]) + d.mass_v.bilinear(&v[l.nv..], &v[l.nv..]);
        assert!(quad > mass / 0.01 * (1.0 - 1e-12), "{quad} vs mass {mass}");
    }
    for i in range.clone() {
        for j in range.clone() {
            assert!((jac.get(i, j) - jac.get(j, i)).abs() < 1e-12);
        }
    }
}

#[test]
fn convection_is_skew() {
    // With u^n = 0 the velocity residual tested with u^{n+1} is
    // lambda^2 (mass + viscous) + lambda^3 (convection) under scaling.
    let d = disc(4, 4, 2.0, 1.0);
    let m = separating();
    let prev = constant_state(&d, 0.4);
    let ctx = StepContext::new(&d, &m, params([0.0, 0.0]), &prev, AssemblyMode::Sequential).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut it = prev.clone();
    it.ux.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    it.uy.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    let l = d.layout;
    let q = |lambda: f64| {
        let mut s = it.clone();
        s.ux.iter_mut().chain(s.uy.iter_mut()).for_each(|v| *v *= lambda);
        let res = ctx.residual(&s).unwrap();
        let x = s.to_vector();
        (l.ux()..l.p()).map(|i| res[i] * x[i]).sum::<f64>()
    };
    let (q1, q2) = (q(1.0), q(2.0));
    let cubic = (q2 - 4.0 * q1) / 4.0;
    assert!(cubic.abs() < 1e-12 * q1.abs(), "convection contributes {cubic:e} (quadratic part {q1:e})");
}

#[test]
fn divergence_diagnostics() {
    let d = disc(5, 4, 2.0, 1.0);
    let zero = constant_state(&d, 0.5);
    let diag = d.diagnostics(&zero).unwrap();
    assert_eq!((diag.mean_div, diag.proj_div, diag.pressure_mean, diag.r), (0.0, 0.0, 0.0, 0.0));
    assert!((diag.mass - 0.5 * 2.0).abs() < 1e-14);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..3 {
        let s = random_state(&d, &mut rng);
        let diag = d.diagnostics(&s).unwrap();
        assert!(diag.mean_div < 1e-14, "{}", diag.mean_div);
        assert!(diag.proj_div > 0.0);
    }
}

#[test]
fn energy_examples() {
    // Domain [0, 1] x [0, 3]: area 3, wall length 2.
    let d = disc(3, 9, 1.0, 3.0);
    let m = separating();
    let star = m.bulk.minima.0;
    let e = d.energy(&constant_state(&d, star), &m, 0.001, 0.1).unwrap();
    let expected = 5.0 * m.bulk.energy(star);
    assert!((e - expected).abs() < 1e-13, "{e} vs {expected}");
    let half = constant_state(&d, 0.5);
    let e_half = d.energy(&half, &m, 0.001, 0.1).unwrap();
    let f_half = 0.5f64.ln() / 15.0 + 3f64.ln() / 24.0;
    assert!((e_half - (3.0 * f_half + 2.0 * m.wall.energy(0.5))).abs() < 1e-13);
    // Scale a random velocity to unit... ||u||^2 = 2.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut moving = half.clone();
    moving.ux.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
    let n2 = d.mass_v.bilinear(&moving.ux, &moving.ux);
    let scale = (2.0 / n2).sqrt();
    moving.ux.iter_mut().for_each(|v| *v *= scale);
    let e_moving = d.energy(&moving, &m, 0.001, 0.1).unwrap();
    assert!((e_moving - e_half - 1.0).abs() < 1e-12);
}

#[test]
fn parallel_matches_sequential() {
    let d = disc(6, 4, 3.0, 1.0);
    let m = separating();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let prev = random_state(&d, &mut rng);
    let it = random_state(&d, &mut rng);
    let seq = StepContext::new(&d, &m, params([0.01, 0.0]), &prev, AssemblyMode::Sequential).unwrap();
    let par = StepContext::new(&d, &m, params([0.01, 0.0]), &prev, AssemblyMode::Parallel).unwrap();
    assert_eq!(seq.residual(&it).unwrap(), par.residual(&it).unwrap());
    assert_eq!(seq.jacobian(&it).unwrap().values, par.jacobian(&it).unwrap().values);
}

#[test]
fn rejects_bad_inputs() {
    let d = disc(2, 2, 1.0, 1.0);
    let m = separating();
    let s = constant_state(&d, 0.5);
    let mut bad = params([0.0, 0.0]);
    bad.dt = 0.0;
    assert!(StepContext::new(&d, &m, bad, &s, AssemblyMode::Sequential).is_err());
    let ctx = StepContext::new(&d, &m, params([0.0, 0.0]), &s, AssemblyMode::Sequential).unwrap();
    assert!(matches!(ctx.residual_vec(&[0.0; 4]), Err(Error::Contract(_))));
    let mut short = s.clone();
    short.phi.pop();
    assert!(ctx.residual(&short).is_err());
}
