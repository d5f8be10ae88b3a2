//! Element and wall-edge integrals.

use super::{StepContext, LOCAL, MU, P, PHI, UX, UY};
use crate::spaces::basis::BARY_GRAD;

pub(crate) type LocalMatrix = [[f64; LOCAL]; LOCAL];

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Residual contributions of triangle `t` (and its part of the `r`
/// equation); adds the local Jacobian to `jac` if requested.
#[allow(clippy::too_many_arguments)]
pub(crate) fn element(
    ctx: &StepContext<'_>,
    t: usize,
    xo: &[f64; LOCAL],
    xn: &[f64; LOCAL],
    r: f64,
    eta_q: &[f64],
    mob_q: &[f64],
    mut jac: Option<&mut LocalMatrix>,
) -> ([f64; LOCAL], f64) {
    let d = ctx.disc;
    let StepParamsView { dt, gamma, force } = StepParamsView::from(ctx);
    let bulk = &ctx.materials.bulk;
    let map = &d.maps[t];
    let jw = map.det.abs();
    let g1: [[f64; 2]; 3] = std::array::from_fn(|i| map.grad(BARY_GRAD[i]));
    let lin = |x: &[f64; LOCAL], off: usize| -> [f64; 2] {
        let mut g = [0.0; 2];
        for i in 0..3 {
            g[0] += g1[i][0] * x[off + i];
            g[1] += g1[i][1] * x[off + i];
        }
        g
    };
    let grad_phi = lin(xn, PHI);
    let grad_mu = lin(xn, MU);
    let uoff = [UX, UY];

    let mut res = [0.0; LOCAL];
    let mut r_res = 0.0;

    for (k, ((e1, e2), &w)) in d.p1.evals.iter().zip(&d.p2.evals).zip(&d.p1.rule.weights).enumerate() {
        let dx = w * jw;
        let psi = &e1.values;
        let n = &e2.values;
        let gn: [[f64; 2]; 6] = std::array::from_fn(|i| map.grad(e2.grads[i]));
        let val = |x: &[f64; LOCAL], off: usize| (0..3).map(|i| psi[i] * x[off + i]).sum::<f64>();
        let phi_n = val(xn, PHI);
        let phi_o = val(xo, PHI);
        let mu = val(xn, MU);
        let p = val(xn, P);
        let mut un = [0.0; 2];
        let mut uo = [0.0; 2];
        let mut gu = [[0.0; 2]; 2];
        for a in 0..2 {
            for i in 0..6 {
                un[a] += n[i] * xn[uoff[a] + i];
                uo[a] += n[i] * xo[uoff[a] + i];
                gu[a][0] += gn[i][0] * xn[uoff[a] + i];
                gu[a][1] += gn[i][1] * xn[uoff[a] + i];
            }
        }
        let ub = [0.5 * (un[0] + uo[0]), 0.5 * (un[1] + uo[1])];
        let phib = 0.5 * (phi_n + phi_o);
        let eta = eta_q[k];
        let mob = mob_q[k];
        let pot_n = bulk.eval(phi_n);
        let cav_o = bulk.eval(phi_o).cav_d1;
        let fprime = pot_n.vex_d1 + cav_o;
        let sym = [
            [gu[0][0], 0.5 * (gu[0][1] + gu[1][0])],
            [0.5 * (gu[0][1] + gu[1][0]), gu[1][1]],
        ];
        let div = gu[0][0] + gu[1][1];
        let dphi_dt = (phi_n - phi_o) / dt;

        for i in 0..3 {
            res[MU + i] += dx * ((mu - fprime) * psi[i] - gamma * dot(grad_phi, g1[i]));
            res[PHI + i] += dx * (dphi_dt * psi[i] - phib * dot(un, g1[i]) + mob * dot(grad_mu, g1[i]));
            res[P + i] += dx * (r + div) * psi[i];
        }
        for a in 0..2 {
            for i in 0..6 {
                let conv = -0.5 * dot(ub, gn[i]) * un[a] + 0.5 * dot(ub, gu[a]) * n[i];
                let visc = eta * dot(sym[a], gn[i]);
                res[uoff[a] + i] += dx
                    * ((un[a] - uo[a]) / dt * n[i] + conv - force[a] * n[i] + visc - p * gn[i][a]
                        + phib * grad_mu[a] * n[i]);
            }
        }
        r_res += dx * p;

        let Some(jac) = jac.as_deref_mut() else { continue };
        for i in 0..3 {
            for j in 0..3 {
                let pp = psi[i] * psi[j];
                let gg = dot(g1[i], g1[j]);
                jac[MU + i][MU + j] += dx * pp;
                jac[MU + i][PHI + j] += dx * (-gamma * gg - pot_n.vex_d2 * pp);
                jac[PHI + i][PHI + j] += dx * (pp / dt - 0.5 * psi[j] * dot(un, g1[i]));
                jac[PHI + i][MU + j] += dx * mob * gg;
            }
            for b in 0..2 {
                for j in 0..6 {
                    jac[PHI + i][uoff[b] + j] += dx * (-phib * n[j] * g1[i][b]);
                    jac[P + i][uoff[b] + j] += dx * gn[j][b] * psi[i];
                }
            }
        }
        for a in 0..2 {
            for i in 0..6 {
                let row = uoff[a] + i;
                let ubgi = dot(ub, gn[i]);
                for b in 0..2 {
                    let same = if a == b { 1.0 } else { 0.0 };
                    for j in 0..6 {
                        let da = -0.5 * (0.5 * n[j] * gn[i][b] * un[a] + same * ubgi * n[j]);
                        let db = 0.5 * (0.5 * n[j] * gu[a][b] * n[i] + same * dot(ub, gn[j]) * n[i]);
                        let mass = same * n[i] * n[j] / dt;
                        let visc = eta * 0.5 * (same * dot(gn[j], gn[i]) + gn[j][a] * gn[i][b]);
                        jac[row][uoff[b] + j] += dx * (mass + da + db + visc);
                    }
                }
                for j in 0..3 {
                    jac[row][PHI + j] += dx * 0.5 * psi[j] * grad_mu[a] * n[i];
                    jac[row][MU + j] += dx * phib * g1[j][a] * n[i];
                    jac[row][P + j] += dx * (-psi[j] * gn[i][a]);
                }
            }
        }
    }
    (res, r_res)
}

struct StepParamsView {
    dt: f64,
    gamma: f64,
    force: [f64; 2],
}

impl From<&StepContext<'_>> for StepParamsView {
    fn from(ctx: &StepContext<'_>) -> Self {
        StepParamsView {
            dt: ctx.params.dt,
            gamma: ctx.params.gamma,
            force: ctx.params.force,
        }
    }
}

/// Wall integrands at one line quadrature point of an edge.
struct TracePoint {
    weight: f64,
    psi: [f64; 2],
    dpsi: [f64; 2],
    dphi_dt: f64,
    slope: f64,
    dg: f64,
}

fn trace_points<'a>(
    ctx: &'a StepContext<'_>,
    x: &'a [f64],
    edge: &'a crate::spaces::TraceEdge,
) -> impl Iterator<Item = TracePoint> + 'a {
    let l = ctx.disc.layout;
    let prev = ctx.prev_vector();
    let (a, b) = (l.phi() + edge.dofs[0], l.phi() + edge.dofs[1]);
    let (na, nb, oa, ob) = (x[a], x[b], prev[a], prev[b]);
    let len = edge.length;
    let slope = (nb - na) / len;
    ctx.disc
        .line
        .points
        .iter()
        .zip(&ctx.disc.line.weights)
        .map(move |(&s, &w)| {
            let psi = [1.0 - s, s];
            let phi_n = psi[0] * na + psi[1] * nb;
            let phi_o = psi[0] * oa + psi[1] * ob;
            TracePoint {
                weight: w * len,
                psi,
                dpsi: [-1.0 / len, 1.0 / len],
                dphi_dt: (phi_n - phi_o) / ctx.params.dt,
                slope,
                dg: ctx.materials.wall.eval(phi_n).1,
            }
        })
}

pub(crate) fn boundary_residual(ctx: &StepContext<'_>, x: &[f64], res: &mut [f64]) {
    let l = ctx.disc.layout;
    let s = ctx.params.s;
    for edge in &ctx.disc.q.trace_edges {
        for tp in trace_points(ctx, x, edge) {
            for i in 0..2 {
                res[l.mu() + edge.dofs[i]] -=
                    tp.weight * ((tp.dphi_dt + tp.dg) * tp.psi[i] + s * tp.slope * tp.dpsi[i]);
            }
        }
    }
}

pub(crate) fn boundary_jacobian(ctx: &StepContext<'_>, x: &[f64], vals: &mut [f64], pos: &[[[u32; 2]; 2]]) {
    let s = ctx.params.s;
    let curvature = ctx.materials.wall.curvature;
    let dt = ctx.params.dt;
    for (edge, p) in ctx.disc.q.trace_edges.iter().zip(pos) {
        for tp in trace_points(ctx, x, edge) {
            for i in 0..2 {
                for j in 0..2 {
                    vals[p[i][j] as usize] -= tp.weight
                        * ((1.0 / dt + curvature) * tp.psi[i] * tp.psi[j] + s * tp.dpsi[i] * tp.dpsi[j]);
                }
            }
        }
    }
}
