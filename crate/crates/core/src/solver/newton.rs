//! Newton iteration for the discrete nonlinear system of one time step.

use crate::error::{Error, Result};
use crate::solver::lu::{LuFactorization, LuSolver};
use crate::solver::sparse::SparseMatrix;

/// A nonlinear system `R(x) = 0` with its Jacobian.
pub trait NewtonProblem {
    fn residual(&mut self, x: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&mut self, x: &[f64]) -> Result<SparseMatrix>;
    /// Norm used for the increment stopping test.
    fn increment_norm(&self, dx: &[f64]) -> f64;
}

/// With `reuse_jacobian`, an increment larger than this fraction of the
/// previous one triggers a fresh Jacobian at the current iterate.
pub const CHORD_CONTRACTION: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Keep the last factorized Jacobian, across time steps too, and
    /// refactor only when the increments stop contracting by
    /// [`CHORD_CONTRACTION`] per iteration.
    pub reuse_jacobian: bool,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_iterations: 50,
            reuse_jacobian: false,
        }
    }
}

impl NewtonSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(Error::config("newton_abs_tol", "must be positive"));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::config("newton_rel_tol", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::config("newton_max_iterations", "must be at least 1"));
        }
        Ok(())
    }
}

/// Which stopping test accepted the iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopCriterion {
    #[default]
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonReport {
    pub iterations: usize,
    pub criterion: StopCriterion,
    /// Increment norm of every iteration.
    pub increments: Vec<f64>,
    /// Max-norm of the residual at the returned iterate.
    pub final_residual: f64,
}

impl NewtonReport {
    pub fn final_increment(&self) -> f64 {
        self.increments.last().copied().unwrap_or(0.0)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Runs Newton from `x0`. Stops when the increment norm drops below
/// `abs_tol` or below `rel_tol` times the iterate norm. With
/// `reuse_jacobian` the factorization retained in `solver` (possibly from an
/// earlier solve) is used until contraction stalls.
pub fn newton_solve<P: NewtonProblem>(
    problem: &mut P,
    x0: &[f64],
    settings: &NewtonSettings,
    solver: &mut LuSolver,
) -> Result<(Vec<f64>, NewtonReport)> {
    settings.validate()?;
    let mut x = x0.to_vec();
    let mut report = NewtonReport::default();
    let mut refactor = !settings.reuse_jacobian || solver.retained().is_none();
    for it in 1..=settings.max_iterations {
        let r = problem.residual(&x)?;
        let factor: &LuFactorization = if refactor {
            solver.factorize_retained(&problem.jacobian(&x)?)?
        } else {
            solver.retained().expect("retained factorization present")
        };
        let dx = factor.solve(&r)?;
        x.iter_mut().zip(&dx).for_each(|(x, d)| *x -= d);
        let inc = problem.increment_norm(&dx);
        refactor = !settings.reuse_jacobian
            || matches!(report.increments.last(), Some(&prev) if inc > CHORD_CONTRACTION * prev);
        report.iterations = it;
        report.increments.push(inc);
        if !inc.is_finite() {
            return Err(Error::NewtonDivergence {
                iterations: it,
                last_increment: inc,
                history: report.increments,
                iterate: x,
            });
        }
        let criterion = if inc < settings.abs_tol {
            Some(StopCriterion::Absolute)
        } else if inc < settings.rel_tol * problem.increment_norm(&x) {
            Some(StopCriterion::Relative)
        } else {
            None
        };
        if let Some(criterion) = criterion {
            report.criterion = criterion;
            report.final_residual = max_abs(&problem.residual(&x)?);
            return Ok((x, report));
        }
    }
    Err(Error::NewtonDivergence {
        iterations: settings.max_iterations,
        last_increment: report.final_increment(),
        history: report.increments,
        iterate: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// x^2 = a componentwise, plus a linear coupling.
    struct Quadratic {
        a: Vec<f64>,
    }

    impl NewtonProblem for Quadratic {
        fn residual(&mut self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(x.iter().zip(&self.a).map(|(x, a)| x * x - a).collect())
        }
        fn jacobian(&mut self, x: &[f64]) -> Result<SparseMatrix> {
            let t: Vec<_> = x.iter().enumerate().map(|(i, x)| (i, i, 2.0 * x)).collect();
            Ok(SparseMatrix::from_triplets(x.len(), x.len(), &t))
        }
        fn increment_norm(&self, dx: &[f64]) -> f64 {
            dx.iter().map(|d| d * d).sum::<f64>().sqrt()
        }
    }

    #[test]
    fn quadratic_convergence() {
        let mut p = Quadratic { a: vec![2.0, 9.0] };
        let (x, rep) = newton_solve(&mut p, &[1.0, 1.0], &NewtonSettings::default(), &mut LuSolver::new()).unwrap();
        assert!((x[0] - 2f64.sqrt()).abs() < 1e-14);
        assert!((x[1] - 3.0).abs() < 1e-14);
        assert!(rep.iterations < 10);
        // Quadratic convergence: e_{k+1} = e_k^2 / (2 x_k) with x_k > 1.
        let inc = &rep.increments;
        for k in 2..inc.len() {
            assert!(inc[k] <= inc[k - 1].powi(2) + 1e-15, "{inc:?}");
        }
    }

    #[test]
    fn fixed_point_takes_one_iteration() {
        let mut p = Quadratic { a: vec![4.0] };
        let (x, rep) = newton_solve(&mut p, &[2.0], &NewtonSettings::default(), &mut LuSolver::new()).unwrap();
        assert_eq!(x, vec![2.0]);
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.final_residual, 0.0);
        assert_eq!(rep.criterion, StopCriterion::Absolute);
    }

    #[test]
    fn zero_iterations_rejected() {
        let settings = NewtonSettings {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(settings.validate().is_err());
        let mut p = Quadratic { a: vec![4.0] };
        assert!(newton_solve(&mut p, &[2.0], &settings, &mut LuSolver::new()).is_err());
    }

    #[test]
    fn divergence_reported() {
        // No real root: iterates wander.
        let mut p = Quadratic { a: vec![-1.0] };
        let settings = NewtonSettings {
            max_iterations: 8,
            ..Default::default()
        };
        match newton_solve(&mut p, &[0.7], &settings, &mut LuSolver::new()) {
            Err(Error::NewtonDivergence { iterations, history, .. }) => {
                assert_eq!(iterations, 8);
                assert_eq!(history.len(), 8);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn chord_iteration_converges_linearly() {
        let mut p = Quadratic { a: vec![2.0] };
        let settings = NewtonSettings {
            reuse_jacobian: true,
            ..Default::default()
        };
        let (x, rep) = newton_solve(&mut p, &[1.5], &settings, &mut LuSolver::new()).unwrap();
        assert!((x[0] - 2f64.sqrt()).abs() < 1e-9);
        assert!(rep.iterations > 4);
        // Chord rate |1 - x*/x0| stays below the refactor threshold.
        for w in rep.increments.windows(2) {
            assert!(w[1] <= CHORD_CONTRACTION * w[0], "{:?}", rep.increments);
        }
    }

    #[test]
    fn retained_factorization_carries_over() {
        let settings = NewtonSettings {
            reuse_jacobian: true,
            ..Default::default()
        };
        let mut solver = LuSolver::new();
        let mut p = Quadratic { a: vec![2.0, 3.0] };
        let (x, _) = newton_solve(&mut p, &[1.5, 1.5], &settings, &mut solver).unwrap();
        assert!(solver.retained().is_some());
        // A nearby problem converges with the old factorization only.
        let mut q = Quadratic { a: vec![2.0 + 1e-6, 3.0] };
        let (y, rep) = newton_solve(&mut q, &x, &settings, &mut solver).unwrap();
        assert!((y[0] - (2.0f64 + 1e-6).sqrt()).abs() < 1e-10);
        assert!(rep.iterations <= 3, "{rep:?}");
    }
}
