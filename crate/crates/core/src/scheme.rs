//! The fully discrete scheme: one implicit Euler-Maruyama step solves
//!
//! ```text
//! (M + tau K) U - tau M F(U) = M u_n + L_g(u_n) dW
//! ```
//!
//! where `F(U)` applies the drift at the nodes (the coefficient form of
//! the nodal-interpolated drift) and `L_g` is the noise load. The
//! nonlinear system is solved by Newton with the analytic Jacobian
//! `J = M + tau K - tau M diag(f'(U))` and BiCGStab inner solves; the
//! initial guess comes from one drift-free linear solve, which lands
//! inside the quadratic basin for the step sizes of interest.

use crate::error::{Error, Result};
use crate::fem::{norm_linf_nodal, Discretization, FieldVector, QuadratureRule};
use crate::model::ModelSpec;
use crate::paths::WienerPath;
use crate::sparse::{bicgstab_solve, cg_solve, norm2, SparseMatrix};

/// How the noise load `(g(u_h^n), phi_i)` is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseLoad {
    /// Load of the nodal interpolant: `M g.(u)`. Cheap, second-order
    /// accurate, the default.
    #[default]
    Interpolated,
    /// Exact quadrature of `g` composed with the P1 interpolant; kept for
    /// sensitivity checks.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub tau: f64,
    pub n_steps: usize,
    /// Absolute Newton residual tolerance (2-norm).
    pub newton_tol: f64,
    pub newton_maxit: usize,
    /// Relative tolerance of the inner Krylov solves.
    pub linear_tol: f64,
    pub noise_load: NoiseLoad,
}

impl SchemeConfig {
    /// Defaults: `newton_tol = 1e-10 * sqrt(domain area)` so the residual
    /// contract scales with the domain, 30 Newton iterations, inner
    /// tolerance 1e-10.
    pub fn new(tau: f64, n_steps: usize, domain_area: f64) -> Result<Self> {
        let cfg = SchemeConfig {
            tau,
            n_steps,
            newton_tol: 1e-10 * domain_area.sqrt(),
            newton_maxit: 30,
            linear_tol: 1e-10,
            noise_load: NoiseLoad::Interpolated,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "time step must be positive, got {}",
                self.tau
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::InvalidSpec("need at least one time step".into()));
        }
        if !(self.newton_tol > 0.0) || !(self.linear_tol > 0.0) {
            return Err(Error::InvalidSpec("tolerances must be positive".into()));
        }
        if self.newton_maxit == 0 {
            return Err(Error::InvalidSpec("Newton iteration budget must be positive".into()));
        }
        Ok(())
    }

    pub fn final_time(&self) -> f64 {
        self.tau * self.n_steps as f64
    }
}

/// Per-step solver diagnostics.
#[derive(Debug, Clone)]
pub struct StepDiagnostics {
    pub newton_iters: usize,
    /// Residual 2-norms, one entry per Newton residual evaluation
    /// (starting with the initial guess).
    pub newton_residuals: Vec<f64>,
    /// Total inner Krylov iterations across the step.
    pub linear_iterations: usize,
}

/// Norm diagnostics of one time level, the raw material of the
/// moment-stability series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSample {
    /// `||u||_{L2}^2`
    pub l2_sq: f64,
    /// `||grad u||_{L2}^2`
    pub h1_sq: f64,
    /// `||u||_{L^{q+1}}^{q+1}` with `q` the drift degree (4th power for
    /// linear drifts).
    pub lqp1: f64,
    /// Max absolute nodal value.
    pub linf: f64,
    pub newton_iters: usize,
}

/// A solved path: diagnostics at every step plus requested snapshots.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Diagnostics of the initial datum (zero Newton iterations).
    pub initial: MomentSample,
    /// Diagnostics after each of the `n_steps` steps.
    pub diagnostics: Vec<MomentSample>,
    /// `(step index, state)` pairs in ascending step order.
    pub snapshots: Vec<(usize, FieldVector)>,
}

/// One mesh + model + step-size context, holding the assembled system
/// matrix. Immutable and shareable across Monte Carlo workers.
pub struct SchemeOperator<'a> {
    disc: &'a Discretization,
    model: ModelSpec,
    cfg: SchemeConfig,
    /// `M + tau K`
    sys: SparseMatrix,
    /// Power `q + 1` for the polynomial-moment diagnostic.
    lqp1_power: f64,
    lqp1_rule: QuadratureRule,
    linear_maxit: usize,
}

impl<'a> SchemeOperator<'a> {
    pub fn new(disc: &'a Discretization, model: ModelSpec, cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        let sys = disc.mass().add_scaled(disc.stiffness(), 1.0, cfg.tau)?;
        // The Jacobian update indexes mass values positionally against the
        // system matrix, which is only sound for identical patterns.
        if !sys.same_pattern(disc.mass()) {
            return Err(Error::InvalidSpec(
                "mass and stiffness patterns disagree; cannot share the Jacobian layout".into(),
            ));
        }
        let q = model.drift.leading_power().unwrap_or(3);
        let lqp1_power = (q + 1) as f64;
        let lqp1_rule = QuadratureRule::for_power(lqp1_power);
        let linear_maxit = crate::fem::linear_maxit(disc.n_nodes());
        Ok(SchemeOperator {
            disc,
            model,
            cfg,
            sys,
            lqp1_power,
            lqp1_rule,
            linear_maxit,
        })
    }

    pub fn disc(&self) -> &Discretization {
        self.disc
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn cfg(&self) -> &SchemeConfig {
        &self.cfg
    }

    /// Noise load vector `L_g(u)`, per the configured assembly route.
    pub fn noise_load(&self, u: &FieldVector) -> Result<Vec<f64>> {
        match self.cfg.noise_load {
            NoiseLoad::Interpolated => {
                let g_nodal = u.map(|v| self.model.diffusion.eval(v));
                self.disc.mass().spmv(g_nodal.values())
            }
            NoiseLoad::Quadrature => self.disc.load_from_composed(
                u,
                |v| self.model.diffusion.eval(v),
                &QuadratureRule::degree5(),
            ),
        }
    }

    /// Right-hand side `M u_n + L_g(u_n) dW` of one step.
    fn step_rhs(&self, u_n: &FieldVector, dw: f64) -> Result<Vec<f64>> {
        let mut rhs = self.disc.mass().spmv(u_n.values())?;
        if self.model.diffusion.delta > 0.0 && dw != 0.0 {
            let load = self.noise_load(u_n)?;
            for (r, l) in rhs.iter_mut().zip(&load) {
                *r += l * dw;
            }
        }
        Ok(rhs)
    }

    /// Nonlinear residual `R(u) = (M + tau K) u - tau M F(u) - rhs`.
    pub fn residual(&self, u: &[f64], rhs: &[f64]) -> Vec<f64> {
        let mut scratch = Vec::new();
        self.residual_into(u, rhs, &mut scratch)
    }

    fn residual_into(&self, u: &[f64], rhs: &[f64], scratch: &mut Vec<f64>) -> Vec<f64> {
        let mut r = vec![0.0; u.len()];
        self.sys.mul_into(u, &mut r);
        if !(self.model.drift.is_linear() && self.model.drift.c0() == 0.0) {
            scratch.clear();
            scratch.extend(u.iter().map(|v| self.model.drift.eval(*v)));
            let mut mf = vec![0.0; u.len()];
            self.disc.mass().mul_into(scratch, &mut mf);
            for (ri, mfi) in r.iter_mut().zip(&mf) {
                *ri -= self.cfg.tau * mfi;
            }
        }
        for (ri, bi) in r.iter_mut().zip(rhs) {
            *ri -= bi;
        }
        r
    }

    /// Jacobian `M + tau K - tau M diag(f'(u))`, sharing the system
    /// matrix's sparsity pattern.
    pub fn jacobian(&self, u: &[f64]) -> Result<SparseMatrix> {
        let fprime: Vec<f64> = u.iter().map(|v| self.model.drift.deriv(*v)).collect();
        let mass = self.disc.mass();
        let mut values = self.sys.values().to_vec();
        let cols = mass.col_indices();
        let mvals = mass.values();
        for (idx, v) in values.iter_mut().enumerate() {
            *v -= self.cfg.tau * mvals[idx] * fprime[cols[idx]];
        }
        self.sys.with_values(values)
    }

    /// Newton iteration on `R(U) = 0` from the supplied initial guess.
    /// Returns the root and diagnostics; aborts when the residual grows
    /// over three consecutive iterations.
    pub fn newton_solve(&self, rhs: &[f64], u_init: &[f64]) -> Result<(Vec<f64>, StepDiagnostics)> {
        let mut u = u_init.to_vec();
        let mut scratch = Vec::with_capacity(u.len());
        let mut residuals = Vec::with_capacity(8);
        let mut linear_iterations = 0usize;
        let mut growth_streak = 0usize;

        for it in 0..=self.cfg.newton_maxit {
            let r = self.residual_into(&u, rhs, &mut scratch);
            let rn = norm2(&r);
            if let Some(prev) = residuals.last() {
                if rn > *prev {
                    growth_streak += 1;
                    if growth_streak >= 3 {
                        return Err(Error::NewtonDiverged {
                            iterations: it,
                            residual: rn,
                        });
                    }
                } else {
                    growth_streak = 0;
                }
            }
            residuals.push(rn);
            if rn <= self.cfg.newton_tol {
                return Ok((
                    u,
                    StepDiagnostics {
                        newton_iters: it,
                        newton_residuals: residuals,
                        linear_iterations,
                    },
                ));
            }
            if it == self.cfg.newton_maxit {
                break;
            }
            let jac = self.jacobian(&u)?;
            let (delta, report) =
                bicgstab_solve(&jac, &r, self.cfg.linear_tol, self.linear_maxit)?;
            linear_iterations += report.iterations;
            if !report.converged {
                return Err(Error::LinearSolve {
                    context: "Newton correction",
                    report,
                });
            }
            for (ui, di) in u.iter_mut().zip(&delta) {
                *ui -= di;
            }
        }
        Err(Error::NewtonFailure {
            iterations: self.cfg.newton_maxit,
            residual: *residuals.last().unwrap(),
        })
    }

    /// Advance one step given the Wiener increment `dw`.
    pub fn step(&self, u_n: &FieldVector, dw: f64) -> Result<(FieldVector, StepDiagnostics)> {
        if u_n.len() != self.disc.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.disc.n_nodes(),
                got: u_n.len(),
            });
        }
        if u_n.mesh_level() != self.disc.mesh().level() {
            return Err(Error::LevelMismatch {
                expected: self.disc.mesh().level(),
                got: u_n.mesh_level(),
            });
        }
        let rhs = self.step_rhs(u_n, dw)?;

        // Drift-free solve as the Newton initial guess; for linear models
        // with c0 = 0 this already is the answer.
        let (init, report) = cg_solve(&self.sys, &rhs, self.cfg.linear_tol, self.linear_maxit)?;
        if !report.converged {
            return Err(Error::LinearSolve {
                context: "implicit heat solve",
                report,
            });
        }
        let init_linear_iters = report.iterations;

        let (u, mut diag) = self.newton_solve(&rhs, &init)?;
        diag.linear_iterations += init_linear_iters;
        Ok((FieldVector::new(u, u_n.mesh_level()), diag))
    }

    /// Norm diagnostics of a state.
    pub fn moment_sample(&self, u: &FieldVector, newton_iters: usize) -> MomentSample {
        MomentSample {
            l2_sq: self.disc.norm_l2(u).powi(2),
            h1_sq: self.disc.seminorm_h1(u).powi(2),
            lqp1: self.disc.integrate_abs_pow(u, self.lqp1_power, &self.lqp1_rule),
            linf: norm_linf_nodal(u),
            newton_iters,
        }
    }

    /// Integrate a whole path, recording per-step diagnostics and the
    /// requested snapshots (`snapshot_steps` must be sorted, unique, and
    /// within `0..=n_steps`).
    pub fn solve_path(
        &self,
        u0: &FieldVector,
        path: &WienerPath,
        snapshot_steps: &[usize],
    ) -> Result<Trajectory> {
        if path.n_steps() < self.cfg.n_steps {
            return Err(Error::InvalidSpec(format!(
                "path has {} steps, scheme needs {}",
                path.n_steps(),
                self.cfg.n_steps
            )));
        }
        if path.tau() != self.cfg.tau {
            return Err(Error::InvalidSpec(format!(
                "path step size {} does not match scheme step size {}",
                path.tau(),
                self.cfg.tau
            )));
        }
        for w in snapshot_steps.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidSpec("snapshot steps must be strictly increasing".into()));
            }
        }
        if let Some(last) = snapshot_steps.last() {
            if *last > self.cfg.n_steps {
                return Err(Error::InvalidSpec(format!(
                    "snapshot step {last} beyond final step {}",
                    self.cfg.n_steps
                )));
            }
        }

        let initial = self.moment_sample(u0, 0);
        let mut snapshots = Vec::with_capacity(snapshot_steps.len());
        if snapshot_steps.first() == Some(&0) {
            snapshots.push((0, u0.clone()));
        }
        let mut diagnostics = Vec::with_capacity(self.cfg.n_steps);
        let mut u = u0.clone();
        for n in 0..self.cfg.n_steps {
            let dw = path.increments()[n];
            let (next, diag) = self
                .step(&u, dw)
                .map_err(|e| Error::PathFailure {
                    step: n,
                    source: Box::new(e),
                })?;
            u = next;
            diagnostics.push(self.moment_sample(&u, diag.newton_iters));
            if snapshot_steps.binary_search(&(n + 1)).is_ok() {
                snapshots.push((n + 1, u.clone()));
            }
        }
        Ok(Trajectory {
            initial,
            diagnostics,
            snapshots,
        })
    }
}
