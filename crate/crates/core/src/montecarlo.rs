//! Monte Carlo layer: moment-stability series over an ensemble of paths
//! and strong-error tables over nested mesh hierarchies with one Wiener
//! path shared across all levels of each sample.
//!
//! Samples are independent work units over immutable shared state.
//! Per-sample results are collected in sample-index order and reduced
//! sequentially (Welford for moments, compensated sums for error
//! accumulators), so outputs are bitwise independent of the worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{prolongate, Discretization, FieldVector};
use crate::mesh::{Mesh, ProlongationMap, Rect};
use crate::model::ModelSpec;
use crate::paths::{derive_sample_seed, WienerPath};
use crate::scheme::{MomentSample, SchemeConfig, SchemeOperator};
use crate::sparse::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub n_samples: usize,
    pub master_seed: u64,
    /// Worker pool width; 0 means available parallelism. Results do not
    /// depend on this value.
    pub parallel_width: usize,
}

impl EnsembleConfig {
    pub fn new(n_samples: usize, master_seed: u64, parallel_width: usize) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::InvalidSpec("ensemble needs at least one sample".into()));
        }
        Ok(EnsembleConfig {
            n_samples,
            master_seed,
            parallel_width,
        })
    }
}

/// Per-step ensemble moment estimates (index 0 is the initial datum).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub tau: f64,
    pub n_samples: usize,
    /// `E ||u^n||_{L2}^2`
    pub e_l2_sq: Vec<f64>,
    /// `E ||grad u^n||_{L2}^2`
    pub e_h1_sq: Vec<f64>,
    /// Standard errors of the two second-moment series.
    pub se_l2_sq: Vec<f64>,
    pub se_h1_sq: Vec<f64>,
    /// `E ||grad u^n||_{L2}^4`
    pub e_h1_4th: Vec<f64>,
    /// `E ||u^n||_{L2}^4`
    pub e_l2_4th: Vec<f64>,
    /// `E ||u^n||_{L^{q+1}}^{q+1}`
    pub e_lqp1: Vec<f64>,
}

impl MomentSeries {
    pub fn n_steps(&self) -> usize {
        self.e_l2_sq.len() - 1
    }
}

#[derive(Clone, Copy, Default)]
struct Welford {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn standard_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / ((self.n - 1) as f64 * self.n as f64)).sqrt()
        }
    }
}

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn push(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

fn run_in_pool<T: Send>(width: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if width == 0 {
        Ok(job())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(width)
            .build()
            .map_err(|e| Error::InvalidSpec(format!("worker pool: {e}")))?;
        Ok(pool.install(job))
    }
}

fn collect_samples<T: Send>(
    ens: &EnsembleConfig,
    job: impl Fn(usize, u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let results: Vec<Result<T>> = run_in_pool(ens.parallel_width, || {
        (0..ens.n_samples)
            .into_par_iter()
            .map(|i| {
                let seed = derive_sample_seed(ens.master_seed, i as u64);
                job(i, seed).map_err(|e| Error::SampleFailure {
                    sample: i,
                    seed,
                    source: Box::new(e),
                })
            })
            .collect()
    })?;
    // Deterministic error selection: first failing sample index wins.
    results.into_iter().collect()
}

/// Run the ensemble and accumulate the per-step moment series.
pub fn run_ensemble(
    op: &SchemeOperator<'_>,
    u0: &FieldVector,
    ens: &EnsembleConfig,
) -> Result<MomentSeries> {
    let cfg = *op.cfg();
    let per_sample: Vec<Vec<MomentSample>> = collect_samples(ens, |_i, seed| {
        let path = WienerPath::sample(cfg.n_steps, cfg.tau, seed)?;
        let traj = op.solve_path(u0, &path, &[])?;
        let mut series = Vec::with_capacity(cfg.n_steps + 1);
        series.push(traj.initial);
        series.extend(traj.diagnostics);
        Ok(series)
    })?;

    let len = cfg.n_steps + 1;
    let mut l2 = vec![Welford::default(); len];
    let mut h1 = vec![Welford::default(); len];
    let mut l2_4 = vec![Welford::default(); len];
    let mut h1_4 = vec![Welford::default(); len];
    let mut lqp1 = vec![Welford::default(); len];
    for sample in &per_sample {
        for (n, s) in sample.iter().enumerate() {
            l2[n].push(s.l2_sq);
            h1[n].push(s.h1_sq);
            l2_4[n].push(s.l2_sq * s.l2_sq);
            h1_4[n].push(s.h1_sq * s.h1_sq);
            lqp1[n].push(s.lqp1);
        }
    }
    Ok(MomentSeries {
        tau: cfg.tau,
        n_samples: ens.n_samples,
        e_l2_sq: l2.iter().map(|w| w.mean).collect(),
        e_h1_sq: h1.iter().map(|w| w.mean).collect(),
        se_l2_sq: l2.iter().map(|w| w.standard_error()).collect(),
        se_h1_sq: h1.iter().map(|w| w.standard_error()).collect(),
        e_h1_4th: h1_4.iter().map(|w| w.mean).collect(),
        e_l2_4th: l2_4.iter().map(|w| w.mean).collect(),
        e_lqp1: lqp1.iter().map(|w| w.mean).collect(),
    })
}

/// One row of the strong-error table; errors are square roots of the
/// estimated second moments, per the usual table convention.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTableRow {
    pub h: f64,
    /// `sqrt( sup_n E ||e^n||_{L2}^2 )`
    pub err_linf_e_l2: f64,
    /// `sqrt( E sup_n ||e^n||_{L2}^2 )`
    pub err_e_linf_l2: f64,
    /// `sqrt( E tau sum_n ||grad e^n||_{L2}^2 )`
    pub err_e_l2_h1: f64,
    pub order_linf_e_l2: Option<f64>,
    pub order_e_linf_l2: Option<f64>,
    pub order_e_l2_h1: Option<f64>,
}

/// Nested discretizations, coarse to fine, with the transfer maps between
/// consecutive levels. The finest level serves as the reference in error
/// studies; levels between the last tabulated row and the reference exist
/// only so transfers compose.
pub struct MeshHierarchy {
    levels: Vec<Discretization>,
    maps: Vec<ProlongationMap>,
    n_tabulated: usize,
}

impl MeshHierarchy {
    /// Build `n_levels` tabulated levels plus `reference_extra` more by
    /// repeated uniform refinement of an `nx x ny` base grid; the finest
    /// built level is the reference.
    pub fn uniform(
        nx: usize,
        ny: usize,
        rect: Rect,
        n_levels: usize,
        reference_extra: usize,
    ) -> Result<Self> {
        if n_levels == 0 {
            return Err(Error::InvalidSpec("hierarchy needs at least one level".into()));
        }
        if reference_extra == 0 {
            return Err(Error::InvalidSpec(
                "reference must be at least one refinement finer than the finest tabulated row"
                    .into(),
            ));
        }
        let total = n_levels + reference_extra;
        let mut meshes = Vec::with_capacity(total);
        let mut maps = Vec::with_capacity(total - 1);
        let mut mesh = Mesh::build_uniform(nx, ny, rect)?;
        for _ in 1..total {
            let (fine, map) = mesh.refine_uniform();
            meshes.push(mesh);
            maps.push(map);
            mesh = fine;
        }
        meshes.push(mesh);
        Ok(MeshHierarchy {
            levels: meshes.into_iter().map(Discretization::new).collect(),
            maps,
            n_tabulated: n_levels,
        })
    }

    /// Assemble a hierarchy from already-built parts; validates nesting.
    /// All levels but the reference are tabulated.
    pub fn from_parts(levels: Vec<Discretization>, maps: Vec<ProlongationMap>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidSpec("hierarchy needs at least one level".into()));
        }
        if maps.len() + 1 != levels.len() {
            return Err(Error::InvalidSpec(format!(
                "{} levels need {} transfer maps, got {}",
                levels.len(),
                levels.len() - 1,
                maps.len()
            )));
        }
        for (i, map) in maps.iter().enumerate() {
            let coarse = &levels[i];
            let fine = &levels[i + 1];
            if map.n_coarse() != coarse.n_nodes()
                || map.n_fine() != fine.n_nodes()
                || map.coarse_level != coarse.mesh().level()
                || map.fine_level != fine.mesh().level()
            {
                return Err(Error::InvalidSpec(format!(
                    "levels {i} and {} are not nested by the supplied map",
                    i + 1
                )));
            }
        }
        let n_tabulated = levels.len() - 1;
        Ok(MeshHierarchy {
            levels,
            maps,
            n_tabulated,
        })
    }

    pub fn levels(&self) -> &[Discretization] {
        &self.levels
    }

    pub fn reference(&self) -> &Discretization {
        self.levels.last().unwrap()
    }

    pub fn n_tabulated(&self) -> usize {
        self.n_tabulated
    }

    /// Carry a level-`from` field to the finest level.
    fn to_reference(&self, from: usize, u: &FieldVector) -> Result<FieldVector> {
        let mut v = u.clone();
        for map in &self.maps[from..] {
            v = prolongate(map, &v)?;
        }
        Ok(v)
    }
}

struct SampleErrors {
    /// `[level][step]` squared L2 errors against the reference.
    per_step_l2_sq: Vec<Vec<f64>>,
    /// `[level]` pathwise `sup_n ||e^n||^2`.
    sup_l2_sq: Vec<f64>,
    /// `[level]` pathwise `tau * sum_{n>=1} ||grad e^n||^2`.
    h1_integral: Vec<f64>,
}

/// Strong-error study: every tabulated level is integrated with the same
/// Wiener path as the reference (the finest level), and errors of the
/// prolonged states are measured with the reference-level matrices.
pub fn strong_error_study(
    hierarchy: &MeshHierarchy,
    model: &ModelSpec,
    cfg: &SchemeConfig,
    ens: &EnsembleConfig,
    initial: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<Vec<ErrorTableRow>> {
    if hierarchy.levels.len() < 2 {
        return Err(Error::InvalidSpec(
            "error study needs at least one tabulated level plus the reference".into(),
        ));
    }
    let n_tab = hierarchy.n_tabulated();
    let n_steps = cfg.n_steps;

    // Per-level initial data (projection of the same function); only the
    // tabulated levels and the reference are integrated.
    let u0: Vec<FieldVector> = hierarchy.levels[..n_tab]
        .iter()
        .map(|d| d.l2_project(&initial))
        .collect::<Result<_>>()?;
    let u0_ref = hierarchy.reference().l2_project(&initial)?;
    let ops: Vec<SchemeOperator<'_>> = hierarchy.levels[..n_tab]
        .iter()
        .map(|d| SchemeOperator::new(d, model.clone(), *cfg))
        .collect::<Result<_>>()?;
    let reference = hierarchy.reference();
    let ref_op = SchemeOperator::new(reference, model.clone(), *cfg)?;
    let all_steps: Vec<usize> = (0..=n_steps).collect();

    let samples: Vec<SampleErrors> = collect_samples(ens, |_i, seed| {
        let path = WienerPath::sample(n_steps, cfg.tau, seed)?;
        let ref_traj = ref_op.solve_path(&u0_ref, &path, &all_steps)?;
        let ref_states: Vec<&FieldVector> =
            ref_traj.snapshots.iter().map(|(_, u)| u).collect();

        let mut per_step_l2_sq = vec![vec![0.0f64; n_steps + 1]; n_tab];
        let mut sup_l2_sq = vec![0.0f64; n_tab];
        let mut h1_integral = vec![0.0f64; n_tab];
        for level in 0..n_tab {
            let op = &ops[level];
            let mut u = u0[level].clone();
            let mut h1_sum = Compensated::default();
            for n in 0..=n_steps {
                if n > 0 {
                    let dw = path.increments()[n - 1];
                    u = op
                        .step(&u, dw)
                        .map_err(|e| Error::PathFailure {
                            step: n - 1,
                            source: Box::new(e),
                        })?
                        .0;
                }
                let lifted = hierarchy.to_reference(level, &u)?;
                let e: Vec<f64> = lifted
                    .values()
                    .iter()
                    .zip(ref_states[n].values())
                    .map(|(a, b)| a - b)
                    .collect();
                let me = reference.mass().spmv(&e)?;
                let l2_sq = dot(&e, &me).max(0.0);
                per_step_l2_sq[level][n] = l2_sq;
                sup_l2_sq[level] = sup_l2_sq[level].max(l2_sq);
                if n > 0 {
                    let ke = reference.stiffness().spmv(&e)?;
                    h1_sum.push(dot(&e, &ke).max(0.0));
                }
            }
            h1_integral[level] = cfg.tau * h1_sum.value();
        }
        Ok(SampleErrors {
            per_step_l2_sq,
            sup_l2_sq,
            h1_integral,
        })
    })?;

    let n = ens.n_samples as f64;
    let mut rows = Vec::with_capacity(n_tab);
    for level in 0..n_tab {
        let mut step_means = vec![Compensated::default(); n_steps + 1];
        let mut sup_acc = Compensated::default();
        let mut h1_acc = Compensated::default();
        for s in &samples {
            for (acc, v) in step_means.iter_mut().zip(&s.per_step_l2_sq[level]) {
                acc.push(*v);
            }
            sup_acc.push(s.sup_l2_sq[level]);
            h1_acc.push(s.h1_integral[level]);
        }
        let sup_of_means = step_means
            .iter()
            .map(|a| a.value() / n)
            .fold(0.0, f64::max);
        rows.push(ErrorTableRow {
            h: hierarchy.levels[level].mesh().mesh_size(),
            err_linf_e_l2: sup_of_means.sqrt(),
            err_e_linf_l2: (sup_acc.value() / n).sqrt(),
            err_e_l2_h1: (h1_acc.value() / n).sqrt(),
            order_linf_e_l2: None,
            order_e_linf_l2: None,
            order_e_l2_h1: None,
        });
    }
    Ok(convergence_rates(rows))
}

/// Fill the order columns from consecutive rows of an h-halving table:
/// `order = log2(err_coarse / err_fine)`. Zero denominators (or zero
/// numerators) leave the order undefined.
pub fn convergence_rates(mut rows: Vec<ErrorTableRow>) -> Vec<ErrorTableRow> {
    let rate = |prev: f64, cur: f64| -> Option<f64> {
        if prev > 0.0 && cur > 0.0 {
            Some((prev / cur).log2())
        } else {
            None
        }
    };
    for i in 1..rows.len() {
        rows[i].order_linf_e_l2 = rate(rows[i - 1].err_linf_e_l2, rows[i].err_linf_e_l2);
        rows[i].order_e_linf_l2 = rate(rows[i - 1].err_e_linf_l2, rows[i].err_e_linf_l2);
        rows[i].order_e_l2_h1 = rate(rows[i - 1].err_e_l2_h1, rows[i].err_e_l2_h1);
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh;
    use crate::model::{DiffusionKind, DiffusionSpec, DriftSpec};
    use crate::scheme::NoiseLoad;

    fn model(delta: f64) -> ModelSpec {
        ModelSpec::new(
            DriftSpec::u_minus_uq(3).unwrap(),
            DiffusionSpec::new(DiffusionKind::Linear, delta).unwrap(),
        )
    }

    #[test]
    fn single_sample_zero_noise_equals_deterministic_trajectory() {
        let disc = Discretization::new(
            Mesh::build_uniform(8, 8, Rect::unit_square_centered()).unwrap(),
        );
        let cfg = SchemeConfig::new(1e-2, 5, 4.0).unwrap();
        let op = SchemeOperator::new(&disc, model(0.0), cfg).unwrap();
        let u0 = disc
            .l2_project(|x, y| ((x * x + y * y - 0.36) / (2.0f64.sqrt() * 0.2)).tanh())
            .unwrap();
        let ens = EnsembleConfig::new(1, 42, 1).unwrap();
        let series = run_ensemble(&op, &u0, &ens).unwrap();

        let path = WienerPath::sample(5, 1e-2, derive_sample_seed(42, 0)).unwrap();
        let traj = op.solve_path(&u0, &path, &[]).unwrap();
        assert_eq!(series.e_l2_sq[0], traj.initial.l2_sq);
        for n in 1..=5 {
            assert_eq!(series.e_l2_sq[n], traj.diagnostics[n - 1].l2_sq);
            assert_eq!(series.se_l2_sq[n], 0.0);
        }
    }

    #[test]
    fn ensemble_equals_manual_pass_and_prefix_is_stable() {
        let disc = Discretization::new(
            Mesh::build_uniform(4, 4, Rect::unit_square_centered()).unwrap(),
        );
        let cfg = SchemeConfig::new(1e-3, 3, 4.0).unwrap();
        let op = SchemeOperator::new(&disc, model(1.0), cfg).unwrap();
        let u0 = disc.constant_field(0.5);

        // Seeds derive per sample index, so the ensemble estimate must
        // equal a manual Welford pass over the same per-index paths --
        // and growing the ensemble cannot change the first samples'
        // contributions.
        let manual_means = |n: usize| -> Vec<f64> {
            let mut mean = vec![0.0f64; 4];
            for i in 0..n {
                let seed = derive_sample_seed(7, i as u64);
                let path = WienerPath::sample(3, 1e-3, seed).unwrap();
                let traj = op.solve_path(&u0, &path, &[]).unwrap();
                let mut series = vec![traj.initial.l2_sq];
                series.extend(traj.diagnostics.iter().map(|s| s.l2_sq));
                for (m, v) in mean.iter_mut().zip(&series) {
                    *m += (v - *m) / (i + 1) as f64;
                }
            }
            mean
        };
        let small = run_ensemble(&op, &u0, &EnsembleConfig::new(4, 7, 1).unwrap()).unwrap();
        assert_eq!(small.e_l2_sq, manual_means(4));
        let large = run_ensemble(&op, &u0, &EnsembleConfig::new(8, 7, 1).unwrap()).unwrap();
        assert_eq!(large.e_l2_sq, manual_means(8));
    }

    #[test]
    fn scheduling_independence_bitwise() {
        let disc = Discretization::new(
            Mesh::build_uniform(8, 8, Rect::unit_square_centered()).unwrap(),
        );
        let cfg = SchemeConfig::new(2.5e-3, 6, 4.0).unwrap();
        let op = SchemeOperator::new(&disc, model(1.0), cfg).unwrap();
        let u0 = disc
            .l2_project(|x, y| (((x * x + y * y).sqrt() - 0.6) / (2.0f64.sqrt() * 0.1)).tanh())
            .unwrap();
        let one = run_ensemble(&op, &u0, &EnsembleConfig::new(12, 99, 1).unwrap()).unwrap();
        let four = run_ensemble(&op, &u0, &EnsembleConfig::new(12, 99, 4).unwrap()).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn standard_errors_shrink_like_inverse_sqrt_n() {
        let disc = Discretization::new(
            Mesh::build_uniform(4, 4, Rect::unit_square_centered()).unwrap(),
        );
        let cfg = SchemeConfig::new(1e-2, 10, 4.0).unwrap();
        let op = SchemeOperator::new(&disc, model(1.0), cfg).unwrap();
        let u0 = disc.constant_field(0.5);
        let se_at = |n: usize| {
            let series =
                run_ensemble(&op, &u0, &EnsembleConfig::new(n, 2024, 0).unwrap()).unwrap();
            *series.se_l2_sq.last().unwrap()
        };
        let (a, b, c) = (se_at(50), se_at(200), se_at(800));
        for ratio in [a / b, b / c] {
            assert!(
                (1.6..=2.4).contains(&ratio),
                "se ratio {ratio} outside 2.0 +/- 20% (values {a}, {b}, {c})"
            );
        }
    }

    #[test]
    fn identical_levels_give_exactly_zero_errors() {
        let mesh = Mesh::build_uniform(4, 4, Rect::unit_square_centered()).unwrap();
        let d1 = Discretization::new(mesh.clone());
        let d2 = Discretization::new(mesh);
        let n = d1.n_nodes();
        let h = MeshHierarchy::from_parts(
            vec![d1, d2],
            vec![ProlongationMap::identity(n, 0)],
        )
        .unwrap();
        let cfg = SchemeConfig::new(1e-3, 4, 4.0).unwrap();
        let ens = EnsembleConfig::new(3, 5, 1).unwrap();
        let rows = strong_error_study(&h, &model(1.0), &cfg, &ens, |x, y| {
            ((x * x + y * y - 0.36) / (2.0f64.sqrt() * 0.2)).tanh()
        })
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].err_linf_e_l2, 0.0);
        assert_eq!(rows[0].err_e_linf_l2, 0.0);
        assert_eq!(rows[0].err_e_l2_h1, 0.0);
    }

    #[test]
    fn non_nested_levels_rejected() {
        let a = Discretization::new(
            Mesh::build_uniform(4, 4, Rect::unit_square_centered()).unwrap(),
        );
        let b = Discretization::new(
            Mesh::build_uniform(5, 5, Rect::unit_square_centered()).unwrap(),
        );
        let n = a.n_nodes();
        assert!(MeshHierarchy::from_parts(
            vec![a, b],
            vec![ProlongationMap::identity(n, 0)]
        )
        .is_err());
    }

    #[test]
    fn rate_arithmetic() {
        let row = |e1: f64, e2: f64, e3: f64| ErrorTableRow {
            h: 1.0,
            err_linf_e_l2: e1,
            err_e_linf_l2: e2,
            err_e_l2_h1: e3,
            order_linf_e_l2: None,
            order_e_linf_l2: None,
            order_e_l2_h1: None,
        };
        // published-table spot checks
        let rows = convergence_rates(vec![row(0.2909, 0.2909, 2.2387), row(0.0759, 0.0759, 1.1401)]);
        assert!((rows[1].order_linf_e_l2.unwrap() - 1.9384).abs() < 1e-3);
        assert!((rows[1].order_e_l2_h1.unwrap() - 0.9735).abs() < 1e-3);

        let rows = convergence_rates(vec![row(4.0, 4.0, 4.0), row(1.0, 1.0, 1.0)]);
        assert!((rows[1].order_linf_e_l2.unwrap() - 2.0).abs() < 1e-12);

        let rows = convergence_rates(vec![row(1.0, 1.0, 1.0), row(1.0, 1.0, 1.0)]);
        assert_eq!(rows[1].order_linf_e_l2, Some(0.0));

        let rows = convergence_rates(vec![row(1.0, 1.0, 1.0), row(0.0, 0.0, 0.0)]);
        assert_eq!(rows[1].order_linf_e_l2, None);
    }

    #[test]
    fn two_level_study_shows_error_decay() {
        let h = MeshHierarchy::uniform(4, 4, Rect::unit_square_centered(), 2, 1).unwrap();
        let cfg = SchemeConfig {
            tau: 1e-4,
            n_steps: 5,
            newton_tol: 2e-10,
            newton_maxit: 30,
            linear_tol: 1e-10,
            noise_load: NoiseLoad::Interpolated,
        };
        let ens = EnsembleConfig::new(4, 11, 0).unwrap();
        let rows = strong_error_study(&h, &model(1.0), &cfg, &ens, |x, y| {
            ((x * x + y * y - 0.36) / (2.0f64.sqrt() * 0.2)).tanh()
        })
        .unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].order_linf_e_l2.is_none());
        assert!(rows[1].order_linf_e_l2.is_some());
        assert!(rows[1].err_linf_e_l2 < rows[0].err_linf_e_l2);
        assert!(rows[1].err_e_l2_h1 < rows[0].err_e_l2_h1);
    }
}
