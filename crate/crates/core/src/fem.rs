//! P1 finite element core: mass/stiffness assembly, nodal interpolation,
//! L2 projection, the discrete Laplacian, and every norm the diagnostics
//! and error tables need.
//!
//! The mass matrix is kept consistent (not lumped). The noise load has two
//! assembly routes: the cheap nodal-interpolated load `M g(u)` used by
//! default, and an exact-quadrature load for sensitivity checks.

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point, ProlongationMap};
use crate::sparse::{cg_solve, dot, SparseMatrix};

/// Nodal coefficient vector of a P1 function, tagged with the refinement
/// level of the mesh it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    values: Vec<f64>,
    mesh_level: u32,
}

impl FieldVector {
    pub fn new(values: Vec<f64>, mesh_level: u32) -> Self {
        FieldVector { values, mesh_level }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mesh_level(&self) -> u32 {
        self.mesh_level
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Apply a scalar function entrywise (nodal composition).
    pub fn map(&self, f: impl Fn(f64) -> f64) -> FieldVector {
        FieldVector {
            values: self.values.iter().map(|v| f(*v)).collect(),
            mesh_level: self.mesh_level,
        }
    }
}

/// Maximum absolute nodal value; exact L-infinity norm for P1 functions.
pub fn norm_linf_nodal(u: &FieldVector) -> f64 {
    u.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Quadrature rule on the reference triangle in barycentric coordinates.
/// Weights sum to one; integrals scale by the physical triangle area.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
    degree: u32,
}

impl QuadratureRule {
    /// Midpoint rule: 3 points, exact through degree 2.
    pub fn degree2() -> Self {
        QuadratureRule {
            points: vec![
                [0.5, 0.5, 0.0],
                [0.0, 0.5, 0.5],
                [0.5, 0.0, 0.5],
            ],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// 7-point rule, exact through degree 5.
    pub fn degree5() -> Self {
        let sqrt15 = 15.0f64.sqrt();
        let a = (6.0 - sqrt15) / 21.0;
        let b = (6.0 + sqrt15) / 21.0;
        let wa = (155.0 - sqrt15) / 1200.0;
        let wb = (155.0 + sqrt15) / 1200.0;
        let mut points = vec![[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];
        let mut weights = vec![9.0 / 40.0];
        for perm in permutations3(a) {
            points.push(perm);
            weights.push(wa);
        }
        for perm in permutations3(b) {
            points.push(perm);
            weights.push(wb);
        }
        QuadratureRule {
            points,
            weights,
            degree: 5,
        }
    }

    /// Composite rule: `levels` rounds of midpoint subdivision of the
    /// reference triangle with `base` applied on each cell. Stated
    /// exactness degree stays that of the base rule; the subdivision
    /// shrinks the error of higher-degree integrands geometrically.
    pub fn subdivided(base: &QuadratureRule, levels: u32) -> Self {
        let mut cells: Vec<[[f64; 3]; 3]> = vec![[
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]];
        for _ in 0..levels {
            let mut next = Vec::with_capacity(4 * cells.len());
            for [a, b, c] in &cells {
                let mab = mid_bary(a, b);
                let mbc = mid_bary(b, c);
                let mca = mid_bary(c, a);
                next.push([*a, mab, mca]);
                next.push([mab, *b, mbc]);
                next.push([mca, mbc, *c]);
                next.push([mab, mbc, mca]);
            }
            cells = next;
        }
        let cell_weight = 1.0 / cells.len() as f64;
        let mut points = Vec::with_capacity(cells.len() * base.points.len());
        let mut weights = Vec::with_capacity(points.capacity());
        for [a, b, c] in &cells {
            for (bp, bw) in base.points.iter().zip(&base.weights) {
                let mut p = [0.0; 3];
                for k in 0..3 {
                    p[k] = bp[0] * a[k] + bp[1] * b[k] + bp[2] * c[k];
                }
                points.push(p);
                weights.push(bw * cell_weight);
            }
        }
        QuadratureRule {
            points,
            weights,
            degree: base.degree,
        }
    }

    /// Rule used for L^p integrands of P1 functions: the degree-5 rule up
    /// to p = 4, a twice-subdivided composite beyond.
    pub fn for_power(p: f64) -> Self {
        if p <= 4.0 {
            QuadratureRule::degree5()
        } else {
            QuadratureRule::subdivided(&QuadratureRule::degree5(), 2)
        }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn mid_bary(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ]
}

fn permutations3(a: f64) -> [[f64; 3]; 3] {
    let c = 1.0 - 2.0 * a;
    [[a, a, c], [a, c, a], [c, a, a]]
}

/// Analytic local mass matrix of a triangle with the given vertices.
pub fn local_mass(coords: &[Point; 3]) -> [[f64; 3]; 3] {
    let area = crate::mesh::signed_area(&coords[0], &coords[1], &coords[2]);
    let s = area / 12.0;
    [
        [2.0 * s, s, s],
        [s, 2.0 * s, s],
        [s, s, 2.0 * s],
    ]
}

/// Gradients of the three barycentric basis functions and the triangle
/// area.
pub fn p1_gradients(coords: &[Point; 3]) -> ([[f64; 2]; 3], f64) {
    let area = crate::mesh::signed_area(&coords[0], &coords[1], &coords[2]);
    let mut grads = [[0.0; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let k = (i + 2) % 3;
        grads[i][0] = (coords[j].y - coords[k].y) / (2.0 * area);
        grads[i][1] = (coords[k].x - coords[j].x) / (2.0 * area);
    }
    (grads, area)
}

/// Analytic local stiffness matrix of a triangle with the given vertices.
pub fn local_stiffness(coords: &[Point; 3]) -> [[f64; 3]; 3] {
    let (grads, area) = p1_gradients(coords);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
        }
    }
    k
}

/// Consistent mass matrix `M_ij = (phi_i, phi_j)`.
pub fn assemble_mass(mesh: &Mesh) -> SparseMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangle(t);
        let local = local_mass(&mesh.triangle_points(t));
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], local[i][j]));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.n_nodes(), triplets).expect("valid mesh indices")
}

/// Stiffness matrix `K_ij = (grad phi_i, grad phi_j)`; symmetric positive
/// semidefinite with constants in its kernel (pure Neumann problem).
pub fn assemble_stiffness(mesh: &Mesh) -> SparseMatrix {
    let mut triplets = Vec::with_capacity(9 * mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangle(t);
        let local = local_stiffness(&mesh.triangle_points(t));
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((tri[i], tri[j], local[i][j]));
            }
        }
    }
    SparseMatrix::from_triplets(mesh.n_nodes(), triplets).expect("valid mesh indices")
}

/// A mesh with its assembled mass and stiffness matrices; the immutable
/// spatial context shared by all solves on that mesh.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    mass: SparseMatrix,
    stiffness: SparseMatrix,
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Self {
        let mass = assemble_mass(&mesh);
        let stiffness = assemble_stiffness(&mesh);
        Discretization {
            mesh,
            mass,
            stiffness,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mass(&self) -> &SparseMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseMatrix {
        &self.stiffness
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.n_nodes()
    }

    fn check_field(&self, u: &FieldVector) -> Result<()> {
        if u.len() != self.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_nodes(),
                got: u.len(),
            });
        }
        if u.mesh_level() != self.mesh.level() {
            return Err(Error::LevelMismatch {
                expected: self.mesh.level(),
                got: u.mesh_level(),
            });
        }
        Ok(())
    }

    /// Nodal interpolation of explicit per-node values: the coefficient
    /// vector of `I_h v` is just the values themselves.
    pub fn interpolate_nodal(&self, values_at_nodes: Vec<f64>) -> Result<FieldVector> {
        if values_at_nodes.len() != self.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_nodes(),
                got: values_at_nodes.len(),
            });
        }
        Ok(FieldVector::new(values_at_nodes, self.mesh.level()))
    }

    /// Nodal interpolation `I_h f` of a scalar field.
    pub fn interpolate_fn(&self, f: impl Fn(f64, f64) -> f64) -> FieldVector {
        let values = self
            .mesh
            .nodes()
            .iter()
            .map(|p| f(p.x, p.y))
            .collect();
        FieldVector::new(values, self.mesh.level())
    }

    pub fn constant_field(&self, c: f64) -> FieldVector {
        FieldVector::new(vec![c; self.n_nodes()], self.mesh.level())
    }

    /// Load vector `b_i = (f, phi_i)` by quadrature.
    pub fn load_from_fn(&self, f: impl Fn(f64, f64) -> f64, rule: &QuadratureRule) -> Vec<f64> {
        let mut b = vec![0.0; self.n_nodes()];
        for t in 0..self.mesh.n_triangles() {
            let tri = self.mesh.triangle(t);
            let pts = self.mesh.triangle_points(t);
            let area = self.mesh.triangle_area(t);
            for (bary, w) in rule.points().iter().zip(rule.weights()) {
                let x = bary[0] * pts[0].x + bary[1] * pts[1].x + bary[2] * pts[2].x;
                let y = bary[0] * pts[0].y + bary[1] * pts[1].y + bary[2] * pts[2].y;
                let fv = f(x, y);
                for i in 0..3 {
                    b[tri[i]] += area * w * fv * bary[i];
                }
            }
        }
        b
    }

    /// Load vector `b_i = (g(u_h), phi_i)` with `g` composed with the P1
    /// interpolant at quadrature points (exact-quadrature noise load).
    pub fn load_from_composed(
        &self,
        u: &FieldVector,
        g: impl Fn(f64) -> f64,
        rule: &QuadratureRule,
    ) -> Result<Vec<f64>> {
        self.check_field(u)?;
        let uv = u.values();
        let mut b = vec![0.0; self.n_nodes()];
        for t in 0..self.mesh.n_triangles() {
            let tri = self.mesh.triangle(t);
            let area = self.mesh.triangle_area(t);
            for (bary, w) in rule.points().iter().zip(rule.weights()) {
                let uq = bary[0] * uv[tri[0]] + bary[1] * uv[tri[1]] + bary[2] * uv[tri[2]];
                let gv = g(uq);
                for i in 0..3 {
                    b[tri[i]] += area * w * gv * bary[i];
                }
            }
        }
        Ok(b)
    }

    /// L2 projection `P_h f`: solves `M x = (f, phi_i)`.
    pub fn l2_project(&self, f: impl Fn(f64, f64) -> f64) -> Result<FieldVector> {
        let b = self.load_from_fn(f, &QuadratureRule::degree5());
        let x = self.mass_solve(&b, 1e-10, "L2 projection")?;
        Ok(FieldVector::new(x, self.mesh.level()))
    }

    fn mass_solve(&self, b: &[f64], tol: f64, context: &'static str) -> Result<Vec<f64>> {
        let maxit = linear_maxit(self.n_nodes());
        let (x, report) = cg_solve(&self.mass, b, tol, maxit)?;
        if !report.converged {
            return Err(Error::LinearSolve { context, report });
        }
        Ok(x)
    }

    /// Discrete Laplacian: solves `M x = -K u`. The mass matrix is well
    /// conditioned, so the solve runs tighter than the projection to keep
    /// the operator's adjointness at roundoff scale.
    pub fn discrete_laplacian(&self, u: &FieldVector) -> Result<FieldVector> {
        self.check_field(u)?;
        let mut b = self.stiffness.spmv(u.values())?;
        for v in b.iter_mut() {
            *v = -*v;
        }
        let x = self.mass_solve(&b, 1e-13, "discrete Laplacian")?;
        Ok(FieldVector::new(x, self.mesh.level()))
    }

    /// L2 norm via the mass matrix: `sqrt(u' M u)`.
    pub fn norm_l2(&self, u: &FieldVector) -> f64 {
        self.quadratic_form(&self.mass, u).max(0.0).sqrt()
    }

    /// H1 seminorm via the stiffness matrix: `sqrt(u' K u)`.
    pub fn seminorm_h1(&self, u: &FieldVector) -> f64 {
        self.quadratic_form(&self.stiffness, u).max(0.0).sqrt()
    }

    fn quadratic_form(&self, a: &SparseMatrix, u: &FieldVector) -> f64 {
        assert_eq!(
            u.len(),
            self.n_nodes(),
            "field has {} values but the mesh has {} nodes",
            u.len(),
            self.n_nodes()
        );
        let au = a.spmv(u.values()).expect("lengths match");
        dot(u.values(), &au)
    }

    /// `integral |u_h|^p` over the domain by per-triangle quadrature.
    pub fn integrate_abs_pow(&self, u: &FieldVector, p: f64, rule: &QuadratureRule) -> f64 {
        let uv = u.values();
        let mut total = 0.0;
        for t in 0..self.mesh.n_triangles() {
            let tri = self.mesh.triangle(t);
            let area = self.mesh.triangle_area(t);
            let mut cell = 0.0;
            for (bary, w) in rule.points().iter().zip(rule.weights()) {
                let uq = bary[0] * uv[tri[0]] + bary[1] * uv[tri[1]] + bary[2] * uv[tri[2]];
                cell += w * uq.abs().powf(p);
            }
            total += area * cell;
        }
        total
    }

    /// L^p norm by quadrature with a rule adequate for `|linear|^p`.
    pub fn norm_lp(&self, u: &FieldVector, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidSpec(format!("L^p norm requires p >= 1, got {p}")));
        }
        self.check_field(u)?;
        let rule = QuadratureRule::for_power(p);
        Ok(self.integrate_abs_pow(u, p, &rule).powf(1.0 / p))
    }
}

/// Reasonable Krylov budget for the well-conditioned mass-type systems.
pub fn linear_maxit(n: usize) -> usize {
    (10.0 * (n as f64).sqrt()).ceil() as usize + 100
}

/// Carry a coarse-level field to the fine level of `map`; exact for P1
/// functions because the spaces are nested.
pub fn prolongate(map: &ProlongationMap, u: &FieldVector) -> Result<FieldVector> {
    if u.mesh_level() != map.coarse_level {
        return Err(Error::LevelMismatch {
            expected: map.coarse_level,
            got: u.mesh_level(),
        });
    }
    let fine = map.apply(u.values())?;
    Ok(FieldVector::new(fine, map.fine_level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;

    fn unit_right_triangle() -> [Point; 3] {
        [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ]
    }

    fn square_disc(n: usize) -> Discretization {
        Discretization::new(Mesh::build_uniform(n, n, Rect::unit_square_centered()).unwrap())
    }

    fn test_rng(state: &mut u64) -> f64 {
        *state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = *state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Exact integral of x^p y^q over the reference triangle.
    fn reference_monomial_integral(p: u32, q: u32) -> f64 {
        let fact = |k: u32| (1..=k).map(|v| v as f64).product::<f64>().max(1.0);
        fact(p) * fact(q) / fact(p + q + 2)
    }

    #[test]
    fn quadrature_rules_are_exact_to_stated_degree() {
        for rule in [QuadratureRule::degree2(), QuadratureRule::degree5()] {
            let wsum: f64 = rule.weights().iter().sum();
            assert!((wsum - 1.0).abs() < 1e-14);
            assert!(rule.weights().iter().all(|w| *w > 0.0));
            for p in 0..=rule.degree() {
                for q in 0..=(rule.degree() - p) {
                    // reference triangle has area 1/2; weights are
                    // normalized against the area
                    let mut acc = 0.0;
                    for (bary, w) in rule.points().iter().zip(rule.weights()) {
                        // cartesian coords on the reference triangle:
                        // x = bary[1], y = bary[2]
                        acc += w * bary[1].powi(p as i32) * bary[2].powi(q as i32);
                    }
                    let exact = reference_monomial_integral(p, q) / 0.5;
                    assert!(
                        (acc - exact).abs() < 1e-13,
                        "degree {} rule failed on x^{p} y^{q}",
                        rule.degree()
                    );
                }
            }
        }
    }

    #[test]
    fn subdivided_rule_keeps_exactness_and_normalization() {
        let rule = QuadratureRule::subdivided(&QuadratureRule::degree5(), 2);
        assert_eq!(rule.len(), 7 * 16);
        let wsum: f64 = rule.weights().iter().sum();
        assert!((wsum - 1.0).abs() < 1e-13);
        let mut acc = 0.0;
        for (bary, w) in rule.points().iter().zip(rule.weights()) {
            acc += w * bary[1].powi(3) * bary[2].powi(2);
        }
        let exact = reference_monomial_integral(3, 2) / 0.5;
        assert!((acc - exact).abs() < 1e-13);
    }

    #[test]
    fn local_mass_matches_analytic_form() {
        let coords = unit_right_triangle();
        let m = local_mass(&coords);
        let area = 0.5;
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 2.0 } else { 1.0 } * area / 12.0;
                assert!((m[i][j] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn local_stiffness_matches_analytic_form() {
        let k = local_stiffness(&unit_right_triangle());
        let expect = [
            [1.0, -0.5, -0.5],
            [-0.5, 0.5, 0.0],
            [-0.5, 0.0, 0.5],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expect[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mass_entries_sum_to_domain_area() {
        let disc = square_disc(4);
        let ones = disc.constant_field(1.0);
        let m1 = disc.mass().spmv(ones.values()).unwrap();
        let total: f64 = m1.iter().sum();
        assert!((total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mass_quadratic_form_matches_quadrature_norm() {
        let disc = square_disc(4);
        let disc = Discretization::new(disc.mesh().refine_uniform().0); // level 1
        let disc = Discretization::new(disc.mesh().refine_uniform().0); // level 2
        let mut state = 77u64;
        let values: Vec<f64> = (0..disc.n_nodes())
            .map(|_| 2.0 * test_rng(&mut state) - 1.0)
            .collect();
        let u = disc.interpolate_nodal(values).unwrap();
        let mass_norm_sq = disc.norm_l2(&u).powi(2);
        let quad = disc.integrate_abs_pow(&u, 2.0, &QuadratureRule::degree2());
        assert!((mass_norm_sq - quad).abs() < 1e-12);
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let disc = square_disc(5);
        let ones = vec![1.0; disc.n_nodes()];
        let k1 = disc.stiffness().spmv(&ones).unwrap();
        for v in k1 {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn stiffness_off_diagonals_nonpositive_on_admissible_mesh() {
        let disc = square_disc(4);
        assert!(disc.mesh().check_mesh_assumption().unwrap().pass);
        let k = disc.stiffness();
        for i in 0..k.n() {
            let mut diag = 0.0;
            let mut off_sum = 0.0;
            for (j, v) in k.row(i) {
                if i == j {
                    diag = v;
                } else {
                    assert!(v <= 1e-12, "K[{i},{j}] = {v}");
                    off_sum += v.abs();
                }
            }
            // weak diagonal dominance
            assert!(diag + 1e-12 >= off_sum);
        }
    }

    #[test]
    fn interpolation_reproduces_linears_and_commutes_with_nodal_maps() {
        let disc = square_disc(3);
        let lin = |x: f64, y: f64| 3.0 * x - 0.5 * y + 1.0;
        let u = disc.interpolate_fn(lin);
        for (i, p) in disc.mesh().nodes().iter().enumerate() {
            assert_eq!(u.values()[i], lin(p.x, p.y));
        }
        let f = |v: f64| v - v * v * v;
        let composed_then_interp = disc.interpolate_fn(|x, y| f(lin(x, y)));
        let interp_then_mapped = u.map(f);
        assert_eq!(composed_then_interp, interp_then_mapped);
    }

    #[test]
    fn l2_project_exact_on_vh() {
        let disc = square_disc(4);
        let c = disc.l2_project(|_, _| 2.5).unwrap();
        for v in c.values() {
            assert!((v - 2.5).abs() < 1e-9);
        }
        let lin = disc.l2_project(|x, y| 2.0 * x - y).unwrap();
        for (i, p) in disc.mesh().nodes().iter().enumerate() {
            assert!((lin.values()[i] - (2.0 * p.x - p.y)).abs() < 1e-9);
        }
    }

    #[test]
    fn l2_projection_error_decays_second_order() {
        // tanh profile projected on successive refinements; the L2 error
        // against a fine-quadrature oracle should shrink ~4x per level.
        let eps = 0.2;
        let f = |x: f64, y: f64| ((x * x + y * y - 0.36) / (2.0f64.sqrt() * eps)).tanh();
        let rule = QuadratureRule::subdivided(&QuadratureRule::degree5(), 2);

        let mut mesh = Mesh::build_uniform(4, 4, Rect::unit_square_centered()).unwrap();
        for _ in 0..2 {
            mesh = mesh.refine_uniform().0; // start at level 2
        }
        let mut errors = Vec::new();
        for _ in 0..3 {
            let disc = Discretization::new(mesh.clone());
            let ph = disc.l2_project(f).unwrap();
            // quadrature of (f - P_h f)^2
            let uv = ph.values();
            let mut err_sq = 0.0;
            for t in 0..mesh.n_triangles() {
                let tri = mesh.triangle(t);
                let pts = mesh.triangle_points(t);
                let area = mesh.triangle_area(t);
                for (bary, w) in rule.points().iter().zip(rule.weights()) {
                    let x = bary[0] * pts[0].x + bary[1] * pts[1].x + bary[2] * pts[2].x;
                    let y = bary[0] * pts[0].y + bary[1] * pts[1].y + bary[2] * pts[2].y;
                    let uh = bary[0] * uv[tri[0]] + bary[1] * uv[tri[1]] + bary[2] * uv[tri[2]];
                    err_sq += area * w * (f(x, y) - uh).powi(2);
                }
            }
            errors.push(err_sq.sqrt());
            mesh = mesh.refine_uniform().0;
        }
        for pair in errors.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!(
                (1.75..=2.25).contains(&order),
                "projection order {order} out of range (errors {errors:?})"
            );
        }
    }

    #[test]
    fn discrete_laplacian_of_constant_vanishes() {
        let disc = square_disc(4);
        let u = disc.constant_field(3.0);
        let lap = disc.discrete_laplacian(&u).unwrap();
        for v in lap.values() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_laplacian_of_linear_is_boundary_driven() {
        // K u has exactly zero interior rows for u = x (the harmonic
        // residual lives on the boundary), and the mass solve keeps the
        // response concentrated near the boundary.
        let disc = square_disc(8);
        let u = disc.interpolate_fn(|x, _| x);
        let ku = disc.stiffness().spmv(u.values()).unwrap();
        for i in 0..disc.n_nodes() {
            if !disc.mesh().is_boundary_node(i) {
                assert!(ku[i].abs() < 1e-13, "interior row {i}: {}", ku[i]);
            }
        }
        let lap = disc.discrete_laplacian(&u).unwrap();
        let boundary_mass: f64 = (0..disc.n_nodes())
            .filter(|i| disc.mesh().is_boundary_node(*i))
            .map(|i| lap.values()[i].powi(2))
            .sum();
        let total: f64 = lap.values().iter().map(|v| v * v).sum();
        assert!(boundary_mass > 0.9 * total);
    }

    #[test]
    fn discrete_laplacian_self_adjoint() {
        let disc = square_disc(4);
        let mut state = 11u64;
        let u = disc
            .interpolate_nodal((0..disc.n_nodes()).map(|_| test_rng(&mut state)).collect())
            .unwrap();
        let v = disc
            .interpolate_nodal((0..disc.n_nodes()).map(|_| test_rng(&mut state)).collect())
            .unwrap();
        let lu = disc.discrete_laplacian(&u).unwrap();
        let lv = disc.discrete_laplacian(&v).unwrap();
        let mlu = disc.mass().spmv(lu.values()).unwrap();
        let mlv = disc.mass().spmv(lv.values()).unwrap();
        let a = dot(&mlu, v.values());
        let b = dot(&mlv, u.values());
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "a={a} b={b}");
    }

    #[test]
    fn norms_of_simple_fields() {
        let disc = square_disc(6);
        let c = disc.constant_field(-1.5);
        assert!((disc.norm_l2(&c) - 3.0).abs() < 1e-12); // 2|c| on area 4
        assert!(disc.seminorm_h1(&c) < 1e-12);
        assert!((norm_linf_nodal(&c) - 1.5).abs() < 1e-15);

        // nodal x: L4 norm^4 = integral x^4 = 4/5 on [-1,1]^2
        let u = disc.interpolate_fn(|x, _| x);
        let l4 = disc.norm_lp(&u, 4.0).unwrap();
        assert!((l4.powi(4) - 0.8).abs() < 1e-10);
        // fine-quadrature oracle agrees
        let fine = disc.integrate_abs_pow(&u, 4.0, &QuadratureRule::subdivided(&QuadratureRule::degree5(), 2));
        assert!((l4.powi(4) - fine).abs() < 1e-12);

        assert!(disc.norm_lp(&u, 0.5).is_err());
    }

    #[test]
    fn mass_solve_consistency_on_ones() {
        let disc = square_disc(4);
        let ones = vec![1.0; disc.n_nodes()];
        let b = disc.mass().spmv(&ones).unwrap();
        let (x, report) = cg_solve(disc.mass(), &b, 1e-10, 200).unwrap();
        assert!(report.converged);
        for v in x {
            assert!((v - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn prolongation_preserves_norms_of_nested_functions() {
        let coarse = Mesh::build_uniform(4, 4, Rect::unit_square_centered()).unwrap();
        let (fine, map) = coarse.refine_uniform();
        let dc = Discretization::new(coarse);
        let df = Discretization::new(fine);
        let u = dc.interpolate_fn(|x, y| 0.3 * x - 1.2 * y + 0.5);
        let uf = prolongate(&map, &u).unwrap();
        assert!((dc.norm_l2(&u) - df.norm_l2(&uf)).abs() < 1e-12);
        assert!((dc.seminorm_h1(&u) - df.seminorm_h1(&uf)).abs() < 1e-12);
    }

    #[test]
    fn prolongation_level_mismatch_rejected() {
        let coarse = Mesh::build_uniform(2, 2, Rect::unit_square_centered()).unwrap();
        let (fine, map) = coarse.refine_uniform();
        let df = Discretization::new(fine);
        let wrong = df.constant_field(1.0); // already fine-level
        assert!(prolongate(&map, &wrong).is_err());
    }

    #[test]
    fn mass_is_positive_definite_on_random_vectors() {
        for level in 0..=4 {
            let mut mesh = Mesh::build_uniform(4, 4, Rect::unit_square_centered()).unwrap();
            for _ in 0..level {
                mesh = mesh.refine_uniform().0;
            }
            let disc = Discretization::new(mesh);
            let mut state = 0xabcdu64 + level as u64;
            for _ in 0..100 {
                let x: Vec<f64> = (0..disc.n_nodes())
                    .map(|_| 2.0 * test_rng(&mut state) - 1.0)
                    .collect();
                let mx = disc.mass().spmv(&x).unwrap();
                let quad = dot(&x, &mx);
                let kx = disc.stiffness().spmv(&x).unwrap();
                let kquad = dot(&x, &kx);
                if x.iter().any(|v| *v != 0.0) {
                    assert!(quad > 0.0);
                }
                assert!(kquad >= -1e-12);
            }
        }
    }

    #[test]
    fn cg_iteration_budget_on_assembled_systems() {
        // Mass and (mass + tau * stiffness) solves stay well under
        // 10*sqrt(n) iterations at tol 1e-10 through level 5.
        let mut mesh = Mesh::build_uniform(4, 4, Rect::unit_square_centered()).unwrap();
        let mut state = 0x600du64;
        for level in 0..=5u32 {
            let disc = Discretization::new(mesh.clone());
            let n = disc.n_nodes();
            let budget = (10.0 * (n as f64).sqrt()) as usize;
            let b: Vec<f64> = (0..n).map(|_| 2.0 * test_rng(&mut state) - 1.0).collect();
            let sys = disc.mass().add_scaled(disc.stiffness(), 1.0, 2.5e-3).unwrap();
            for a in [disc.mass(), &sys] {
                let (_, report) = cg_solve(a, &b, 1e-10, budget).unwrap();
                assert!(
                    report.converged && report.iterations <= budget,
                    "level {level}: {} iterations for budget {budget}",
                    report.iterations
                );
            }
            if level < 5 {
                mesh = mesh.refine_uniform().0;
            }
        }
    }

    #[test]
    fn galerkin_consistency_under_refinement() {
        let coarse = Mesh::build_uniform(3, 3, Rect::unit_square_centered()).unwrap();
        let (fine, map) = coarse.refine_uniform();
        let dc = Discretization::new(coarse);
        let df = Discretization::new(fine);
        let mut state = 5u64;
        let u = dc
            .interpolate_nodal((0..dc.n_nodes()).map(|_| test_rng(&mut state)).collect())
            .unwrap();
        let uf = prolongate(&map, &u).unwrap();
        let coarse_form = dc.seminorm_h1(&u).powi(2);
        let fine_form = df.seminorm_h1(&uf).powi(2);
        assert!((coarse_form - fine_form).abs() < 1e-12);
    }
}
