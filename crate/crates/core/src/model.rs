//! Drift and diffusion registry with validation of the standing
//! assumptions: odd-polynomial drifts with a negative leading term
//! (one-sided Lipschitz) and globally Lipschitz diffusions.

use crate::error::{Error, Result};
use crate::paths::mix64;

/// Polynomial drift of the template
/// `f(u) = scale * (c0 u - c1 u^3 - c2 u^5 - ...)`,
/// with `coeffs[k]` multiplying `u^(2k+1)` and `c_k >= 0` for `k >= 1`.
/// The focus case is `f(u) = u - u^q` for odd `q >= 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    coeffs: Vec<f64>,
    scale: f64,
}

impl DriftSpec {
    pub fn new(coeffs: Vec<f64>, scale: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidSpec("drift needs at least c0".into()));
        }
        if !scale.is_finite() || !coeffs.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidSpec("drift coefficients must be finite".into()));
        }
        if scale < 0.0 {
            return Err(Error::InvalidSpec(
                "drift scale must be nonnegative (negative linear drifts go through c0)".into(),
            ));
        }
        // Drop trailing zeros so the leading term is meaningful.
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.len() > 1 {
            if coeffs[1..].iter().any(|c| *c < 0.0) {
                return Err(Error::InvalidSpec(
                    "template coefficients c1, c2, ... must be nonnegative".into(),
                ));
            }
            if *coeffs.last().unwrap() <= 0.0 {
                return Err(Error::InvalidSpec(
                    "leading template coefficient must be strictly positive".into(),
                ));
            }
        }
        Ok(DriftSpec { coeffs, scale })
    }

    /// Purely linear drift `f(u) = c0 u` (zero for `c0 = 0`).
    pub fn linear(c0: f64) -> Self {
        DriftSpec {
            coeffs: vec![c0],
            scale: 1.0,
        }
    }

    /// `f(u) = u - u^q` for odd `q >= 3`.
    pub fn u_minus_uq(q: u32) -> Result<Self> {
        if q < 3 || q.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!(
                "drift power must be odd and >= 3, got {q}"
            )));
        }
        let m = ((q - 1) / 2) as usize;
        let mut coeffs = vec![0.0; m + 1];
        coeffs[0] = 1.0;
        coeffs[m] = 1.0;
        DriftSpec::new(coeffs, 1.0)
    }

    /// Same template with a different overall multiplier.
    pub fn with_scale(self, scale: f64) -> Result<Self> {
        DriftSpec::new(self.coeffs, scale)
    }

    /// Allen-Cahn drift `f(u) = (u - u^3) / epsilon^2`.
    pub fn allen_cahn(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "interaction length must be positive, got {epsilon}"
            )));
        }
        DriftSpec::new(vec![1.0, 1.0], 1.0 / (epsilon * epsilon))
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_linear(&self) -> bool {
        self.coeffs.len() == 1
    }

    /// Degree of the leading term (`None` for linear drifts).
    pub fn leading_power(&self) -> Option<u32> {
        if self.is_linear() {
            None
        } else {
            Some(2 * (self.coeffs.len() as u32 - 1) + 1)
        }
    }

    /// Scaled linear coefficient `scale * c0`.
    pub fn c0(&self) -> f64 {
        self.scale * self.coeffs[0]
    }

    /// `f(u)` by Horner evaluation in `u^2`.
    pub fn eval(&self, u: f64) -> f64 {
        let t = u * u;
        let mut acc = 0.0;
        for k in (1..self.coeffs.len()).rev() {
            acc = (acc - self.coeffs[k]) * t;
        }
        self.scale * u * (self.coeffs[0] + acc)
    }

    /// `f'(u)`, needed for the Newton Jacobian.
    pub fn deriv(&self, u: f64) -> f64 {
        let t = u * u;
        let mut acc = 0.0;
        for k in (1..self.coeffs.len()).rev() {
            acc = acc * t - (2 * k + 1) as f64 * self.coeffs[k];
        }
        self.scale * (self.coeffs[0] + acc * t)
    }

    /// Dense coefficients by power, `poly[k]` multiplying `u^k`, with the
    /// template signs applied. Input to the one-sided Lipschitz validator.
    pub fn power_coefficients(&self) -> Vec<f64> {
        let degree = 2 * (self.coeffs.len() - 1) + 1;
        let mut poly = vec![0.0; degree + 1];
        poly[1] = self.scale * self.coeffs[0];
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            poly[2 * k + 1] = -self.scale * c;
        }
        poly
    }
}

/// Why a drift polynomial fails the one-sided Lipschitz requirements.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftRejection {
    /// Leading power is even; the difference quotient is unbounded in both
    /// directions.
    EvenLeadingPower { power: usize },
    /// Leading odd term has a positive sign; the quotient is unbounded
    /// above.
    PositiveLeadingTerm { power: usize },
    /// The sampled inequality `(a-b)(f(a)-f(b)) <= mu (a-b)^2` failed.
    SampledViolation { a: f64, b: f64, lhs: f64, bound: f64 },
}

impl std::fmt::Display for DriftRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DriftRejection::EvenLeadingPower { power } => {
                write!(f, "leading power {power} must be odd")
            }
            DriftRejection::PositiveLeadingTerm { power } => {
                write!(f, "leading odd term u^{power} must have a negative sign")
            }
            DriftRejection::SampledViolation { a, b, lhs, bound } => write!(
                f,
                "sampled one-sided Lipschitz violation at (a,b)=({a},{b}): {lhs} > {bound}"
            ),
        }
    }
}

fn eval_poly(poly: &[f64], u: f64) -> f64 {
    poly.iter().rev().fold(0.0, |acc, c| acc * u + c)
}

/// Validate the one-sided Lipschitz condition for a dense polynomial
/// (`poly[k]` multiplies `u^k`). Structural rules first (leading power odd,
/// leading coefficient negative), then a sampled verification of
/// `(a-b)(f(a)-f(b)) <= mu (a-b)^2` with `mu = poly[1] + 1` over 10^4
/// pairs in `[-10,10]^2`.
pub fn validate_one_sided_lipschitz(poly: &[f64]) -> std::result::Result<(), DriftRejection> {
    let leading = poly
        .iter()
        .enumerate()
        .rev()
        .find(|(_, c)| **c != 0.0);
    let (power, coeff) = match leading {
        None => return Ok(()), // zero drift is trivially one-sided Lipschitz
        Some((p, c)) => (p, *c),
    };
    if power > 1 {
        if power % 2 == 0 {
            return Err(DriftRejection::EvenLeadingPower { power });
        }
        if coeff > 0.0 {
            return Err(DriftRejection::PositiveLeadingTerm { power });
        }
    }
    let c0 = poly.get(1).copied().unwrap_or(0.0);
    let mu = c0 + 1.0;
    let mut state = 0x05dee11e5u64;
    let mut unit = || {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        (mix64(state) >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..10_000 {
        let a = 20.0 * unit() - 10.0;
        let b = 20.0 * unit() - 10.0;
        let lhs = (a - b) * (eval_poly(poly, a) - eval_poly(poly, b));
        let bound = mu * (a - b) * (a - b);
        if lhs > bound + 1e-9 * bound.abs().max(1.0) {
            return Err(DriftRejection::SampledViolation { a, b, lhs, bound });
        }
    }
    Ok(())
}

/// Diffusion kinds used by the experiments; both are globally Lipschitz
/// with constant `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionKind {
    /// `g(u) = delta * u`
    Linear,
    /// `g(u) = delta * sqrt(u^2 + 1)`
    SqrtShift,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionSpec {
    pub kind: DiffusionKind,
    pub delta: f64,
}

impl DiffusionSpec {
    pub fn new(kind: DiffusionKind, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "noise intensity must be a finite nonnegative number, got {delta}"
            )));
        }
        Ok(DiffusionSpec { kind, delta })
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            DiffusionKind::Linear => self.delta * u,
            DiffusionKind::SqrtShift => self.delta * (u * u + 1.0).sqrt(),
        }
    }
}

/// Full model: the SPDE `du = [lap u + f(u)] dt + g(u) dW`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub drift: DriftSpec,
    pub diffusion: DiffusionSpec,
}

impl ModelSpec {
    pub fn new(drift: DriftSpec, diffusion: DiffusionSpec) -> Self {
        ModelSpec { drift, diffusion }
    }

    /// Structural plus sampled validation of the drift assumptions.
    pub fn validate(&self) -> std::result::Result<(), DriftRejection> {
        validate_one_sided_lipschitz(&self.drift.power_coefficients())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_drift_values() {
        let f = DriftSpec::u_minus_uq(3).unwrap();
        assert_eq!(f.eval(2.0), -6.0);
        assert_eq!(f.deriv(2.0), -11.0);
        assert_eq!(f.eval(0.0), 0.0);
    }

    #[test]
    fn degree_eleven_fixed_point() {
        let f = DriftSpec::u_minus_uq(11).unwrap();
        assert_eq!(f.eval(1.0), 0.0);
        assert_eq!(f.leading_power(), Some(11));
    }

    #[test]
    fn linear_drift() {
        let f = DriftSpec::linear(0.5);
        assert_eq!(f.eval(3.0), 1.5);
        assert_eq!(f.deriv(3.0), 0.5);
        assert!(f.leading_power().is_none());
    }

    #[test]
    fn allen_cahn_scaling() {
        let f = DriftSpec::allen_cahn(0.5).unwrap();
        // (u - u^3)/0.25 at u = 2: (2 - 8)*4 = -24
        assert!((f.eval(2.0) + 24.0).abs() < 1e-12);
    }

    #[test]
    fn drift_deriv_matches_finite_differences() {
        let specs = [
            DriftSpec::u_minus_uq(3).unwrap(),
            DriftSpec::u_minus_uq(5).unwrap(),
            DriftSpec::u_minus_uq(11).unwrap(),
            DriftSpec::new(vec![2.0, 0.5, 0.0, 1.0], 1.0).unwrap(),
        ];
        let mut state = 123u64;
        let mut unit = || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            (mix64(state) >> 11) as f64 / (1u64 << 53) as f64
        };
        for spec in &specs {
            for _ in 0..100 {
                let u = 6.0 * unit() - 3.0;
                let h = 1e-5 * u.abs().max(1.0);
                let fd = (spec.eval(u + h) - spec.eval(u - h)) / (2.0 * h);
                let exact = spec.deriv(u);
                let rel = (fd - exact).abs() / exact.abs().max(1.0);
                assert!(rel < 1e-6, "u={u}: fd={fd} exact={exact}");
            }
        }
    }

    #[test]
    fn template_validation() {
        assert!(DriftSpec::u_minus_uq(4).is_err());
        assert!(DriftSpec::u_minus_uq(1).is_err());
        assert!(DriftSpec::new(vec![1.0, -1.0], 1.0).is_err());
    }

    #[test]
    fn one_sided_lipschitz_acceptance_and_rejection() {
        // f(u) = u - u^3: accepted
        let ok = DriftSpec::u_minus_uq(3).unwrap();
        assert!(validate_one_sided_lipschitz(&ok.power_coefficients()).is_ok());

        // f(u) = u + u^3: positive leading odd term
        match validate_one_sided_lipschitz(&[0.0, 1.0, 0.0, 1.0]) {
            Err(DriftRejection::PositiveLeadingTerm { power: 3 }) => {}
            other => panic!("expected sign rejection, got {other:?}"),
        }

        // f(u) = u - u^4: even leading power
        match validate_one_sided_lipschitz(&[0.0, 1.0, 0.0, 0.0, -1.0]) {
            Err(DriftRejection::EvenLeadingPower { power: 4 }) => {}
            other => panic!("expected parity rejection, got {other:?}"),
        }
    }

    #[test]
    fn sampled_inequality_holds_for_accepted_specs() {
        for q in [3, 5, 11] {
            let spec = DriftSpec::u_minus_uq(q).unwrap();
            assert!(validate_one_sided_lipschitz(&spec.power_coefficients()).is_ok());
        }
    }

    #[test]
    fn diffusion_values_and_lipschitz_bound() {
        let lin = DiffusionSpec::new(DiffusionKind::Linear, 1.0).unwrap();
        assert_eq!(lin.eval(3.0), 3.0);
        let shift = DiffusionSpec::new(DiffusionKind::SqrtShift, 1.0).unwrap();
        assert_eq!(shift.eval(0.0), 1.0);

        let mut state = 9u64;
        let mut unit = || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            (mix64(state) >> 11) as f64 / (1u64 << 53) as f64
        };
        for spec in [lin, shift, DiffusionSpec::new(DiffusionKind::SqrtShift, 2.5).unwrap()] {
            for _ in 0..10_000 {
                let a = 40.0 * unit() - 20.0;
                let b = 40.0 * unit() - 20.0;
                assert!(
                    (spec.eval(a) - spec.eval(b)).abs() <= spec.delta * (a - b).abs() + 1e-12,
                    "Lipschitz bound failed for {spec:?}"
                );
                // linear growth consequence
                assert!(spec.eval(a).abs() <= spec.delta * (1.0 + a.abs()) + 1e-12);
            }
        }
    }

    #[test]
    fn negative_delta_rejected() {
        assert!(DiffusionSpec::new(DiffusionKind::Linear, -0.1).is_err());
    }
}
