//! Initial data used by the experiment suite.

use crate::error::{Error, Result};

/// Built-in initial conditions; the tanh profiles sharpen as `epsilon`
/// shrinks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `tanh((x^2 + y^2 - 0.6^2) / (sqrt(2) eps))`
    Test1 { epsilon: f64 },
    /// `tanh((sqrt(x^2 + y^2) - 0.6) / (sqrt(2) eps))` (radial interface)
    Test2 { epsilon: f64 },
    /// Product-of-ellipses profile
    /// `tanh((sqrt(x^2/0.04 + y^2/0.36) - 1)(sqrt(x^2/0.36 + y^2/0.04) - 1) / (sqrt(2) eps))`
    Test3 { epsilon: f64 },
    Constant { value: f64 },
}

impl InitialCondition {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let sqrt2 = std::f64::consts::SQRT_2;
        match self {
            InitialCondition::Test1 { epsilon } => {
                ((x * x + y * y - 0.36) / (sqrt2 * epsilon)).tanh()
            }
            InitialCondition::Test2 { epsilon } => {
                (((x * x + y * y).sqrt() - 0.6) / (sqrt2 * epsilon)).tanh()
            }
            InitialCondition::Test3 { epsilon } => {
                let a = (x * x / 0.04 + y * y / 0.36).sqrt() - 1.0;
                let b = (x * x / 0.36 + y * y / 0.04).sqrt() - 1.0;
                (a * b / (sqrt2 * epsilon)).tanh()
            }
            InitialCondition::Constant { value } => *value,
        }
    }

    /// Parse a selector: `test1`, `test2`, `test3`, or `constant:<c>`;
    /// tanh profiles take their width from `epsilon`.
    pub fn parse(selector: &str, epsilon: f64) -> Result<Self> {
        let check_eps = |eps: f64| -> Result<f64> {
            if eps > 0.0 && eps.is_finite() {
                Ok(eps)
            } else {
                Err(Error::InvalidSpec(format!(
                    "initial condition needs a positive epsilon, got {eps}"
                )))
            }
        };
        match selector {
            "test1" => Ok(InitialCondition::Test1 {
                epsilon: check_eps(epsilon)?,
            }),
            "test2" => Ok(InitialCondition::Test2 {
                epsilon: check_eps(epsilon)?,
            }),
            "test3" => Ok(InitialCondition::Test3 {
                epsilon: check_eps(epsilon)?,
            }),
            other => {
                if let Some(v) = other.strip_prefix("constant:") {
                    let value: f64 = v.parse().map_err(|_| {
                        Error::InvalidSpec(format!("bad constant initial value {v:?}"))
                    })?;
                    Ok(InitialCondition::Constant { value })
                } else {
                    Err(Error::InvalidSpec(format!(
                        "unknown initial condition {other:?} (expected test1|test2|test3|constant:<c>)"
                    )))
                }
            }
        }
    }
}
