//! Experiments: correctors and capacities, resolvent sweeps, weighted decay
//! and cube interaction checks.

use std::fmt;
use std::sync::Arc;

use crate::sparse::{C64, ZERO};

pub mod corrector;
pub mod decay;
pub mod resolvent;

pub use corrector::{
    capacity_extrapolated, capacity_variational, corrector_on_grid, corrector_radial, mu_percell, mu_percell_with,
    scaled_radius, CorrectorSolution, TraceRule, CORRECTOR_NODES,
};
pub use decay::{
    cube_sine, decomposition_inequality_check, interaction_decay, interaction_sweep, log_slope, random_cube_source,
    weighted_decay_check, DecayCheckConfig, DecayProblem, DecayReport, DecompositionReport, InteractionReport,
};
pub use resolvent::{
    lowest_eigenvalue, resolvent_sweep, source_norm, ConvergenceRecord, DiffField, HPolicy, ResolventPair, RowStatus,
    SweepConfig,
};

/// Right-hand side given in closed form.
#[derive(Clone)]
pub enum Source {
    Zero,
    Constant(C64),
    /// `sin(πx) sin(πy)`.
    SinSin,
    /// `Σ c_mn sin(mπ(x−x₀)) sin(nπ(y−y₀))` on the unit cube with corner
    /// `(x₀, y₀)`, zero outside.
    CubeModes { corner: [f64; 2], coefficients: Vec<(u32, u32, C64)> },
    Custom(Arc<dyn Fn([f64; 2]) -> C64 + Send + Sync>),
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Zero => write!(f, "Zero"),
            Source::Constant(c) => write!(f, "Constant({c})"),
            Source::SinSin => write!(f, "SinSin"),
            Source::CubeModes { corner, coefficients } => {
                write!(f, "CubeModes({corner:?}, {} modes)", coefficients.len())
            }
            Source::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl Source {
    pub fn eval(&self, x: [f64; 2]) -> C64 {
        use std::f64::consts::PI;
        match self {
            Source::Zero => ZERO,
            Source::Constant(c) => *c,
            Source::SinSin => C64::new((PI * x[0]).sin() * (PI * x[1]).sin(), 0.0),
            Source::CubeModes { corner, coefficients } => {
                let (s, t) = (x[0] - corner[0], x[1] - corner[1]);
                if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
                    return ZERO;
                }
                coefficients
                    .iter()
                    .map(|&(m, n, c)| c * (m as f64 * PI * s).sin() * (n as f64 * PI * t).sin())
                    .sum()
            }
            Source::Custom(f) => f(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Source::Zero => true,
            Source::Constant(c) => *c == ZERO,
            Source::CubeModes { coefficients, .. } => coefficients.iter().all(|c| c.2 == ZERO),
            _ => false,
        }
    }

    /// Axis-aligned box containing the support, if known.
    pub fn support(&self) -> Option<[f64; 4]> {
        match self {
            Source::CubeModes { corner, .. } => Some([corner[0], corner[1], corner[0] + 1.0, corner[1] + 1.0]),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_modes_vanish_outside_and_on_the_edges() {
        let s = Source::CubeModes {
            corner: [2.0, 0.0],
            coefficients: vec![(1, 1, C64::new(1.0, 0.0)), (2, 3, C64::new(0.0, 0.5))],
        };
        assert_eq!(s.eval([1.5, 0.5]), ZERO);
        assert_eq!(s.eval([3.5, 0.5]), ZERO);
        assert!(s.eval([2.0, 0.5]).norm() < 1e-15);
        assert!((s.eval([2.5, 0.5]) - C64::new(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(s.support(), Some([2.0, 0.0, 3.0, 1.0]));
    }
}
