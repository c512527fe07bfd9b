use crate::error::{Error, Result};

/// Increasing radii `r_0 < … < r_n` on `[r_in, r_out]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub geometric: bool,
}

impl RadialGrid {
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::arg("a radial grid needs at least two intervals"));
        }
        if nodes[0] < 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) || !nodes.iter().all(|r| r.is_finite()) {
            return Err(Error::arg("radial nodes must be finite, nonnegative and strictly increasing"));
        }
        Ok(Self { nodes, geometric: false })
    }

    pub fn r_in(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_out(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// `n + 1` nodes between `r_in` and `r_out`, uniform or with constant ratio.
pub fn radial_grid(r_in: f64, r_out: f64, n: usize, geometric: bool) -> Result<RadialGrid> {
    if !(r_in >= 0.0 && r_out > r_in && r_out.is_finite()) {
        return Err(Error::arg(format!("radial grid needs 0 <= r_in < r_out, got [{r_in}, {r_out}]")));
    }
    if n < 2 {
        return Err(Error::arg("radial grid needs n >= 2"));
    }
    if geometric && r_in == 0.0 {
        return Err(Error::arg("geometric radial grid needs r_in > 0"));
    }
    let mut nodes: Vec<f64> = if geometric {
        let ratio = (r_out / r_in).powf(1.0 / n as f64);
        (0..=n).map(|k| r_in * ratio.powi(k as i32)).collect()
    } else {
        (0..=n).map(|k| r_in + (r_out - r_in) * k as f64 / n as f64).collect()
    };
    nodes[0] = r_in;
    nodes[n] = r_out;
    Ok(RadialGrid { nodes, geometric })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_example() {
        assert_eq!(radial_grid(1.0, 2.0, 2, false).unwrap().nodes, vec![1.0, 1.5, 2.0]);
    }

    #[test]
    fn geometric_ratio_constant() {
        let g = radial_grid(1.0, 100.0, 50, true).unwrap();
        let q = 100f64.powf(1.0 / 50.0);
        for w in g.nodes.windows(2) {
            assert!((w[1] / w[0] - q).abs() < 1e-12);
        }
        assert_eq!(g.r_out(), 100.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(radial_grid(2.0, 1.0, 4, false).is_err());
        assert!(radial_grid(0.0, 1.0, 1, false).is_err());
        assert!(radial_grid(0.0, 1.0, 4, true).is_err());
    }
}
