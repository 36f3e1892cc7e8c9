use serde::Serialize;

use crate::bridge::{compute_nodes, min_valid_n};
use crate::error::{domain, Error, Result};
use crate::weight::{corpus_function, GridSpec, SingularWeight, TestFunction};

pub const DEFAULT_N_VALUES: [usize; 7] = [64, 128, 256, 512, 1024, 2048, 4096];

/// Parameters shared by the checkers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub n_values: Vec<usize>,
    pub lambda: f64,
    pub weight: SingularWeight<f64>,
    pub function: String,
    pub grid: GridSpec,
}

impl SweepSpec {
    pub fn new(weight: SingularWeight<f64>, lambda: f64) -> Self {
        Self {
            n_values: DEFAULT_N_VALUES.to_vec(),
            lambda,
            weight,
            function: "linear".to_string(),
            grid: GridSpec::default(),
        }
    }

    pub fn with_n_values(mut self, n_values: Vec<usize>) -> Self {
        self.n_values = n_values;
        self
    }

    pub fn with_function(mut self, name: impl Into<String>) -> Self {
        self.function = name.into();
        self
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(domain("lambda", self.lambda, "[0, 1]"));
        }
        SingularWeight::new(self.weight.xi, self.weight.alpha)?;
        if self.n_values.len() < 3 {
            return Err(Error::InvalidSweep(format!(
                "need at least 3 values of n, got {}",
                self.n_values.len()
            )));
        }
        if self.n_values.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidSweep("n values must be strictly increasing".into()));
        }
        for &n in &self.n_values {
            if !compute_nodes(n, self.weight.xi).valid {
                return Err(Error::InvalidNodes {
                    n,
                    xi: self.weight.xi,
                    min_n: min_valid_n(self.weight.xi),
                });
            }
        }
        Ok(())
    }

    /// The named corpus member for this weight and `lambda`.
    pub fn test_function(&self) -> Result<TestFunction<f64>> {
        corpus_function(&self.function, &self.weight, self.lambda)
    }
}

/// `{0.1, xi - 0.1, xi + 0.1, 0.9}` clipped to `(0, 1)`, sorted, deduplicated.
pub fn representative_points(xi: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = [0.1, xi - 0.1, xi + 0.1, 0.9]
        .iter()
        .map(|x| x.clamp(1e-3, 1.0 - 1e-3))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    pts
}
