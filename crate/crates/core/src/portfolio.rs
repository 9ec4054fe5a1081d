//! Portfolio weights and model tags shared by the solvers and the backtester.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights below this threshold do not count as support membership; solver
/// tolerance makes a literal "> 0" meaningless.
pub const SUPPORT_EPS: f64 = 1e-6;

/// The seven portfolio construction models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    Ssd,
    Spo,
    MinVar,
    MeanVar,
    PcaSpoA,
    PcaSpoB,
    Fssd,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Ssd,
        ModelKind::Spo,
        ModelKind::MinVar,
        ModelKind::MeanVar,
        ModelKind::PcaSpoA,
        ModelKind::PcaSpoB,
        ModelKind::Fssd,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Ssd => "SSD",
            ModelKind::Spo => "SPO",
            ModelKind::MinVar => "Min-Var",
            ModelKind::MeanVar => "Mean-Var",
            ModelKind::PcaSpoA => "PCA-SPO(A)",
            ModelKind::PcaSpoB => "PCA-SPO(B)",
            ModelKind::Fssd => "F-SSD",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<ModelKind> {
        let squashed: String =
            s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        let kind = match squashed.as_str() {
            "ssd" => ModelKind::Ssd,
            "spo" => ModelKind::Spo,
            "minvar" => ModelKind::MinVar,
            "meanvar" => ModelKind::MeanVar,
            "pcaspoa" => ModelKind::PcaSpoA,
            "pcaspob" => ModelKind::PcaSpoB,
            "fssd" => ModelKind::Fssd,
            _ => return Err(Error::InvalidInput(format!("unknown model '{s}'"))),
        };
        Ok(kind)
    }
}

/// An optimized allocation over one asset universe.
#[derive(Debug, Clone)]
pub struct ModelPortfolio {
    pub model: ModelKind,
    /// Fraction of budget per asset, aligned with the universe order.
    pub weights: Vec<f64>,
    /// Objective value attained by the solver.
    pub objective: f64,
    /// Indices with weight above [`SUPPORT_EPS`].
    pub support: Vec<usize>,
}

impl ModelPortfolio {
    pub fn new(model: ModelKind, weights: Vec<f64>, objective: f64) -> Self {
        let support = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > SUPPORT_EPS)
            .map(|(i, _)| i)
            .collect();
        ModelPortfolio { model, weights, objective, support }
    }

    /// Check budget and cap membership of the admissible set.
    pub fn validate(&self, bound: f64) -> Result<()> {
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!("weights sum to {sum}, not 1")));
        }
        for (i, &w) in self.weights.iter().enumerate() {
            if w < -1e-10 || w > bound + 1e-10 {
                return Err(Error::InvalidInput(format!("weight {w} for asset {i} outside [0, {bound}]")));
            }
        }
        Ok(())
    }
}
