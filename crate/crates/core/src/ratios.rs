//! The eleven financial ratios tracked by the toolkit, their categories and
//! preferred direction.
//!
//! The canonical column order (liquidity, profitability, solvency, valuation)
//! is fixed once here; every ratio matrix and report row in the crate follows
//! it, and extraction tie-breaks resolve to the earlier ratio in this order.

use serde::{Deserialize, Serialize};

/// Ratio category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    /// Liquidity ratios (larger preferable).
    LR,
    /// Profitability ratios (larger preferable).
    PR,
    /// Solvency ratios (smaller preferable).
    SR,
    /// Valuation ratios (smaller preferable).
    VR,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::LR, Category::PR, Category::SR, Category::VR];

    pub fn label(self) -> &'static str {
        match self {
            Category::LR => "LR",
            Category::PR => "PR",
            Category::SR => "SR",
            Category::VR => "VR",
        }
    }

    pub fn orientation(self) -> Orientation {
        match self {
            Category::LR | Category::PR => Orientation::LargerPreferable,
            Category::SR | Category::VR => Orientation::SmallerPreferable,
        }
    }
}

/// Whether a large or a small value of the ratio signals financial strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    LargerPreferable,
    SmallerPreferable,
}

impl Orientation {
    /// Sign attached to the ratio when it enters a maximization objective.
    pub fn sign(self) -> f64 {
        match self {
            Orientation::LargerPreferable => 1.0,
            Orientation::SmallerPreferable => -1.0,
        }
    }
}

/// One of the eleven tracked financial ratios, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RatioId {
    /// Quick ratio.
    QR,
    /// Current ratio.
    CR,
    /// Cash ratio (cash & equivalents to current liabilities).
    CCL,
    /// Net profit margin.
    NPM,
    /// Return on assets.
    ROA,
    /// Cash profit to total income.
    CPTI,
    /// Return on equity.
    ROE,
    /// Debt-equity ratio.
    DER,
    /// Debt-asset ratio.
    DAR,
    /// Price-to-earnings ratio.
    PER,
    /// Price-to-book ratio.
    PBR,
}

pub const RATIO_COUNT: usize = 11;

/// Canonical ratio order: liquidity, profitability, solvency, valuation.
pub const CANONICAL_RATIOS: [RatioId; RATIO_COUNT] = [
    RatioId::QR,
    RatioId::CR,
    RatioId::CCL,
    RatioId::NPM,
    RatioId::ROA,
    RatioId::CPTI,
    RatioId::ROE,
    RatioId::DER,
    RatioId::DAR,
    RatioId::PER,
    RatioId::PBR,
];

impl RatioId {
    pub fn label(self) -> &'static str {
        match self {
            RatioId::QR => "QR",
            RatioId::CR => "CR",
            RatioId::CCL => "CCL",
            RatioId::NPM => "NPM",
            RatioId::ROA => "ROA",
            RatioId::CPTI => "CPTI",
            RatioId::ROE => "ROE",
            RatioId::DER => "DER",
            RatioId::DAR => "DAR",
            RatioId::PER => "PER",
            RatioId::PBR => "PBR",
        }
    }

    pub fn from_label(label: &str) -> Option<RatioId> {
        CANONICAL_RATIOS.iter().copied().find(|r| r.label() == label)
    }

    pub fn category(self) -> Category {
        match self {
            RatioId::QR | RatioId::CR | RatioId::CCL => Category::LR,
            RatioId::NPM | RatioId::ROA | RatioId::CPTI | RatioId::ROE => Category::PR,
            RatioId::DER | RatioId::DAR => Category::SR,
            RatioId::PER | RatioId::PBR => Category::VR,
        }
    }

    pub fn orientation(self) -> Orientation {
        self.category().orientation()
    }

    /// Position of this ratio in [`CANONICAL_RATIOS`].
    pub fn index(self) -> usize {
        CANONICAL_RATIOS.iter().position(|&r| r == self).unwrap()
    }
}

impl std::fmt::Display for RatioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}
