//! Test reports and their JSON serialization.
//!
//! Floating values round-trip exactly: serialization uses the shortest
//! decimal representation that parses back to the same `f64` (up to 17
//! significant digits).

use serde::{Deserialize, Serialize};

use crate::grid::Grid;

/// Version of the report JSON schema.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// The five implemented tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestKind {
    /// Integrated between-group covariance discrepancy, permutation calibrated.
    L2Rp,
    /// Supremum of the between-group covariance discrepancy, permutation calibrated.
    TmaxRp,
    /// Integrated quasi-F statistic with the scaled chi-square calibration.
    GpfNv,
    /// Integrated quasi-F statistic, permutation calibrated.
    GpfRp,
    /// Supremum of the quasi-F surface, permutation calibrated.
    FmaxRp,
}

impl TestKind {
    pub const ALL: [TestKind; 5] = [
        TestKind::L2Rp,
        TestKind::TmaxRp,
        TestKind::GpfNv,
        TestKind::GpfRp,
        TestKind::FmaxRp,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TestKind::L2Rp => "l2-rp",
            TestKind::TmaxRp => "tmax-rp",
            TestKind::GpfNv => "gpf-nv",
            TestKind::GpfRp => "gpf-rp",
            TestKind::FmaxRp => "fmax-rp",
        }
    }

    pub fn parse(s: &str) -> Option<TestKind> {
        match s {
            "l2-rp" => Some(TestKind::L2Rp),
            "tmax-rp" => Some(TestKind::TmaxRp),
            "gpf-nv" => Some(TestKind::GpfNv),
            "gpf-rp" => Some(TestKind::GpfRp),
            "fmax-rp" => Some(TestKind::FmaxRp),
            _ => None,
        }
    }

    /// Whether the test is calibrated by permutation.
    pub fn is_permutation(&self) -> bool {
        !matches!(self, TestKind::GpfNv)
    }
}

impl std::fmt::Display for TestKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How a p-value was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMethod {
    /// Scaled chi-square approximation.
    Nv,
    /// Random permutation.
    Rp,
}

/// Compact description of the grid a test ran on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub points: usize,
    pub a: f64,
    pub b: f64,
}

impl GridSummary {
    pub fn from_grid(grid: &Grid) -> Self {
        GridSummary {
            points: grid.len(),
            a: grid.a(),
            b: grid.b(),
        }
    }
}

/// Outcome of one test on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    /// Test name, e.g. `gpf-rp`.
    pub test: String,
    /// Observed statistic value.
    pub statistic: f64,
    /// P-value as a probability (printed as a percentage in tables).
    pub p_value: f64,
    pub method: CalibrationMethod,
    pub alpha: f64,
    pub reject: bool,
    /// Estimated critical value at `alpha`.
    pub critical_value: f64,
    /// Chi-square scale (`nv` only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    /// Chi-square degrees of freedom (`nv` only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub df: Option<f64>,
    /// Number of permutations (`rp` only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub permutations: Option<usize>,
    /// Permutation seed (`rp` only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    /// Permutation replicates where the SSE floor fired (`rp` only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub floored_replicates: Option<usize>,
    /// Grid cells of the observed surface where the SSE floor fired.
    pub eps_hits: usize,
    pub grid: GridSummary,
    pub group_sizes: Vec<usize>,
}

/// A versioned collection of reports, the payload of `--out report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    pub schema_version: u32,
    pub reports: Vec<TestReport>,
}

impl ReportSet {
    pub fn new(reports: Vec<TestReport>) -> Self {
        ReportSet {
            schema_version: REPORT_SCHEMA_VERSION,
            reports,
        }
    }
}
