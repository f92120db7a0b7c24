/// One row of an experiment report. Parameters that do not apply are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub lambda: Option<f64>,
    pub interval: Option<f64>,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub metric: String,
    pub value: f64,
    /// Outcome of the check attached to this metric, if any.
    pub pass: Option<bool>,
}

/// Append-only collection of rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub experiment: String,
    rows: Vec<ReportRow>,
}

/// Parameter tuple shared by a group of rows.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RowKey {
    pub lambda: Option<f64>,
    pub interval: Option<f64>,
    pub s: Option<f64>,
    pub r: Option<f64>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self { experiment: experiment.into(), rows: Vec::new() }
    }

    pub fn push(&mut self, key: RowKey, metric: impl Into<String>, value: f64, pass: Option<bool>) {
        self.rows.push(ReportRow {
            experiment: self.experiment.clone(),
            lambda: key.lambda,
            interval: key.interval,
            s: key.s,
            r: key.r,
            seed: key.seed,
            grid: key.grid,
            metric: metric.into(),
            value,
            pass,
        });
    }

    pub fn rows(&self) -> &[ReportRow] {
        &self.rows
    }

    /// True when no row failed its check.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass != Some(false))
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.pass == Some(false))
    }

    /// First row with the given metric (and lambda, when given).
    pub fn find(&self, metric: &str, lambda: Option<f64>) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.metric == metric && (lambda.is_none() || r.lambda == lambda))
    }

    pub fn extend(&mut self, other: ExperimentReport) {
        self.rows.extend(other.rows);
    }

    /// Every value is finite.
    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| r.value.is_finite())
    }
}
