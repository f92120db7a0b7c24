use schrodinger_means::estimates::ExperimentReport;

use crate::config::RunConfig;

pub const VERSION: &str = concat!("schmeans ", env!("CARGO_PKG_VERSION"));

pub const REPORT_COLUMNS: [&str; 10] = ["experiment", "lambda", "interval", "s", "r", "seed", "grid", "metric", "value", "pass"];

/// Shortest round-trip representation.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn report_rows(report: &ExperimentReport) -> Vec<Vec<String>> {
    report
        .rows()
        .iter()
        .map(|r| {
            vec![
                r.experiment.clone(),
                opt_num(r.lambda),
                opt_num(r.interval),
                opt_num(r.s),
                opt_num(r.r),
                opt(r.seed),
                opt(r.grid),
                r.metric.clone(),
                num(r.value),
                opt(r.pass),
            ]
        })
        .collect()
}

/// Comment header (version, command, config hash, resolved config) followed
/// by the CSV table.
pub fn render(command: &str, cfg: &RunConfig, columns: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(format!("# {VERSION}\n# command: {command}\n# config_sha256: {}\n", cfg.hash()).as_bytes());
    for line in cfg.resolved_lines() {
        out.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns).expect("write to memory");
    for row in rows {
        w.write_record(row).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}
