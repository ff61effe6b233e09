//! Re-checks the thermodynamic invariants over an emitted sweep CSV.

use std::fmt;

use thiserror::Error;

use super::{SweepRow, CSV_COLUMNS};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {reason}")]
pub struct CsvError {
    pub line: usize,
    pub reason: String,
}

fn parse_field(s: &str) -> Result<f64, String> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "undefined" => Ok(f64::NAN),
        _ => s.parse::<f64>().map_err(|_| format!("bad number {s:?}")),
    }
}

/// Parses a sweep CSV; the header must match [`CSV_COLUMNS`] exactly.
pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>, CsvError> {
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) if !h.trim().is_empty() => h.trim_end_matches('\r'),
        _ => {
            return Err(CsvError {
                line: 1,
                reason: "empty file".into(),
            })
        }
    };
    if header != CSV_COLUMNS.join(",") {
        return Err(CsvError {
            line: 1,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != CSV_COLUMNS.len() {
            return Err(CsvError {
                line,
                reason: format!("expected {} fields, found {}", CSV_COLUMNS.len(), f.len()),
            });
        }
        let mut nums = [0.0; 14];
        for (j, slot) in nums.iter_mut().enumerate() {
            *slot = parse_field(f[j + 1]).map_err(|reason| CsvError {
                line,
                reason: format!("column {}: {reason}", CSV_COLUMNS[j + 1]),
            })?;
        }
        rows.push(SweepRow {
            axis_name: f[0].to_string(),
            axis_value: nums[0],
            p_plus: nums[1],
            q_pp: nums[2],
            q_pm: nums[3],
            work: nums[4],
            heat_cold: nums[5],
            heat_hot: nums[6],
            d_sm: nums[7],
            information: nums[8],
            s_baths: nums[9],
            sigma: nums[10],
            cop: nums[11],
            cop_carnot: nums[12],
            cop_ratio: nums[13],
            regime: f[15].to_string(),
            status: f[16].to_string(),
        });
    }
    if rows.is_empty() {
        return Err(CsvError {
            line: 2,
            reason: "no data rows".into(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    /// `None` when the check could not be evaluated.
    pub passed: Option<bool>,
    /// Zero-based index of the first failing row.
    pub first_failure: Option<usize>,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let state = match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        write!(f, "{state} {}", self.name)?;
        if let Some(i) = self.first_failure {
            write!(f, " (first failing row {i})")?;
        }
        if !self.detail.is_empty() {
            write!(f, ": {}", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationSummary {
    pub checks: Vec<CheckResult>,
}

impl VerificationSummary {
    /// No evaluated check failed.
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerificationSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

fn run_check<F>(name: &'static str, rows: &[SweepRow], detail: &str, mut ok: F) -> CheckResult
where
    F: FnMut(&SweepRow) -> Option<bool>,
{
    let mut evaluated = 0;
    let mut first_failure = None;
    for (i, r) in rows.iter().enumerate() {
        match ok(r) {
            Some(true) => evaluated += 1,
            Some(false) => {
                evaluated += 1;
                first_failure.get_or_insert(i);
            }
            None => {}
        }
    }
    CheckResult {
        name,
        passed: (evaluated > 0).then_some(first_failure.is_none()),
        first_failure,
        detail: format!("{detail}; {evaluated} rows checked"),
    }
}

/// Rows whose COP comparison is meaningful: the measurement does work on
/// the qubit, or the zero-work cooler with divergent COP.
fn carnot_comparable(r: &SweepRow) -> bool {
    r.has_report()
        && !r.cop_ratio.is_nan()
        && !r.s_baths.is_nan()
        && (r.work > 0.0 || r.regime == "pure-information")
}

/// Grid intervals `(i, i+1)` in which `⟨S⟩` changes sign, paired with
/// whether `ε/ε_C − 1` changes sign in the same interval. Only intervals
/// whose endpoints are both Carnot-comparable are listed.
pub fn find_crossings(rows: &[SweepRow]) -> Vec<(usize, bool, bool)> {
    rows.windows(2)
        .enumerate()
        .filter(|(_, w)| carnot_comparable(&w[0]) && carnot_comparable(&w[1]))
        .filter_map(|(i, w)| {
            let s_flip = (w[0].s_baths < 0.0) != (w[1].s_baths < 0.0);
            let c_flip = (w[0].cop_ratio > 1.0) != (w[1].cop_ratio > 1.0);
            (s_flip || c_flip).then_some((i, s_flip, c_flip))
        })
        .collect()
}

/// Runs the invariant suite. `hot_temperature` is used for the COP bound
/// unless the sweep axis itself is `T_h`.
pub fn verify_rows(rows: &[SweepRow], hot_temperature: Option<f64>) -> VerificationSummary {
    let mut checks = Vec::new();

    checks.push(run_check(
        "first_law",
        rows,
        "|W+Qc+Qh| <= 1e-12*max(1,|W|,|Qc|,|Qh|)",
        |r| {
            if !r.has_report() {
                return None;
            }
            let scale = 1f64
                .max(r.work.abs())
                .max(r.heat_cold.abs())
                .max(r.heat_hot.abs());
            Some((r.work + r.heat_cold + r.heat_hot).abs() <= 1e-12 * scale)
        },
    ));

    checks.push(run_check("second_law", rows, "sigma >= -1e-10", |r| {
        r.has_report().then(|| r.sigma >= -1e-10)
    }));

    let bound = run_check(
        "cop_bound",
        rows,
        "cop_ratio <= 1 + T_h*I/W + 1e-10 where W > 0",
        |r| {
            if !r.has_report() || !(r.work > 0.0) || !r.cop_ratio.is_finite() {
                return None;
            }
            let t_h = if r.axis_name == "T_h" {
                r.axis_value
            } else {
                hot_temperature?
            };
            Some(r.cop_ratio <= 1.0 + t_h * r.information / r.work + 1e-10)
        },
    );
    checks.push(if bound.passed.is_none() && hot_temperature.is_none() {
        CheckResult {
            detail: "T_h unknown (no manifest)".into(),
            ..bound
        }
    } else {
        bound
    });

    let crossings = find_crossings(rows);
    let mismatch = crossings.iter().find(|(_, s, c)| s != c);
    checks.push(CheckResult {
        name: "carnot_crossing",
        passed: Some(mismatch.is_none()),
        first_failure: mismatch.map(|(i, _, _)| *i),
        detail: format!(
            "sign changes of S_baths and cop_ratio-1 share grid intervals; {} crossing intervals",
            crossings.len()
        ),
    });

    VerificationSummary { checks }
}
