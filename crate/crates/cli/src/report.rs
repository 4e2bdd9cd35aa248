//! Structured text reports with a stable key order.
//!
//! The body is deterministic for identical inputs; the timing line is
//! appended last and excluded from the body, so
//! `parse(print(report)) == report` while bodies stay byte-identical
//! across runs.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Pass => write!(f, "pass"),
            Status::Fail => write!(f, "fail"),
            Status::Indeterminate => write!(f, "indeterminate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub check: String,
    pub scenario: String,
    pub status: Status,
    /// Ordered key-value rows: dimension tables, verdicts, diagnostics.
    pub items: Vec<(String, String)>,
    pub timing_ms: Option<u128>,
}

impl Report {
    pub fn new(check: &str, scenario: &str) -> Self {
        Report {
            check: check.to_string(),
            scenario: scenario.to_string(),
            status: Status::Indeterminate,
            items: Vec::new(),
            timing_ms: None,
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.items.push((key.into(), value.to_string()));
    }

    pub fn set_status(&mut self, pass: bool) {
        self.status = if pass { Status::Pass } else { Status::Fail };
    }

    /// The deterministic part: everything except timing.
    pub fn body(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("check = {}\n", self.check));
        out.push_str(&format!("scenario = {}\n", self.scenario));
        out.push_str(&format!("status = {}\n", self.status));
        for (k, v) in &self.items {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn print(&self) -> String {
        let mut out = self.body();
        if let Some(ms) = self.timing_ms {
            out.push_str(&format!("timing_ms = {ms}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Report, String> {
        let mut check = None;
        let mut scenario = None;
        let mut status = None;
        let mut items = Vec::new();
        let mut timing_ms = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(format!("bad report line: `{line}`"));
            };
            let (k, v) = (k.trim(), v.trim());
            match k {
                "check" => check = Some(v.to_string()),
                "scenario" => scenario = Some(v.to_string()),
                "status" => {
                    status = Some(match v {
                        "pass" => Status::Pass,
                        "fail" => Status::Fail,
                        "indeterminate" => Status::Indeterminate,
                        other => return Err(format!("unknown status `{other}`")),
                    })
                }
                "timing_ms" => {
                    timing_ms =
                        Some(v.parse().map_err(|_| format!("bad timing `{v}`"))?)
                }
                _ => items.push((k.to_string(), v.to_string())),
            }
        }
        Ok(Report {
            check: check.ok_or("missing check")?,
            scenario: scenario.ok_or("missing scenario")?,
            status: status.ok_or("missing status")?,
            items,
            timing_ms,
        })
    }

    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            _ => 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        let mut r = Report::new("tor", "point.scn");
        r.set_status(true);
        r.push("dims", "1 2 1");
        r.push("stable_from", 2);
        r.timing_ms = Some(42);
        let parsed = Report::parse(&r.print()).unwrap();
        assert_eq!(parsed, r);
    }

    #[test]
    fn body_excludes_timing() {
        let mut r = Report::new("tor", "point.scn");
        r.set_status(false);
        r.timing_ms = Some(999);
        assert!(!r.body().contains("timing"));
        assert!(r.print().contains("timing_ms = 999"));
    }
}
