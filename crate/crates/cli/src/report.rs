//! Check records and the serialised report.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Test {
    /// `|computed − expected| ≤ tolerance`
    Abs,
    /// `|computed − expected| ≤ tolerance · |expected|`
    Rel,
    /// `computed ≤ tolerance`
    AtMost,
    /// `computed ≥ expected − tolerance`
    AtLeast,
    /// Pass/fail decided by the check itself.
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub name: String,
    pub model: String,
    pub c: Option<f64>,
    pub point: Option<usize>,
    pub coords: Option<Vec<f64>>,
    pub computed: Option<f64>,
    pub expected: Option<f64>,
    pub tolerance: f64,
    pub test: Test,
    pub pass: bool,
    pub detail: String,
}

/// Where a record was evaluated.
#[derive(Debug, Clone, Default)]
pub struct Site {
    pub model: String,
    pub c: Option<f64>,
    pub point: Option<usize>,
    pub coords: Option<Vec<f64>>,
}

impl Site {
    fn record(&self, name: &str, test: Test) -> Record {
        Record {
            name: name.into(),
            model: self.model.clone(),
            c: self.c,
            point: self.point,
            coords: self.coords.clone(),
            computed: None,
            expected: None,
            tolerance: 0.0,
            test,
            pass: false,
            detail: String::new(),
        }
    }

    pub fn measure(&self, name: &str, test: Test, computed: f64, expected: Option<f64>, tolerance: f64) -> Record {
        let e = expected.unwrap_or(0.0);
        let pass = computed.is_finite()
            && match test {
                Test::Abs => (computed - e).abs() <= tolerance,
                Test::Rel => (computed - e).abs() <= tolerance * e.abs(),
                Test::AtMost => computed <= tolerance,
                Test::AtLeast => computed >= e - tolerance,
                Test::Flag => unreachable!("flag records use Site::flag"),
            };
        Record {
            computed: Some(computed).filter(|v| v.is_finite()),
            expected,
            tolerance,
            pass,
            ..self.record(name, test)
        }
    }

    pub fn flag(&self, name: &str, pass: bool, computed: Option<f64>, detail: impl Into<String>) -> Record {
        Record { pass, computed, detail: detail.into(), ..self.record(name, Test::Flag) }
    }

    /// A check that could not be evaluated.
    pub fn error(&self, name: &str, err: impl std::fmt::Display) -> Record {
        Record { detail: format!("error: {err}"), ..self.record(name, Test::Flag) }
    }
}

impl Record {
    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    /// Sign in `d^c𝒦 = s·(−Jᵀ d𝒦)`.
    pub s: f64,
    /// Measured sign in `J₁J₂ = σJ₃`.
    pub sigma: Option<f64>,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    /// `[passed, total]` per check name.
    pub by_name: BTreeMap<String, [usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub environment: Environment,
    pub summary: Summary,
    pub records: Vec<Record>,
}

pub fn config_hash(config: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(config.to_string().as_bytes()))
}

impl Report {
    /// Sorts records by `(name, point)`; ties keep evaluation order.
    pub fn assemble(environment: Environment, mut records: Vec<Record>) -> Self {
        records.sort_by(|a, b| a.name.cmp(&b.name).then(a.point.cmp(&b.point)));
        let mut by_name: BTreeMap<String, [usize; 2]> = BTreeMap::new();
        for r in &records {
            let e = by_name.entry(r.name.clone()).or_default();
            e[0] += r.pass as usize;
            e[1] += 1;
        }
        let passed = records.iter().filter(|r| r.pass).count();
        let summary = Summary { total: records.len(), passed, failed: records.len() - passed, by_name };
        Self { schema: SCHEMA, environment, summary, records }
    }

    pub fn all_pass(&self) -> bool {
        self.summary.failed == 0 && self.summary.total > 0
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        #[derive(Serialize)]
        struct Row<'a> {
            name: &'a str,
            model: &'a str,
            c: Option<f64>,
            point: Option<usize>,
            computed: Option<f64>,
            expected: Option<f64>,
            tolerance: f64,
            test: Test,
            pass: bool,
            detail: &'a str,
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(Row {
                name: &r.name,
                model: &r.model,
                c: r.c,
                point: r.point,
                computed: r.computed,
                expected: r.expected,
                tolerance: r.tolerance,
                test: r.test,
                pass: r.pass,
                detail: &r.detail,
            })?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> Environment {
        Environment {
            command: "t".into(),
            version: "0".into(),
            config_hash: String::new(),
            seed: 0,
            s: 1.0,
            sigma: None,
            config: serde_json::Value::Null,
        }
    }

    #[test]
    fn tests_decide_pass() {
        let s = Site::default();
        assert!(s.measure("a", Test::Rel, 1.0005, Some(1.0), 1e-3).pass);
        assert!(!s.measure("a", Test::Rel, 1.002, Some(1.0), 1e-3).pass);
        assert!(s.measure("a", Test::Abs, -1e-11, Some(0.0), 1e-10).pass);
        assert!(s.measure("a", Test::AtMost, 1e-5, None, 1e-4).pass);
        assert!(!s.measure("a", Test::AtLeast, 1.0, Some(2.0), 1e-6).pass);
        let nan = s.measure("a", Test::AtMost, f64::NAN, None, 1.0);
        assert!(!nan.pass && nan.computed.is_none());
        assert!(!s.error("a", "boom").pass);
    }

    #[test]
    fn sorted_and_counted() {
        let site = |p| Site { point: Some(p), ..Default::default() };
        let recs = vec![
            site(1).flag("b", true, None, ""),
            site(0).flag("b", false, None, "x"),
            site(0).flag("a", true, None, ""),
        ];
        let r = Report::assemble(env(), recs);
        let order: Vec<_> = r.records.iter().map(|r| (r.name.as_str(), r.point)).collect();
        assert_eq!(order, vec![("a", Some(0)), ("b", Some(0)), ("b", Some(1))]);
        assert_eq!(r.summary.by_name["b"], [1, 2]);
        assert!(!r.all_pass());
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("name,model,c,point,computed,expected,tolerance,test,pass,detail\n"));
        assert_eq!(csv.lines().count(), 4);
        assert!(r.to_json().contains("\"schema\": 1"));
    }

    #[test]
    fn hash_is_stable() {
        let v = serde_json::json!({"a": 1});
        assert_eq!(config_hash(&v), config_hash(&serde_json::json!({"a": 1})));
        assert_eq!(config_hash(&v).len(), 64);
    }
}
