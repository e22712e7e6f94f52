use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of one seed. Metric fields are `None` when the seed failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub asr: Option<f64>,
    pub successes: Option<usize>,
    pub attack_total: Option<usize>,
    pub auc_clean: Option<f64>,
    pub auc_backdoor: Option<f64>,
    pub bpd: Option<f64>,
    /// `[n, n′, n″]` of the clean and backdoored test AUC.
    pub counts_clean: Option<[u64; 3]>,
    pub counts_backdoor: Option<[u64; 3]>,
    pub runtime_s: Option<f64>,
    pub failed: Option<String>,
}

impl SeedResult {
    pub fn failure(seed: u64, reason: impl Into<String>) -> Self {
        SeedResult {
            seed,
            asr: None,
            successes: None,
            attack_total: None,
            auc_clean: None,
            auc_backdoor: None,
            bpd: None,
            counts_clean: None,
            counts_backdoor: None,
            runtime_s: None,
            failed: Some(reason.into()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.failed.is_some()
    }
}

/// Mean or standard deviation over the successful seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub asr: f64,
    pub auc_clean: f64,
    pub auc_backdoor: f64,
    pub bpd: f64,
    pub runtime_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dataset: String,
    pub model: String,
    /// Poisoning mode, suffixed with `-random` for random selection.
    pub mode: String,
    pub p: f64,
    pub lambda: f64,
    pub q: usize,
    pub k: usize,
    pub seeds: Vec<SeedResult>,
    pub mean: Option<Summary>,
    /// Sample standard deviation (zero for a single seed).
    pub std: Option<Summary>,
    pub failed_seeds: usize,
    pub runtime_s: Option<f64>,
    pub version: String,
    pub config: BTreeMap<String, String>,
}

impl MetricsReport {
    /// Aggregates per-seed results. The mean BPD is defined as
    /// `mean(AUC_c) − mean(AUC_b)` so the identity holds exactly.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        dataset: &str,
        model: String,
        mode: String,
        p: f64,
        lambda: f64,
        q: usize,
        k: usize,
        seeds: Vec<SeedResult>,
        runtime_s: f64,
        config: BTreeMap<String, String>,
    ) -> Self {
        let ok: Vec<&SeedResult> = seeds.iter().filter(|s| !s.is_failed()).collect();
        let col = |f: fn(&SeedResult) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|s| f(s)).collect() };
        let asr = col(|s| s.asr);
        let c = col(|s| s.auc_clean);
        let b = col(|s| s.auc_backdoor);
        let d = col(|s| s.bpd);
        let t = col(|s| s.runtime_s);
        let (mean, std) = if ok.is_empty() {
            (None, None)
        } else {
            let mc = mean_of(&c);
            let mb = mean_of(&b);
            (
                Some(Summary {
                    asr: mean_of(&asr),
                    auc_clean: mc,
                    auc_backdoor: mb,
                    bpd: mc - mb,
                    runtime_s: (!t.is_empty()).then(|| mean_of(&t)),
                }),
                Some(Summary {
                    asr: std_of(&asr),
                    auc_clean: std_of(&c),
                    auc_backdoor: std_of(&b),
                    bpd: std_of(&d),
                    runtime_s: (!t.is_empty()).then(|| std_of(&t)),
                }),
            )
        };
        MetricsReport {
            dataset: dataset.to_string(),
            model,
            mode,
            p,
            lambda,
            q,
            k,
            failed_seeds: seeds.len() - ok.len(),
            seeds,
            mean,
            std,
            runtime_s: Some(runtime_s),
            version: crate::VERSION.to_string(),
            config,
        }
    }

    pub fn all_succeeded(&self) -> bool {
        self.failed_seeds == 0
    }

    /// Drops wall-clock fields so that reruns produce identical artifacts.
    pub fn strip_timing(&mut self) {
        self.runtime_s = None;
        for s in &mut self.seeds {
            s.runtime_s = None;
        }
        for summary in [&mut self.mean, &mut self.std].into_iter().flatten() {
            summary.runtime_s = None;
        }
    }
}

fn mean_of(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn std_of(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean_of(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn csv_header() -> &'static str {
    "dataset,model,mode,p,lambda,seed,asr,auc_clean,auc_backdoor,bpd,runtime_s,failed"
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with `#` comment lines carrying the version and configuration, one
/// row per seed and `mean`/`std` rows per report.
pub fn write_csv(reports: &[MetricsReport], config: &BTreeMap<String, String>) -> Result<String> {
    let mut out = format!("# {}\n", crate::VERSION);
    for (k, v) in config {
        out.push_str(&format!("# {k} = {v}\n"));
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let header: Vec<&str> = csv_header().split(',').collect();
    let csv_err = |e: csv::Error| Error::invalid("csv", e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for r in reports {
        let lead = [r.dataset.clone(), r.model.clone(), r.mode.clone(), r.p.to_string(), r.lambda.to_string()];
        for s in &r.seeds {
            let mut row = lead.to_vec();
            row.extend([
                s.seed.to_string(),
                opt(s.asr),
                opt(s.auc_clean),
                opt(s.auc_backdoor),
                opt(s.bpd),
                opt(s.runtime_s),
                s.failed.clone().unwrap_or_default(),
            ]);
            w.write_record(&row).map_err(csv_err)?;
        }
        for (label, summary) in [("mean", &r.mean), ("std", &r.std)] {
            let mut row = lead.to_vec();
            row.push(label.to_string());
            match summary {
                Some(m) => row.extend([
                    m.asr.to_string(),
                    m.auc_clean.to_string(),
                    m.auc_backdoor.to_string(),
                    m.bpd.to_string(),
                    opt(m.runtime_s),
                    r.failed_seeds.to_string(),
                ]),
                None => row.extend(["", "", "", "", ""].map(String::from).into_iter().chain([r.failed_seeds.to_string()])),
            }
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    let body = w.into_inner().map_err(|e| Error::invalid("csv", e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(out)
}

/// `<dataset>_<model>_p<p>_l<λ>_s<seed>.json`
pub fn record_file_name(report: &MetricsReport, seed: u64) -> String {
    let mut name = format!("{}_{}", report.dataset, report.model);
    if report.mode != "pairs" {
        name.push('_');
        name.push_str(&report.mode);
    }
    name.push_str(&format!("_p{}_l{}_s{seed}.json", report.p, report.lambda));
    name
}

/// Writes one JSON record per seed (the report with that seed only).
pub fn write_seed_records(report: &MetricsReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for s in &report.seeds {
        let record = MetricsReport {
            seeds: vec![s.clone()],
            ..report.clone()
        };
        let path = dir.join(record_file_name(report, s.seed));
        let text = serde_json::to_string_pretty(&record)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seed(seed: u64, asr: f64, c: f64, b: f64) -> SeedResult {
        SeedResult {
            asr: Some(asr),
            successes: Some((asr * 10.0) as usize),
            attack_total: Some(10),
            auc_clean: Some(c),
            auc_backdoor: Some(b),
            bpd: Some(c - b),
            runtime_s: Some(1.0),
            failed: None,
            ..SeedResult::failure(seed, "")
        }
    }

    fn report(seeds: Vec<SeedResult>) -> MetricsReport {
        MetricsReport::new("toy", "gae".into(), "pairs".into(), 0.01, 0.02, 3, 4, seeds, 2.0, BTreeMap::new())
    }

    #[test]
    fn aggregates_skip_failed_seeds() {
        let r = report(vec![seed(0, 0.7, 0.9, 0.8), SeedResult::failure(1, "diverged"), seed(2, 0.9, 0.8, 0.8)]);
        let m = r.mean.unwrap();
        assert!((m.asr - 0.8).abs() < 1e-12);
        assert_eq!(m.bpd, m.auc_clean - m.auc_backdoor);
        assert_eq!(r.failed_seeds, 1);
        assert!((r.std.unwrap().asr - 0.2 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn csv_layout() {
        let mut r = report(vec![seed(0, 0.5, 0.9, 0.85)]);
        r.strip_timing();
        let text = write_csv(&[r], &BTreeMap::from([("epochs".to_string(), "200".to_string())])).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# gbl "));
        assert_eq!(lines[1], "# epochs = 200");
        assert_eq!(lines[2], csv_header());
        assert_eq!(lines[3], format!("toy,gae,pairs,0.01,0.02,0,0.5,0.9,0.85,{},,", 0.9 - 0.85));
        assert!(lines[4].starts_with("toy,gae,pairs,0.01,0.02,mean,0.5,"));
        assert!(lines[5].ends_with(",0"));
    }

    #[test]
    fn seed_records_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(vec![seed(3, 0.5, 0.9, 0.85), seed(4, 0.6, 0.9, 0.85)]);
        let paths = write_seed_records(&r, dir.path()).unwrap();
        assert_eq!(paths[0].file_name().unwrap(), "toy_gae_p0.01_l0.02_s3.json");
        let back: MetricsReport = serde_json::from_str(&std::fs::read_to_string(&paths[1]).unwrap()).unwrap();
        assert_eq!(back.seeds, vec![r.seeds[1].clone()]);
    }
}
