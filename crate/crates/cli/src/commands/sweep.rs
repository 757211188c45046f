use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use vortex_core::experiment::curve_distance;
use vortex_core::io::{read_snapshot, snapshot_stem, write_json, write_table};
use vortex_core::ModelParams;

use super::pair::{self, PairReport};
use super::{prepare, write_record};
use crate::config::{load, Overrides, PairConfig, SweepConfig};
use crate::error::CliError;

#[derive(Debug, Clone)]
struct Member {
    label: String,
    config: PairConfig,
}

#[derive(Debug, Serialize)]
struct MemberResult {
    label: String,
    epsilon: f64,
    r_c: f64,
    report: Option<PairReport>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct Distance {
    epsilon: f64,
    r_c_a: f64,
    r_c_b: f64,
    distance: f64,
}

fn members(cfg: &SweepConfig) -> Result<Vec<Member>, CliError> {
    let base = &cfg.base.run.params;
    let epsilons = if cfg.epsilons.is_empty() { vec![base.epsilon] } else { cfg.epsilons.clone() };
    let r_cs = if cfg.r_cs.is_empty() { vec![base.r_c] } else { cfg.r_cs.clone() };
    let mut out = Vec::new();
    for &eps in &epsilons {
        for &rc in &r_cs {
            let mut config = cfg.base.clone();
            config.run.params = ModelParams::reconnection(eps, rc)?;
            config.validate()?;
            out.push(Member { label: format!("eps{eps}_rc{rc:e}"), config });
        }
    }
    Ok(out)
}

pub fn run(config: Option<&Path>, overrides: &Overrides, workers: Option<usize>, out: &Path) -> Result<(), CliError> {
    let mut cfg: SweepConfig = load(config)?;
    cfg.base.apply(overrides)?;
    let list = members(&cfg)?;
    if workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    prepare(out)?;
    write_record(out, "sweep", &cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start workers: {e}")))?;
    let results: Vec<MemberResult> = pool.install(|| {
        list.par_iter()
            .map(|m| {
                let dir = out.join(&m.label);
                let res = prepare(&dir).and_then(|_| pair::execute(&m.config, &dir));
                let p = m.config.run.params;
                let (report, error) = match res {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_json())),
                };
                MemberResult { label: m.label.clone(), epsilon: p.epsilon, r_c: p.r_c, report, error }
            })
            .collect()
    });
    write_table(
        &out.join("sweep.csv"),
        &["epsilon", "r_c", "final_time", "steps", "onset"],
        results.iter().map(|r| {
            let rep = r.report.as_ref();
            vec![
                r.epsilon,
                r.r_c,
                rep.map_or(f64::NAN, |x| x.final_time),
                rep.map_or(f64::NAN, |x| x.stats.steps as f64),
                rep.and_then(|x| x.detection).map_or(f64::NAN, |d| d.time),
            ]
        }),
    )?;
    let distances = final_distances(out, &list, &results)?;
    write_json(&out.join("sweep.json"), &serde_json::json!({ "members": results, "distances": distances }))?;
    match results.iter().find(|r| r.error.is_some()) {
        Some(r) => Err(CliError::Solver { message: format!("member {} failed", r.label), snapshot: None }),
        None => Ok(()),
    }
}

/// L² distance between final curves of consecutive core radii (largest
/// first) at equal interaction strength.
fn final_distances(out: &Path, list: &[Member], results: &[MemberResult]) -> Result<Vec<Distance>, CliError> {
    let mut done: Vec<(f64, f64, &Member)> =
        list.iter().zip(results).filter(|(_, r)| r.report.is_some()).map(|(m, r)| (r.epsilon, r.r_c, m)).collect();
    done.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut dist = Vec::new();
    for w in done.windows(2) {
        let ((eps_a, rc_a, a), (eps_b, rc_b, b)) = (w[0], w[1]);
        if eps_a != eps_b {
            continue;
        }
        let stem = snapshot_stem(a.config.run.t_end);
        let (sa, _) = read_snapshot(&out.join(&a.label).join("snapshots"), &stem)?;
        let (sb, _) = read_snapshot(&out.join(&b.label).join("snapshots"), &stem)?;
        let distance = curve_distance(&sa, &sb).map_err(|e| CliError::Data(e.to_string()))?;
        dist.push(Distance { epsilon: eps_a, r_c_a: rc_a, r_c_b: rc_b, distance });
    }
    Ok(dist)
}
