//! Grid sweeps over `(alpha, a)` with an append-only journal of finished
//! nodes, so an interrupted run picks up where it stopped.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use halfspec::radial_operator::{Params, Sign};
use halfspec::shooting::ShootConfig;
use halfspec::spectrum::eigenvalues_ball;
use log::{debug, info};
use rayon::prelude::*;

use crate::config::Signs;
use crate::output::{num, opt_num};
use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub params: Params,
    pub k: usize,
}

impl Node {
    pub fn key(&self, signs: Signs) -> String {
        let p = &self.params;
        let s = match signs {
            Signs::Plus => "plus",
            Signs::Minus => "minus",
            Signs::Both => "both",
        };
        format!("alpha={};a={};A={};dim={};k={};sign={s}", num(p.alpha), num(p.lower), num(p.upper), p.dim, self.k)
    }
}

pub type Outcome = (Option<f64>, Option<f64>);

/// Completed nodes recorded in `path`. A torn last line is ignored.
pub fn read_journal(path: &Path) -> Result<HashMap<String, Outcome>, Failure> {
    let mut done = HashMap::new();
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(Failure::Input(format!("cannot read journal {}: {e}", path.display()))),
    };
    for line in text.lines() {
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 4 || f[3] != "." {
            continue;
        }
        let parse = |s: &str| -> Option<Option<f64>> {
            if s.is_empty() {
                Some(None)
            } else {
                s.parse().ok().map(Some)
            }
        };
        if let (Some(p), Some(m)) = (parse(f[1]), parse(f[2])) {
            done.insert(f[0].to_string(), (p, m));
        }
    }
    Ok(done)
}

fn solve_node(node: &Node, signs: Signs, cfg: &ShootConfig) -> halfspec::Result<Outcome> {
    let one = |sign| -> halfspec::Result<f64> { Ok(eigenvalues_ball(&node.params, sign, node.k, cfg)?.mus[node.k - 1]) };
    Ok(match signs {
        Signs::Plus => (Some(one(Sign::Plus)?), None),
        Signs::Minus => (None, Some(one(Sign::Minus)?)),
        Signs::Both => (Some(one(Sign::Plus)?), Some(one(Sign::Minus)?)),
    })
}

pub struct SweepResult {
    pub node: Node,
    pub outcome: Result<Outcome, String>,
    pub resumed: bool,
}

/// Solves every node not already in the journal on `jobs` threads,
/// appending each success to the journal before moving on.
pub fn run(nodes: &[Node], signs: Signs, cfg: &ShootConfig, journal: &Path, jobs: usize) -> Result<Vec<SweepResult>, Failure> {
    let done = read_journal(journal)?;
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(journal)
        .map_err(|e| Failure::Input(format!("cannot open journal {}: {e}", journal.display())))?;
    let writer: Mutex<File> = Mutex::new(file);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Failure::Input(format!("cannot start {jobs} workers: {e}")))?;
    info!("sweep: {} nodes, {} already journaled", nodes.len(), nodes.iter().filter(|n| done.contains_key(&n.key(signs))).count());

    let results = pool.install(|| {
        nodes
            .par_iter()
            .map(|node| -> Result<SweepResult, Failure> {
                let key = node.key(signs);
                if let Some(&o) = done.get(&key) {
                    return Ok(SweepResult { node: *node, outcome: Ok(o), resumed: true });
                }
                let outcome = solve_node(node, signs, cfg).map_err(|e| e.to_string());
                match &outcome {
                    Ok((p, m)) => {
                        let line = format!("{key}\t{}\t{}\t.\n", opt_num(*p), opt_num(*m));
                        let mut f = writer.lock().unwrap_or_else(|e| e.into_inner());
                        f.write_all(line.as_bytes())
                            .and_then(|_| f.sync_data())
                            .map_err(|e| Failure::Input(format!("journal write failed: {e}")))?;
                    }
                    Err(e) => debug!("node {key} failed: {e}"),
                }
                Ok(SweepResult { node: *node, outcome, resumed: false })
            })
            .collect::<Result<Vec<_>, Failure>>()
    })?;
    Ok(results)
}
