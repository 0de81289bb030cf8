//! Triplet CSV: a `#` line echoing the sampling configuration, a header
//! `rA,cA,rB,cB,rC,cC`, then one row per triplet.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sampling::{Triplet, TripletSet};

pub const TRIPLET_HEADER: &str = "rA,cA,rB,cB,rC,cC";

/// Serializes `set`. The output depends only on the configuration and the
/// accepted triplets, never on the thread count.
pub fn triplets_csv(set: &TripletSet) -> String {
    let c = &set.config;
    let mut out = format!(
        "# n_groups={} alpha_deg={} beta_deg={} theta_m={} seed={} max_attempts_per_group={} accepted={} attempts_used={} underfull={}\n{TRIPLET_HEADER}\n",
        c.n_groups, c.alpha_deg, c.beta_deg, c.theta_m, c.seed, c.max_attempts_per_group,
        set.len(), set.attempts_used, set.underfull
    );
    for t in &set.triplets {
        let _ = writeln!(out, "{},{},{},{},{},{}", t[0].0, t[0].1, t[1].0, t[1].1, t[2].0, t[2].1);
    }
    out
}

pub fn write_triplets_csv(path: &Path, set: &TripletSet) -> Result<()> {
    fs::write(path, triplets_csv(set))?;
    Ok(())
}

pub fn parse_triplets_csv(text: &str) -> Result<Vec<Triplet>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    let mut seen_header = false;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len() as u64;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line.replace(' ', "") != TRIPLET_HEADER {
                return Err(Error::format(start, format!("expected header {TRIPLET_HEADER}")));
            }
            seen_header = true;
            continue;
        }
        let nums: Vec<usize> = line
            .split(',')
            .map(|f| f.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(start, format!("bad triplet row {line:?}")))?;
        if nums.len() != 6 {
            return Err(Error::format(start, format!("expected 6 fields, found {}", nums.len())));
        }
        out.push([(nums[0], nums[1]), (nums[2], nums[3]), (nums[4], nums[5])]);
    }
    if !seen_header {
        return Err(Error::format(offset, "missing header"));
    }
    Ok(out)
}

pub fn read_triplets_csv(path: &Path) -> Result<Vec<Triplet>> {
    parse_triplets_csv(&fs::read_to_string(path)?)
}
