//! CSV and plain-text report files.
//!
//! Floats are written with `Display`, which prints the shortest string that
//! parses back to the same `f64`, so equal runs give byte-equal files.
//!
//! | file | columns |
//! |------|---------|
//! | trajectory | `t,S,A,I,R` (+ `u1,u2` when controlled) |
//! | ensemble | `t,mean_S,..,mean_R,q05_S,..,q50_S,..,q95_S,..` |
//! | histogram | `bin_left,bin_right,mass` |
//! | controls | `t,u1,u2` |
//! | comparison | `t,S_unc,..,R_unc,S_ctl,..,R_ctl` (ensemble means) |

use std::fs;
use std::path::{Path, PathBuf};

use sairs_core::analysis::Histogram;
use sairs_core::control::ControlGrid;
use sairs_core::ensemble::EnsembleSummary;
use sairs_core::{ControlValue, State};

use crate::error::{CliError, Result};

const NAMES: [&str; 4] = ["S", "A", "I", "R"];

fn render(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .expect("writing to memory");
    }
    w.into_inner().expect("flushing to memory")
}

fn strings(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// `t,S,A,I,R[,u1,u2]`; the control on row `k` is the one applied on
/// `[t_k, t_{k+1})`, and the last row repeats the final interval's value.
pub fn trajectory_csv(times: &[f64], states: &[State], controls: Option<&[ControlValue]>) -> Vec<u8> {
    let mut header = strings(&["t", "S", "A", "I", "R"]);
    if controls.is_some() {
        header.extend(strings(&["u1", "u2"]));
    }
    let rows = times.iter().zip(states).enumerate().map(|(k, (&t, x))| {
        let mut row = vec![t, x.s, x.a, x.i, x.r];
        if let Some(u) = controls {
            if let Some(c) = u.get(k.min(u.len().saturating_sub(1))) {
                row.extend([c.u1, c.u2]);
            }
        }
        row
    });
    render(&header, rows)
}

pub fn ensemble_csv(e: &EnsembleSummary) -> Vec<u8> {
    let mut header = vec!["t".to_string()];
    for prefix in ["mean", "q05", "q50", "q95"] {
        header.extend(NAMES.iter().map(|n| format!("{prefix}_{n}")));
    }
    let rows = (0..e.times.len()).map(|k| {
        let mut row = vec![e.times[k]];
        for block in [&e.mean, &e.q05, &e.q50, &e.q95] {
            row.extend(block[k]);
        }
        row
    });
    render(&header, rows)
}

pub fn histogram_csv(h: &Histogram) -> Vec<u8> {
    let rows = h
        .masses
        .iter()
        .enumerate()
        .map(|(k, &m)| vec![h.edges[k], h.edges[k + 1], m]);
    render(&strings(&["bin_left", "bin_right", "mass"]), rows)
}

pub fn controls_csv(c: &ControlGrid) -> Vec<u8> {
    let rows = (0..c.len()).map(|k| vec![c.grid.time(k), c.u1[k], c.u2[k]]);
    render(&strings(&["t", "u1", "u2"]), rows)
}

pub fn comparison_csv(uncontrolled: &EnsembleSummary, controlled: &EnsembleSummary) -> Vec<u8> {
    let mut header = vec!["t".to_string()];
    header.extend(NAMES.iter().map(|n| format!("{n}_unc")));
    header.extend(NAMES.iter().map(|n| format!("{n}_ctl")));
    let rows = (0..uncontrolled.times.len()).map(|k| {
        let mut row = vec![uncontrolled.times[k]];
        row.extend(uncontrolled.mean[k]);
        row.extend(controlled.mean[k]);
        row
    });
    render(&header, rows)
}

/// Ordered `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub lines: Vec<(String, String)>,
}

impl Report {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.lines.push((key.into(), value.to_string()));
        self
    }

    pub fn push_list(&mut self, key: impl Into<String>, values: &[f64]) -> &mut Self {
        let joined: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.push(key, joined.join(","))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.lines {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        }
        s
    }
}

/// Files written by one command. Each file is written to a temporary name
/// and renamed into place; [`Outputs::discard`] deletes what was written so
/// a failed command leaves no partial results.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.partial"));
        fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            CliError::io(&path, e)
        })?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn discard(self) {
        for p in self.written {
            let _ = fs::remove_file(p);
        }
    }
}
