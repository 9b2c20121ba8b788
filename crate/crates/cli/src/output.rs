//! CSV and key=value emitters.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use stoq_core::simulate::Trajectory;

use crate::error::CliError;

/// Seventeen significant digits: enough to round-trip any `f64`. Negative
/// zero is printed as zero.
pub fn fmt_f64(v: f64) -> String {
    format!("{:.16e}", v + 0.0)
}

/// Ordered `key=value` pairs, printed to stdout and optionally saved.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, fmt_f64(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn write_to(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.render()).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

pub fn trajectory_header(n: usize, n_r: usize, p: usize, m: usize, q: usize) -> Vec<String> {
    let mut h = vec!["k".to_string()];
    let mut group = |prefix: &str, len: usize| h.extend((1..=len).map(|i| format!("{prefix}_{i}")));
    group("x", n);
    group("xhat", n);
    group("xr", n_r);
    group("y", p);
    group("v", p);
    group("u", m);
    group("ey", q);
    h.push("d_k".to_string());
    h
}

pub fn write_trajectory<W: Write>(out: W, t: &Trajectory) -> Result<(), CliError> {
    let Some(first) = t.records.first() else {
        return Ok(());
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trajectory_header(
        first.x.len(),
        first.x_r.len(),
        first.y.len(),
        first.u.len(),
        first.e_y.len(),
    ))?;
    for r in &t.records {
        let mut row = vec![r.k.to_string()];
        for v in [&r.x, &r.x_hat, &r.x_r, &r.y, &r.v, &r.u, &r.e_y] {
            row.extend(v.iter().map(|&x| fmt_f64(x)));
        }
        row.push(fmt_f64(r.d_k));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
