use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Channels sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub names: Vec<String>,
    /// `columns[c][k]` is channel `c` at `t0 + k·dt`.
    pub columns: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, names: Vec<String>) -> Self {
        let columns = vec![Vec::new(); names.len()];
        Self { t0, dt, names, columns }
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len());
        for (c, v) in self.columns.iter_mut().zip(row) {
            c.push(*v);
        }
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    fn require(&self, name: &str) -> Result<&[f64]> {
        self.channel(name).ok_or_else(|| Error::MissingTag(name.to_string()))
    }

    pub fn is_finite(&self) -> bool {
        self.columns.iter().flatten().all(|v| v.is_finite())
    }

    /// First sample index at or after `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let k = ((t - self.t0) / self.dt - 1e-9).ceil().max(0.0) as usize;
        k.min(self.len())
    }

    /// Largest absolute value of a channel from `t_from` on.
    pub fn peak_abs(&self, name: &str, t_from: f64) -> Result<f64> {
        let c = self.require(name)?;
        Ok(c[self.index_at(t_from)..].iter().fold(0.0, |m, v| m.max(v.abs())))
    }

    /// Largest excursion from the last value before `t_event`.
    pub fn peak_deviation(&self, name: &str, t_event: f64) -> Result<f64> {
        let c = self.require(name)?;
        let k = self.index_at(t_event);
        let base = c[k.saturating_sub(1)];
        Ok(c[k..].iter().fold(0.0, |m, v| m.max((v - base).abs())))
    }

    /// Time after which the channel stays within `band` of its final value.
    pub fn settling_time(&self, name: &str, band: f64) -> Result<f64> {
        let c = self.require(name)?;
        let last = *c.last().ok_or_else(|| Error::MissingTag(name.to_string()))?;
        let k = c.iter().rposition(|v| (v - last).abs() > band).map_or(0, |k| k + 1);
        Ok(self.time(k))
    }

    /// Keeps every `n`-th sample.
    pub fn decimate(&self, n: usize) -> Self {
        let n = n.max(1);
        Self {
            t0: self.t0,
            dt: self.dt * n as f64,
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| c.iter().step_by(n).copied().collect()).collect(),
        }
    }

    /// Side-by-side channels of two runs on the same grid.
    pub fn overlay(a: &TimeSeries, prefix_a: &str, b: &TimeSeries, prefix_b: &str) -> Result<Self> {
        if a.len() != b.len() || a.dt != b.dt || a.t0 != b.t0 {
            return Err(Error::Config("overlaid series need the same time grid".into()));
        }
        let names = a
            .names
            .iter()
            .map(|n| format!("{prefix_a}{n}"))
            .chain(b.names.iter().map(|n| format!("{prefix_b}{n}")))
            .collect();
        let columns = a.columns.iter().chain(&b.columns).cloned().collect();
        Ok(Self { t0: a.t0, dt: a.dt, names, columns })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time");
        for n in &self.names {
            s.push(',');
            s.push_str(n);
        }
        s.push('\n');
        for k in 0..self.len() {
            let _ = write!(s, "{:.9}", self.time(k));
            for c in &self.columns {
                let _ = write!(s, ",{:.12e}", c[k]);
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse { what: "time series".into(), message: m.to_string() };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))?;
        let mut cols = header.split(',');
        if cols.next() != Some("time") {
            return Err(bad("first column must be `time`"));
        }
        let names: Vec<String> = cols.map(str::to_string).collect();
        let mut times = Vec::new();
        let mut out = TimeSeries::new(0.0, 0.0, names);
        for (i, line) in lines.enumerate() {
            let v: Vec<f64> = line
                .split(',')
                .map(|x| x.parse::<f64>().map_err(|e| bad(&format!("line {}: {e}", i + 2))))
                .collect::<Result<_>>()?;
            if v.len() != out.names.len() + 1 {
                return Err(bad(&format!("line {}: wrong column count", i + 2)));
            }
            times.push(v[0]);
            out.push(&v[1..]);
        }
        if let [t0, t1, ..] = times[..] {
            out.t0 = t0;
            out.dt = t1 - t0;
        }
        Ok(out)
    }
}
