use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::control::LoopRef;
use crate::error::{Error, Result};
use crate::model::{InputTag, LoopSignal, OutputTag};

/// Dense state-space realisation with tagged channels.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub state_names: Vec<String>,
    pub input_tags: Vec<InputTag>,
    pub output_tags: Vec<OutputTag>,
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
}

/// Single-input single-output slice of a [`LinearModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct SisoPath {
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
}

/// Disturbance-to-signal paths of one loop with every other loop closed.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisChannel {
    pub loop_ref: LoopRef,
    /// `d → s`
    pub sensitivity: SisoPath,
    /// `d → t`
    pub controller: SisoPath,
}

impl LinearModel {
    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let n = self.a.nrows();
        let ok = self.a.ncols() == n
            && self.b.nrows() == n
            && self.c.ncols() == n
            && self.d.nrows() == self.c.nrows()
            && self.d.ncols() == self.b.ncols()
            && self.input_tags.len() == self.b.ncols()
            && self.output_tags.len() == self.c.nrows()
            && self.state_names.len() == n;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("inconsistent linear model dimensions".into()))
        }
    }

    pub fn input_index(&self, tag: InputTag) -> Result<usize> {
        self.input_tags
            .iter()
            .position(|&t| t == tag)
            .ok_or_else(|| Error::MissingTag(format!("{tag:?}")))
    }

    pub fn output_index(&self, tag: OutputTag) -> Result<usize> {
        self.output_tags
            .iter()
            .position(|&t| t == tag)
            .ok_or_else(|| Error::MissingTag(format!("{tag:?}")))
    }

    pub fn siso(&self, input: InputTag, output: OutputTag) -> Result<SisoPath> {
        let i = self.input_index(input)?;
        let o = self.output_index(output)?;
        Ok(SisoPath {
            b: self.b.column(i).into_owned(),
            c: self.c.row(o).into_owned(),
            d: self.d[(o, i)],
        })
    }

    pub fn eigenvalues(&self) -> Vec<num_complex::Complex<f64>> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }

    /// Largest real part among the eigenvalues.
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues().iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_stable(&self) -> bool {
        self.spectral_abscissa() < 0.0
    }

    /// Plain-text export: header with tags, then row-major matrices.
    pub fn export_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# linear model");
        let _ = writeln!(
            s,
            "# dims states={} inputs={} outputs={}",
            self.a.nrows(),
            self.b.ncols(),
            self.c.nrows()
        );
        let _ = writeln!(s, "# states {}", self.state_names.join(" "));
        let _ = writeln!(s, "# inputs {}", self.input_names.join(" "));
        let _ = writeln!(s, "# outputs {}", self.output_names.join(" "));
        for (name, m) in [("A", &self.a), ("B", &self.b), ("C", &self.c), ("D", &self.d)] {
            let _ = writeln!(s, "{name} {} {}", m.nrows(), m.ncols());
            for r in 0..m.nrows() {
                let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:e}", m[(r, c)])).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
        }
        s
    }

    /// Parses matrices back from [`LinearModel::export_text`]; tags are not restored.
    pub fn parse_matrices(text: &str) -> Result<[DMatrix<f64>; 4]> {
        let bad = |m: &str| Error::Parse { what: "linear model".into(), message: m.to_string() };
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let mut out: Vec<DMatrix<f64>> = Vec::new();
        for _ in 0..4 {
            let head = lines.next().ok_or_else(|| bad("missing matrix header"))?;
            let mut it = head.split_whitespace().skip(1);
            let r: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("rows"))?;
            let c: usize = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("cols"))?;
            let mut m = DMatrix::zeros(r, c);
            for i in 0..r {
                let line = lines.next().ok_or_else(|| bad("missing row"))?;
                for (j, v) in line.split_whitespace().enumerate() {
                    m[(i, j)] = v.parse().map_err(|_| bad("bad number"))?;
                }
            }
            out.push(m);
        }
        Ok([out[0].clone(), out[1].clone(), out[2].clone(), out[3].clone()])
    }
}

/// The two SISO subsystems of loop `loop_ref`.
pub fn extract_channel(lin: &LinearModel, loop_ref: LoopRef) -> Result<AnalysisChannel> {
    let input = InputTag::Disturbance(loop_ref);
    Ok(AnalysisChannel {
        loop_ref,
        sensitivity: lin.siso(input, OutputTag::Loop(loop_ref, LoopSignal::S))?,
        controller: lin.siso(input, OutputTag::Loop(loop_ref, LoopSignal::T))?,
    })
}
