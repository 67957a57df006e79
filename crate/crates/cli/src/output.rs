//! CSV and JSON writers. Floats are printed in shortest round-trip form, so identical
//! inputs give byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use scatter1d::amplitudes::{AmplitudeSet, IdentityReport};
use scatter1d::bound_states::BoundState;
use scatter1d::evolve::{EvolutionFrame, ProbabilityRecord};
use scatter1d::fd_oracle::GridFrame;

use crate::RunError;

#[derive(Serialize)]
struct FrameRow {
    x: f64,
    re_psi: f64,
    im_psi: f64,
    abs2: f64,
    abs2_positive: Option<f64>,
    abs2_negative: Option<f64>,
    abs2_evanescent: Option<f64>,
    abs2_bound: Option<f64>,
}

#[derive(Serialize)]
struct SeriesRow {
    t: f64,
    #[serde(rename = "P_T")]
    p_t: f64,
    #[serde(rename = "P_plus")]
    p_plus: f64,
    #[serde(rename = "P_minus")]
    p_minus: f64,
    #[serde(rename = "P_int")]
    p_int: f64,
    #[serde(rename = "P_evan")]
    p_evan: f64,
    #[serde(rename = "P_bound")]
    p_bound: f64,
    #[serde(rename = "P_int_other")]
    p_int_other: f64,
}

#[derive(Serialize)]
struct AmplitudeRow {
    p: f64,
    q_re: f64,
    q_im: f64,
    tl_re: f64,
    tl_im: f64,
    rl_re: f64,
    rl_im: f64,
    tr_re: f64,
    tr_im: f64,
    rr_re: f64,
    rr_im: f64,
    uni1: Option<f64>,
    uni2: Option<f64>,
    uni3: Option<f64>,
    uni4: Option<f64>,
    evan: Option<f64>,
    pm: Option<f64>,
    tlr: Option<f64>,
    max_residual: Option<f64>,
}

/// The bound-state report entry.
#[derive(Debug, Clone, Serialize)]
pub struct BoundRow {
    pub gamma: f64,
    pub energy: f64,
    pub n_squared: f64,
    pub residue_re: f64,
    pub residue_im: f64,
    pub residue_derivative_re: f64,
    pub residue_derivative_im: f64,
    pub residue_relative_difference: f64,
    pub unreliable: bool,
}

impl From<&BoundState> for BoundRow {
    fn from(s: &BoundState) -> Self {
        Self {
            gamma: s.gamma,
            energy: s.energy,
            n_squared: s.n_squared,
            residue_re: s.residue_tl.re,
            residue_im: s.residue_tl.im,
            residue_derivative_re: s.residue_tl_derivative.re,
            residue_derivative_im: s.residue_tl_derivative.im,
            residue_relative_difference: s.residue_relative_difference(),
            unreliable: s.unreliable,
        }
    }
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Write { path: dir.into(), source })?;
    }
    let f = File::create(path).map_err(|source| RunError::Write { path: path.into(), source })?;
    Ok(BufWriter::new(f))
}

fn finish<W: Write>(mut w: csv::Writer<W>, path: &Path) -> Result<(), RunError> {
    w.flush().map_err(|source| RunError::Write { path: path.into(), source })
}

pub fn write_frame(path: &Path, frame: &EvolutionFrame) -> Result<(), RunError> {
    let mut w = csv_writer(create(path)?);
    for j in 0..frame.len() {
        let psi = frame.psi(j);
        w.serialize(FrameRow {
            x: frame.x(j),
            re_psi: psi.re,
            im_psi: psi.im,
            abs2: psi.norm_sqr(),
            abs2_positive: Some(frame.positive[j].norm_sqr()),
            abs2_negative: Some(frame.negative[j].norm_sqr()),
            abs2_evanescent: Some(frame.evanescent[j].norm_sqr()),
            abs2_bound: Some(frame.bound[j].norm_sqr()),
        })?;
    }
    finish(w, path)
}

/// Grid frame restricted to `[lo, hi]`; the channel columns stay empty.
pub fn write_grid_frame(path: &Path, frame: &GridFrame, lo: f64, hi: f64) -> Result<(), RunError> {
    let mut w = csv_writer(create(path)?);
    let eps = 1e-9 * frame.dx;
    for (j, psi) in frame.psi.iter().enumerate() {
        let x = frame.x(j);
        if x < lo - eps || x > hi + eps {
            continue;
        }
        w.serialize(FrameRow {
            x,
            re_psi: psi.re,
            im_psi: psi.im,
            abs2: psi.norm_sqr(),
            abs2_positive: None,
            abs2_negative: None,
            abs2_evanescent: None,
            abs2_bound: None,
        })?;
    }
    finish(w, path)
}

pub fn write_series(path: &Path, records: &[ProbabilityRecord]) -> Result<(), RunError> {
    let mut w = csv_writer(create(path)?);
    for r in records {
        w.serialize(SeriesRow {
            t: r.t,
            p_t: r.p_t,
            p_plus: r.p_plus,
            p_minus: r.p_minus,
            p_int: r.p_int,
            p_evan: r.p_evan,
            p_bound: r.p_bound,
            p_int_other: r.p_int_other,
        })?;
    }
    finish(w, path)
}

/// Amplitude table with the identity residuals where they were computed.
pub fn write_amplitudes<W: Write>(out: W, rows: &[AmplitudeSet], checks: &[Option<IdentityReport>]) -> Result<(), csv::Error> {
    let mut w = csv_writer(out);
    for (a, c) in rows.iter().zip(checks) {
        w.serialize(AmplitudeRow {
            p: a.p.re,
            q_re: a.q.re,
            q_im: a.q.im,
            tl_re: a.tl.re,
            tl_im: a.tl.im,
            rl_re: a.rl.re,
            rl_im: a.rl.im,
            tr_re: a.tr.re,
            tr_im: a.tr.im,
            rr_re: a.rr.re,
            rr_im: a.rr.im,
            uni1: c.and_then(|c| c.uni1),
            uni2: c.and_then(|c| c.uni2),
            uni3: c.and_then(|c| c.uni3),
            uni4: c.and_then(|c| c.uni4),
            evan: c.and_then(|c| c.evan),
            pm: c.map(|c| c.pm),
            tlr: c.map(|c| c.tlr),
            max_residual: c.map(|c| c.max_residual()),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// One row per record, columns named after the fields.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), RunError> {
    let mut w = csv_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    finish(w, path)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut w = create(path)?;
    let io = |source| RunError::Write { path: PathBuf::from(path), source };
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io(e.into()))?;
    w.write_all(b"\n").map_err(io)?;
    w.flush().map_err(io)
}
