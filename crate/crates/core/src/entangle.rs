//! Pairwise entanglement of the three modes via negativity.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::Mode;
use crate::master::DensityMatrix;
use crate::C64;

/// Two kept modes, the traced one, and which kept mode is transposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bipartition {
    pub kept: [Mode; 2],
    pub traced: Mode,
    pub transpose_side: Mode,
}

impl Bipartition {
    pub fn new(kept: [Mode; 2], transpose_side: Mode) -> Result<Self> {
        if kept[0] == kept[1] || !kept.contains(&transpose_side) {
            return Err(Error::InvalidParameter {
                name: "bipartition",
                reason: format!("kept {kept:?}, transposed {transpose_side:?}"),
            });
        }
        let mut kept = kept;
        kept.sort_by_key(|m| m.slot());
        let traced = Mode::ALL.into_iter().find(|m| !kept.contains(m)).unwrap();
        Ok(Self {
            kept,
            traced,
            transpose_side,
        })
    }

    /// Optical | mechanical.
    pub fn om() -> Self {
        Self::new([Mode::Optical, Mode::Mechanical], Mode::Optical).unwrap()
    }

    /// Mechanical | electrical.
    pub fn me() -> Self {
        Self::new([Mode::Mechanical, Mode::Electrical], Mode::Mechanical).unwrap()
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.kept[0].label(), self.kept[1].label())
    }

    fn side_index(&self) -> usize {
        if self.transpose_side == self.kept[0] {
            0
        } else {
            1
        }
    }
}

/// Trace out subsystem `which` of a multipartite state.
fn trace_out(rho: &DensityMatrix, which: usize) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if which >= dims.len() {
        return Err(Error::InvalidParameter {
            name: "traced",
            reason: format!("subsystem {which} of {}", dims.len()),
        });
    }
    let d = dims[which];
    let inner: usize = dims[which + 1..].iter().product();
    let outer: usize = dims[..which].iter().product();
    let n_red = outer * inner;
    let m = rho.matrix();
    let full = |o: usize, k: usize, i: usize| (o * d + k) * inner + i;
    let out = DMatrix::from_fn(n_red, n_red, |r, c| {
        let (ro, ri) = (r / inner, r % inner);
        let (co, ci) = (c / inner, c % inner);
        (0..d).fold(C64::new(0.0, 0.0), |acc, k| acc + m[(full(ro, k, ri), full(co, k, ci))])
    });
    let mut red_dims = dims.to_vec();
    red_dims.remove(which);
    DensityMatrix::new(out, red_dims, rho.time)
}

/// Reduce a three-mode state to the two remaining modes.
pub fn partial_trace(rho: &DensityMatrix, traced: Mode) -> Result<DensityMatrix> {
    if rho.dims().len() != 3 {
        return Err(Error::InvalidParameter {
            name: "rho",
            reason: format!("expected three modes, got {}", rho.dims().len()),
        });
    }
    trace_out(rho, traced.slot())
}

/// Partial transpose of a two-mode matrix on subsystem `side` (0 or 1).
pub fn partial_transpose(m: &DMatrix<C64>, dims: [usize; 2], side: usize) -> Result<DMatrix<C64>> {
    let [d0, d1] = dims;
    if m.nrows() != d0 * d1 || m.ncols() != d0 * d1 {
        return Err(Error::DimensionMismatch {
            expected: d0 * d1,
            found: m.nrows(),
        });
    }
    if side > 1 {
        return Err(Error::InvalidParameter {
            name: "side",
            reason: format!("must be 0 or 1, got {side}"),
        });
    }
    Ok(DMatrix::from_fn(d0 * d1, d0 * d1, |r, c| {
        let (mut i0, mut i1) = (r / d1, r % d1);
        let (mut j0, mut j1) = (c / d1, c % d1);
        if side == 0 {
            std::mem::swap(&mut i0, &mut j0);
        } else {
            std::mem::swap(&mut i1, &mut j1);
        }
        m[(i0 * d1 + i1, j0 * d1 + j1)]
    }))
}

fn two_mode_dims(rho: &DensityMatrix) -> Result<[usize; 2]> {
    match rho.dims() {
        &[a, b] => Ok([a, b]),
        other => Err(Error::InvalidParameter {
            name: "rho2",
            reason: format!("expected a two-mode state, got dims {other:?}"),
        }),
    }
}

/// `Σ_i (|λ_i| − λ_i)/2` over the spectrum of the partial transpose.
pub fn negativity(rho2: &DensityMatrix, side: usize) -> Result<f64> {
    let pt = partial_transpose(rho2.matrix(), two_mode_dims(rho2)?, side)?;
    let herm = (&pt + pt.adjoint()) * C64::new(0.5, 0.0);
    let ev = herm.symmetric_eigenvalues();
    if ev.iter().any(|l| !l.is_finite()) {
        return Err(Error::Eigen);
    }
    Ok(ev.iter().map(|l| 0.5 * (l.abs() - l)).sum())
}

/// `(‖ρ^Γ‖₁ − 1)/2` from singular values; equal to [`negativity`] for
/// unit-trace Hermitian states.
pub fn negativity_trace_norm(rho2: &DensityMatrix, side: usize) -> Result<f64> {
    let pt = partial_transpose(rho2.matrix(), two_mode_dims(rho2)?, side)?;
    let norm: f64 = pt.singular_values().iter().sum();
    Ok(0.5 * (norm - 1.0))
}

/// Entanglement sudden death: after the global maximum, `N < epsilon` for
/// `dwell` consecutive samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EsdCriterion {
    pub epsilon: f64,
    pub dwell: usize,
}

impl Default for EsdCriterion {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            dwell: 100,
        }
    }
}

impl EsdCriterion {
    /// Time of the first sample that starts a full dwell window below threshold.
    pub fn detect(&self, times: &[f64], values: &[f64]) -> Option<f64> {
        let peak = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)?;
        let dwell = self.dwell.max(1);
        let mut run = 0;
        for i in peak..values.len() {
            if values[i] < self.epsilon {
                run += 1;
                if run == dwell {
                    return Some(times[i + 1 - dwell]);
                }
            } else {
                run = 0;
            }
        }
        None
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EntanglementSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub esd_time: Option<f64>,
}

impl EntanglementSeries {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

pub fn entanglement_series(
    rhos: &[DensityMatrix],
    part: &Bipartition,
    criterion: &EsdCriterion,
) -> Result<EntanglementSeries> {
    let values = rhos
        .par_iter()
        .map(|r| negativity(&partial_trace(r, part.traced)?, part.side_index()))
        .collect::<Result<Vec<f64>>>()?;
    let times: Vec<f64> = rhos.iter().map(|r| r.time).collect();
    let esd_time = criterion.detect(&times, &values);
    Ok(EntanglementSeries {
        label: part.label(),
        times,
        values,
        esd_time,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub beta: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Least-squares line through the origin, `t = βΩ`, with the usual centred
/// coefficient of determination.
pub fn fit_esd_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::TooFew {
            what: "ESD points",
            needed: 3,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let var_x: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if var_x == 0.0 {
        return Err(Error::DegenerateFit("all central frequencies are equal"));
    }
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::DegenerateFit("all ESD times are equal"));
    }
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let beta = sxy / sxx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - beta * p.0).powi(2)).sum();
    Ok(SlopeFit {
        beta,
        r_squared: 1.0 - ss_res / ss_tot,
        n_points: points.len(),
    })
}
