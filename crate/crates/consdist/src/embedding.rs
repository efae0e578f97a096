//! Prompt-embedding algebra.
//!
//! A text prompt and its view-augmented variants live in one f64 vector
//! space. The ops here isolate what a view keyword adds to a prompt (the
//! *view residual*), strip a prompt's built-in view prior by projecting it
//! away, and re-inject view residuals with azimuth-scheduled coefficients
//! so the conditioning agrees with the camera before any scoring happens.
//!
//! Conventions: azimuths are degrees in `(-180, 180]`, `0` faces front.
//! The prior that gets eliminated is spanned by the Front and Side
//! residuals; every projection during elimination is taken against the
//! original input vector, not against a partially stripped intermediate.

use crate::error::Error;
use crate::geometry::{self, CameraPose};
use crate::vecmath::{axpy, dot, norm, scaled, sub};
use crate::NORM_CUTOFF;

/// Dense prompt embedding. Entries are finite and there is at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    values: Vec<f64>,
}

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self, Error> {
        if values.is_empty() {
            return Err(Error::EmptyVector);
        }
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::NonFinite(v));
            }
        }
        Ok(Self { values })
    }

    /// Unit vector along coordinate `index`.
    pub(crate) fn axis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "axis index {index} out of range for dim {dim}");
        let mut values = vec![0.0; dim];
        values[index] = 1.0;
        Self { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }
}

/// Canonical view classes a keyword can describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViewLabel {
    Front,
    Side,
    Back,
}

/// What a view keyword contributes beyond the base prompt: the component of
/// the augmented embedding orthogonal to the base.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewResidual {
    pub view: ViewLabel,
    pub delta: Embedding,
}

/// Coefficient caps for the injection schedule. All three are finite and
/// non-negative; `w1` scales the side residual in the frontal region, `w2`
/// the back residual and `w3` the side residual in the rear region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionWeights {
    w1: f64,
    w2: f64,
    w3: f64,
}

impl InjectionWeights {
    pub fn new(w1: f64, w2: f64, w3: f64) -> Result<Self, Error> {
        for (name, w) in [("w1", w1), ("w2", w2), ("w3", w3)] {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::ConfigInvalid(format!(
                    "{name} must be finite and non-negative, got {w}"
                )));
            }
        }
        Ok(Self { w1, w2, w3 })
    }

    pub fn w1(&self) -> f64 {
        self.w1
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    pub fn w3(&self) -> f64 {
        self.w3
    }
}

impl Default for InjectionWeights {
    fn default() -> Self {
        Self { w1: 1.0, w2: 1.5, w3: 1.0 }
    }
}

/// At most one residual per view class.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualSet {
    front: Option<ViewResidual>,
    side: Option<ViewResidual>,
    back: Option<ViewResidual>,
}

impl ResidualSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `residual` under its own label, replacing any previous entry.
    pub fn insert(&mut self, residual: ViewResidual) {
        let slot = match residual.view {
            ViewLabel::Front => &mut self.front,
            ViewLabel::Side => &mut self.side,
            ViewLabel::Back => &mut self.back,
        };
        *slot = Some(residual);
    }

    pub fn get(&self, view: ViewLabel) -> Option<&ViewResidual> {
        match view {
            ViewLabel::Front => self.front.as_ref(),
            ViewLabel::Side => self.side.as_ref(),
            ViewLabel::Back => self.back.as_ref(),
        }
    }

    /// Clones of the prior-defining entries (Front then Side), skipping
    /// absent ones. This is the set `eliminate_prior` strips.
    pub fn prior(&self) -> Vec<ViewResidual> {
        [&self.front, &self.side]
            .into_iter()
            .flatten()
            .cloned()
            .collect()
    }
}

/// Orthogonal projection of `u` onto the line spanned by `v`:
/// `(⟨u, v⟩ / ⟨v, v⟩) v`.
pub fn project(u: &Embedding, v: &Embedding) -> Result<Embedding, Error> {
    if u.dim() != v.dim() {
        return Err(Error::DimMismatch { left: u.dim(), right: v.dim() });
    }
    let nsq = dot(v.values(), v.values());
    let n = nsq.sqrt();
    if n < NORM_CUTOFF {
        return Err(Error::ZeroDirection { norm: n });
    }
    let coeff = dot(u.values(), v.values()) / nsq;
    Embedding::new(scaled(coeff, v.values()))
}

/// Splits a view-augmented embedding against its base prompt: the returned
/// delta is `v_view - project(v_view, v_base)`, orthogonal to `v_base` up
/// to floating-point roundoff.
pub fn extract_view_residual(
    view: ViewLabel,
    v_view: &Embedding,
    v_base: &Embedding,
) -> Result<ViewResidual, Error> {
    let p = project(v_view, v_base)?;
    let delta = Embedding::new(sub(v_view.values(), p.values()))?;
    Ok(ViewResidual { view, delta })
}

/// Removes the span of each residual direction from `v` by subtracting
/// `project(v, delta_i)` for every entry. Each projection is taken against
/// the original `v`, so the result is linear in `v` and independent of the
/// list order when the residuals are mutually orthogonal. Residuals with
/// norm below the cutoff are skipped silently.
pub fn eliminate_prior(v: &Embedding, residuals: &[ViewResidual]) -> Result<Embedding, Error> {
    let mut out = v.values().to_vec();
    for r in residuals {
        if r.delta.dim() != v.dim() {
            return Err(Error::DimMismatch { left: v.dim(), right: r.delta.dim() });
        }
        if r.delta.norm() < NORM_CUTOFF {
            continue;
        }
        let p = project(v, &r.delta)?;
        for (o, pi) in out.iter_mut().zip(p.values()) {
            *o -= pi;
        }
    }
    Embedding::new(out)
}

/// View-conditioned prompt for a camera at `azimuth` degrees: eliminates
/// the Front/Side prior from `v`, then adds scheduled residuals.
///
/// Frontal region (`|azimuth| < 90`): `+ w1 * (|r| / 90) * delta_side`.
/// Rear region (`|azimuth| >= 90`): `+ w2 * ((|r| - 90) / 90) * delta_back
/// + w3 * ((180 - |r|) / 90) * delta_side`.
///
/// A residual is looked up only when its scheduled coefficient is nonzero;
/// `MissingResidual` means a residual that would actually be scaled in is
/// absent. At `azimuth == 0` both coefficients vanish and the output equals
/// `eliminate_prior(v, ...)` exactly.
pub fn inject_view(
    v: &Embedding,
    azimuth: f64,
    residuals: &ResidualSet,
    weights: &InjectionWeights,
) -> Result<Embedding, Error> {
    if !azimuth.is_finite() || azimuth <= -180.0 || azimuth > 180.0 {
        return Err(Error::AzimuthOutOfRange(azimuth));
    }
    let base = eliminate_prior(v, &residuals.prior())?;
    let pose = CameraPose::from_degrees(azimuth)?;
    let (side_c, back_c) = geometry::injection_weights(pose, weights);
    let mut out = base.values().to_vec();
    if side_c != 0.0 {
        let side = residuals
            .get(ViewLabel::Side)
            .ok_or(Error::MissingResidual(ViewLabel::Side))?;
        if side.delta.dim() != v.dim() {
            return Err(Error::DimMismatch { left: v.dim(), right: side.delta.dim() });
        }
        axpy(&mut out, side_c, side.delta.values());
    }
    if back_c != 0.0 {
        let back = residuals
            .get(ViewLabel::Back)
            .ok_or(Error::MissingResidual(ViewLabel::Back))?;
        if back.delta.dim() != v.dim() {
            return Err(Error::DimMismatch { left: v.dim(), right: back.delta.dim() });
        }
        axpy(&mut out, back_c, back.delta.values());
    }
    Embedding::new(out)
}

/// Single-knob variant for settings without a usable azimuth: eliminates
/// the Front/Side prior, then adds `eta * delta_back`. `eta` has no default
/// on purpose; callers must choose how hard to push toward the back view.
pub fn inject_2d_back(
    v: &Embedding,
    eta: f64,
    residuals: &ResidualSet,
) -> Result<Embedding, Error> {
    if !eta.is_finite() {
        return Err(Error::NonFinite(eta));
    }
    let back = residuals
        .get(ViewLabel::Back)
        .ok_or(Error::MissingResidual(ViewLabel::Back))?;
    if back.delta.dim() != v.dim() {
        return Err(Error::DimMismatch { left: v.dim(), right: back.delta.dim() });
    }
    let base = eliminate_prior(v, &residuals.prior())?;
    let mut out = base.values().to_vec();
    axpy(&mut out, eta, back.delta.values());
    Embedding::new(out)
}
