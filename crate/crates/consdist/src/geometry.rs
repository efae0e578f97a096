//! Camera azimuth handling on the unit circle.
//!
//! All public azimuths are degrees in the half-open interval `(-180, 180]`
//! with `0` facing the object's front. Elevation is fixed at zero for the
//! whole crate. Distances are circular, so `170` and `-170` are 20 degrees
//! apart, and the mirrored reference used for ordering maps `a` to the
//! normalized `180 - a` (same silhouette for a bilaterally symmetric
//! object).

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::embedding::InjectionWeights;
use crate::error::Error;

/// Azimuth-only camera pose, always normalized to `(-180, 180]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    azimuth: f64,
}

/// Which side of the 90-degree boundary a pose falls on. Exactly 90 (and
/// -90) count as rear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Frontal,
    Rear,
}

fn wrap(raw: f64) -> f64 {
    let mut a = raw.rem_euclid(360.0);
    if a > 180.0 {
        a -= 360.0;
    }
    a
}

impl CameraPose {
    /// Normalizes any finite degree value into `(-180, 180]`: `0` stays
    /// `0`, `270` becomes `-90`, `-180` becomes `180`.
    pub fn from_degrees(raw: f64) -> Result<Self, Error> {
        if !raw.is_finite() {
            return Err(Error::NonFinite(raw));
        }
        Ok(Self { azimuth: wrap(raw) })
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }
}

/// Frontal iff `|azimuth| < 90`.
pub fn classify_region(pose: CameraPose) -> Region {
    if pose.azimuth.abs() < 90.0 {
        Region::Frontal
    } else {
        Region::Rear
    }
}

/// Scheduled residual coefficients `(side, back)` for a pose.
///
/// Frontal: `(w1 * |r| / 90, 0)`. Rear: `(w3 * (180 - |r|) / 90,
/// w2 * (|r| - 90) / 90)`. With `w1 == w3` the side coefficient is
/// continuous across the 90-degree boundary; the back coefficient rises
/// from 0 at 90 to `w2` at 180.
pub fn injection_weights(pose: CameraPose, weights: &InjectionWeights) -> (f64, f64) {
    let a = pose.azimuth.abs();
    match classify_region(pose) {
        Region::Frontal => (weights.w1() * (a / 90.0), 0.0),
        Region::Rear => (
            weights.w3() * ((180.0 - a) / 90.0),
            weights.w2() * ((a - 90.0) / 90.0),
        ),
    }
}

/// Circular distance in degrees, in `[0, 180]`.
pub fn azimuthal_distance(a: CameraPose, b: CameraPose) -> f64 {
    let d = (a.azimuth - b.azimuth).abs();
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

/// The pose with the same silhouette under left-right symmetry:
/// `azimuth -> normalize(180 - azimuth)`.
pub fn mirror_reference(reference: CameraPose) -> CameraPose {
    CameraPose { azimuth: wrap(180.0 - reference.azimuth) }
}

/// One view's position in an ordering: its index in the caller's list and
/// its mirror-folded distance to the reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedView {
    pub view: usize,
    pub distance: f64,
}

/// Views sorted by ascending mirror-folded distance to a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingPlan {
    pub reference: CameraPose,
    pub mirrored: CameraPose,
    pub ranked: Vec<RankedView>,
}

/// Ranks `views` by `min(d(view, reference), d(view, mirror(reference)))`,
/// ascending. The sort is stable: ties keep input order.
pub fn expected_order(reference: CameraPose, views: &[CameraPose]) -> Result<OrderingPlan, Error> {
    if views.is_empty() {
        return Err(Error::EmptyViews);
    }
    let mirrored = mirror_reference(reference);
    let mut ranked: Vec<RankedView> = views
        .iter()
        .enumerate()
        .map(|(view, &v)| RankedView {
            view,
            distance: azimuthal_distance(v, reference).min(azimuthal_distance(v, mirrored)),
        })
        .collect();
    ranked.sort_by(|a, b| {
        a.distance
            .partial_cmp(&b.distance)
            .expect("distances are finite")
    });
    Ok(OrderingPlan { reference, mirrored, ranked })
}

/// `count` azimuths drawn uniformly from `(-180, 180]`, reproducible from
/// `seed` alone.
pub fn sample_cameras(count: usize, seed: u64) -> Vec<CameraPose> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| CameraPose { azimuth: 180.0 - 360.0 * rng.gen::<f64>() })
        .collect()
}
