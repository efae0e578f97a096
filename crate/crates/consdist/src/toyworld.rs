//! Desk-scale stand-ins for the 3D representation, the renderer, and the
//! view-biased teacher, plus the two consistency measurements.
//!
//! The "object" is a K x D matrix: one feature row per azimuth bin, bins
//! uniformly covering `(-180, 180]`. Rendering at a pose is circular
//! linear interpolation between the two bracketing bins, which keeps the
//! render differentiable with an exact two-entry Jacobian per output dim.
//!
//! The teacher assigns every azimuth a canonical target feature `T(r)` by
//! spherical interpolation between Front (0), Side (90), and Back (180)
//! templates, but its scores are tilted toward one preferred template with
//! strength `bias`. That tilt is the failure mechanism under study: with a
//! strong enough tilt, plain distillation drags every bin toward the
//! preferred view and the object grows the same face all the way around.
//! `janus_metric` measures exactly that, and `similarity_profile` is the
//! corresponding distribution-shape diagnostic.

use crate::distill::{Conditioning, ScoreBundle};
use crate::embedding::ViewLabel;
use crate::error::Error;
use crate::geometry::CameraPose;
use crate::loss::FeatureVector;
use crate::vecmath::{dot, norm};
use crate::NORM_CUTOFF;

/// Azimuth-binned feature field: K rows of D dims, row k centered at the
/// normalized azimuth `k * 360 / K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyObject {
    bins: usize,
    dims: usize,
    data: Vec<f64>,
}

impl ToyObject {
    pub fn zeros(bins: usize, dims: usize) -> Result<Self, Error> {
        if bins < 4 {
            return Err(Error::ConfigInvalid(format!("bins must be at least 4, got {bins}")));
        }
        if dims < 2 {
            return Err(Error::ConfigInvalid(format!("dims must be at least 2, got {dims}")));
        }
        Ok(Self { bins, dims, data: vec![0.0; bins * dims] })
    }

    /// Builds a world from explicit per-bin rows (row k is bin k).
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, Error> {
        let bins = rows.len();
        if bins < 4 {
            return Err(Error::ConfigInvalid(format!("bins must be at least 4, got {bins}")));
        }
        let dims = rows[0].len();
        if dims < 2 {
            return Err(Error::ConfigInvalid(format!("dims must be at least 2, got {dims}")));
        }
        let mut data = Vec::with_capacity(bins * dims);
        for row in &rows {
            if row.len() != dims {
                return Err(Error::DimMismatch { left: dims, right: row.len() });
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::NonFinite(v));
                }
                data.push(v);
            }
        }
        Ok(Self { bins, dims, data })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn row(&self, k: usize) -> &[f64] {
        assert!(k < self.bins, "bin {k} out of range");
        &self.data[k * self.dims..(k + 1) * self.dims]
    }

    pub(crate) fn row_mut(&mut self, k: usize) -> &mut [f64] {
        assert!(k < self.bins, "bin {k} out of range");
        &mut self.data[k * self.dims..(k + 1) * self.dims]
    }

    /// Normalized azimuth of bin k's center.
    pub fn bin_center(&self, k: usize) -> CameraPose {
        assert!(k < self.bins, "bin {k} out of range");
        CameraPose::from_degrees(k as f64 * 360.0 / self.bins as f64)
            .expect("bin centers are finite")
    }
}

/// A rendered view: the pose it was taken from and its feature.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFeature {
    pub pose: CameraPose,
    pub feature: FeatureVector,
}

/// The two bins bracketing `pose` and their interpolation weights
/// (non-negative, summing to 1). This is the full render Jacobian: output
/// dim j depends only on entry j of these two rows, with these weights.
pub(crate) fn render_support(bins: usize, pose: CameraPose) -> [(usize, f64); 2] {
    let width = 360.0 / bins as f64;
    let position = pose.azimuth().rem_euclid(360.0);
    let u = position / width;
    let lower = (u.floor() as usize) % bins;
    let frac = u - u.floor();
    [(lower, 1.0 - frac), ((lower + 1) % bins, frac)]
}

/// Circular linear interpolation between the two bins bracketing the pose.
pub fn render(world: &ToyObject, pose: CameraPose) -> RenderedFeature {
    let support = render_support(world.bins(), pose);
    let mut feature = vec![0.0; world.dims()];
    for (k, w) in support {
        for (out, x) in feature.iter_mut().zip(world.row(k)) {
            *out += w * x;
        }
    }
    RenderedFeature {
        pose,
        feature: FeatureVector::new(feature).expect("world entries are finite"),
    }
}

/// Azimuth at which a view class sits on the canonical target path.
fn canonical_azimuth(view: ViewLabel) -> f64 {
    match view {
        ViewLabel::Front => 0.0,
        ViewLabel::Side => 90.0,
        ViewLabel::Back => 180.0,
    }
}

/// Sharpness of the preferred-view kernel in the teacher's closed-form
/// view distribution (von Mises style, in cosine of the angular gap).
const PREFERRED_KERNEL_SHARPNESS: f64 = 2.0;

/// Score oracle with a built-in view preference.
///
/// `target_at` interpolates the three templates over azimuth; scoring
/// mixes the true target with the preferred template at strength `bias`.
/// `bins` fixes the support of the closed-form view distribution used by
/// `teacher_probability`, and `guidance_scale` is how downstream guidance
/// combines the two score terms (conditional scaled by it).
#[derive(Debug, Clone, PartialEq)]
pub struct BiasedTeacher {
    front: FeatureVector,
    side: FeatureVector,
    back: FeatureVector,
    bias: f64,
    preferred: ViewLabel,
    bins: usize,
    guidance_scale: f64,
}

impl BiasedTeacher {
    pub fn new(
        front: FeatureVector,
        side: FeatureVector,
        back: FeatureVector,
        bias: f64,
        preferred: ViewLabel,
        bins: usize,
    ) -> Result<Self, Error> {
        if side.dim() != front.dim() {
            return Err(Error::DimMismatch { left: front.dim(), right: side.dim() });
        }
        if back.dim() != front.dim() {
            return Err(Error::DimMismatch { left: front.dim(), right: back.dim() });
        }
        for t in [&front, &side, &back] {
            if t.norm() < NORM_CUTOFF {
                return Err(Error::ZeroNorm);
            }
        }
        for (a, b) in [(&front, &side), (&front, &back), (&side, &back)] {
            let c = dot(a.values(), b.values()) / (a.norm() * b.norm());
            if c >= 0.99 {
                return Err(Error::ConfigInvalid(format!(
                    "teacher templates must be distinct (pairwise cosine < 0.99, got {c})"
                )));
            }
        }
        if !bias.is_finite() || !(0.0..=1.0).contains(&bias) {
            return Err(Error::ConfigInvalid(format!("bias must lie in [0, 1], got {bias}")));
        }
        if bins < 4 {
            return Err(Error::ConfigInvalid(format!("bins must be at least 4, got {bins}")));
        }
        Ok(Self { front, side, back, bias, preferred, bins, guidance_scale: 1.0 })
    }

    /// Templates on the first three coordinate axes; needs `dims >= 3`.
    pub fn orthogonal(
        dims: usize,
        bins: usize,
        bias: f64,
        preferred: ViewLabel,
    ) -> Result<Self, Error> {
        if dims < 3 {
            return Err(Error::ConfigInvalid(format!(
                "orthogonal templates need dims >= 3, got {dims}"
            )));
        }
        let axis = |i: usize| {
            let mut v = vec![0.0; dims];
            v[i] = 1.0;
            FeatureVector::new(v).expect("axis template is finite")
        };
        Self::new(axis(0), axis(1), axis(2), bias, preferred, bins)
    }

    pub fn with_guidance_scale(mut self, scale: f64) -> Result<Self, Error> {
        if !scale.is_finite() || scale <= 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "guidance scale must be finite and positive, got {scale}"
            )));
        }
        self.guidance_scale = scale;
        Ok(self)
    }

    pub fn template(&self, view: ViewLabel) -> &FeatureVector {
        match view {
            ViewLabel::Front => &self.front,
            ViewLabel::Side => &self.side,
            ViewLabel::Back => &self.back,
        }
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn preferred(&self) -> ViewLabel {
        self.preferred
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn guidance_scale(&self) -> f64 {
        self.guidance_scale
    }

    /// Canonical target feature for a pose: Front at 0, Side at +-90, Back
    /// at 180, spherically interpolated in between.
    pub fn target_at(&self, pose: CameraPose) -> FeatureVector {
        let a = pose.azimuth().abs();
        let values = if a <= 90.0 {
            slerp(self.front.values(), self.side.values(), a / 90.0)
        } else {
            slerp(self.side.values(), self.back.values(), (a - 90.0) / 90.0)
        };
        FeatureVector::new(values).expect("interpolated target is finite")
    }
}

/// Spherical linear interpolation; falls back to straight lerp when the
/// endpoints are within roundoff of parallel.
fn slerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    if t <= 0.0 {
        return a.to_vec();
    }
    if t >= 1.0 {
        return b.to_vec();
    }
    let c = (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0);
    let theta = c.acos();
    let s = theta.sin();
    let (wa, wb) = if s < 1e-9 {
        (1.0 - t, t)
    } else {
        (((1.0 - t) * theta).sin() / s, (t * theta).sin() / s)
    };
    a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect()
}

/// Both score terms for one rendered view.
///
/// Unconditional: `((1 - bias) T(pose) + bias * preferred) - feature`; the
/// preference is baked in unconditionally. Conditional: `alpha (T(pose) -
/// feature) + (1 - alpha) bias (preferred - feature)` where `alpha` in
/// `[0, 1]` is the alignment of `conditioning.injected` with `T(pose)`
/// mapped through `(1 + cos) / 2`. A conditioning aligned with the true
/// pose therefore suppresses the preferred-view pull; a clean but
/// view-blind conditioning leaves half of it in place.
pub fn teacher_score(
    teacher: &BiasedTeacher,
    rendered: &RenderedFeature,
    conditioning: &Conditioning,
) -> Result<ScoreBundle, Error> {
    let dims = teacher.front.dim();
    if rendered.feature.dim() != dims {
        return Err(Error::DimMismatch { left: rendered.feature.dim(), right: dims });
    }
    if conditioning.injected().dim() != dims {
        return Err(Error::DimMismatch { left: conditioning.injected().dim(), right: dims });
    }
    let target = teacher.target_at(rendered.pose);
    let preferred = teacher.template(teacher.preferred);
    let f = rendered.feature.values();
    let beta = teacher.bias;

    let unconditional: Vec<f64> = target
        .values()
        .iter()
        .zip(preferred.values())
        .zip(f)
        .map(|((t, p), x)| (1.0 - beta) * t + beta * p - x)
        .collect();

    let ni = conditioning.injected().norm();
    let nt = target.norm();
    let c = if ni < NORM_CUTOFF || nt < NORM_CUTOFF {
        0.0
    } else {
        (dot(conditioning.injected().values(), target.values()) / (ni * nt)).clamp(-1.0, 1.0)
    };
    let alpha = 0.5 * (1.0 + c);
    let conditional: Vec<f64> = target
        .values()
        .iter()
        .zip(preferred.values())
        .zip(f)
        .map(|((t, p), x)| alpha * (t - x) + (1.0 - alpha) * beta * (p - x))
        .collect();

    Ok(ScoreBundle {
        conditional: FeatureVector::new(conditional).expect("scores are finite"),
        unconditional: FeatureVector::new(unconditional).expect("scores are finite"),
    })
}

/// Normalized mass the preferred-view kernel puts on the bin containing
/// `pose`, out of the teacher's K bins.
pub(crate) fn preferred_kernel(teacher: &BiasedTeacher, pose: CameraPose) -> f64 {
    let k = teacher.bins;
    let width = 360.0 / k as f64;
    let preferred_az =
        CameraPose::from_degrees(canonical_azimuth(teacher.preferred)).expect("finite");
    let weight_at = |center: f64| {
        let c = CameraPose::from_degrees(center).expect("finite");
        let gap = crate::geometry::azimuthal_distance(c, preferred_az).to_radians();
        (PREFERRED_KERNEL_SHARPNESS * gap.cos()).exp()
    };
    let total: f64 = (0..k).map(|i| weight_at(i as f64 * width)).sum();
    let u = pose.azimuth().rem_euclid(360.0) / width;
    let bin = (u.round() as usize) % k;
    weight_at(bin as f64 * width) / total
}

/// Probability that the teacher generates content consistent with `pose`.
///
/// With the view bias: a mixture `(1 - bias) / K + bias * q(pose)` where
/// `q` concentrates on the preferred view. Without: the uniform marginal
/// `1 / K`. Both are strictly positive and sum to 1 over the K bin
/// centers; at `bias == 0` the two coincide exactly.
pub fn teacher_probability(teacher: &BiasedTeacher, pose: CameraPose, with_view_bias: bool) -> f64 {
    let uniform = 1.0 / teacher.bins as f64;
    if !with_view_bias {
        return uniform;
    }
    (1.0 - teacher.bias) * uniform + teacher.bias * preferred_kernel(teacher, pose)
}

/// Fraction of bins whose content looks more like the preferred view than
/// like their own target, over the bins where that question is meaningful
/// (a bin whose own target is the preferred template itself is excluded).
/// Bins with near-zero content count as uncorrupted.
pub fn janus_metric(world: &ToyObject, teacher: &BiasedTeacher) -> f64 {
    assert_eq!(
        world.dims(),
        teacher.front.dim(),
        "world and teacher dims must agree"
    );
    let preferred = teacher.template(teacher.preferred);
    let np = preferred.norm();
    let mut eligible = 0usize;
    let mut corrupted = 0usize;
    for k in 0..world.bins() {
        let target = teacher.target_at(world.bin_center(k));
        let nt = target.norm();
        let target_is_preferred =
            dot(target.values(), preferred.values()) / (nt * np) > 1.0 - 1e-12;
        if target_is_preferred {
            continue;
        }
        eligible += 1;
        let f = world.row(k);
        let nf = norm(f);
        if nf < NORM_CUTOFF {
            continue;
        }
        let to_preferred = dot(f, preferred.values()) / (nf * np);
        let to_target = dot(f, target.values()) / (nf * nt);
        if to_preferred > to_target {
            corrupted += 1;
        }
    }
    assert!(eligible > 0, "no bins eligible for the janus metric");
    corrupted as f64 / eligible as f64
}

/// Cosine similarity of views sampled uniformly over azimuth against the
/// view rendered at `reference`, sorted by azimuth. A pair involving a
/// near-zero feature reports similarity 0.
pub fn similarity_profile(
    world: &ToyObject,
    reference: CameraPose,
    samples: usize,
) -> Vec<(f64, f64)> {
    assert!(samples >= 8, "need at least 8 profile samples, got {samples}");
    let reference_feature = render(world, reference).feature;
    let nr = reference_feature.norm();
    let step = 360.0 / samples as f64;
    (0..samples)
        .map(|i| {
            let azimuth = -180.0 + (i as f64 + 0.5) * step;
            let pose = CameraPose::from_degrees(azimuth).expect("finite");
            let feature = render(world, pose).feature;
            let nf = feature.norm();
            let similarity = if nr < NORM_CUTOFF || nf < NORM_CUTOFF {
                0.0
            } else {
                (dot(feature.values(), reference_feature.values()) / (nf * nr)).clamp(-1.0, 1.0)
            };
            (azimuth, similarity)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distill::decompose_prompt;
    use crate::embedding::Embedding;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pose(az: f64) -> CameraPose {
        CameraPose::from_degrees(az).unwrap()
    }

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::new(values.to_vec()).unwrap()
    }

    fn ramp_world(bins: usize, dims: usize) -> ToyObject {
        let rows = (0..bins)
            .map(|k| (0..dims).map(|d| (k * dims + d) as f64 + 1.0).collect())
            .collect();
        ToyObject::from_rows(rows).unwrap()
    }

    /// Conditioning whose injected embedding is exactly `injected`.
    fn conditioning_with(injected: &[f64]) -> Conditioning {
        let dims = injected.len();
        let mut subject = vec![0.0; dims];
        subject[dims - 1] = 1.0;
        let c = decompose_prompt(
            &Embedding::new(subject.clone()).unwrap(),
            &Embedding::new(subject).unwrap(),
        )
        .unwrap();
        c.with_injected(Embedding::new(injected.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn world_shape_is_validated() {
        assert!(ToyObject::zeros(3, 8).is_err());
        assert!(ToyObject::zeros(4, 1).is_err());
        let w = ToyObject::zeros(4, 2).unwrap();
        assert_eq!((w.bins(), w.dims()), (4, 2));
        assert!(ToyObject::from_rows(vec![vec![1.0, 2.0]; 3]).is_err());
        assert!(ToyObject::from_rows(vec![
            vec![1.0, 2.0],
            vec![1.0],
            vec![1.0, 2.0],
            vec![1.0, 2.0],
        ])
        .is_err());
        assert!(ToyObject::from_rows(vec![vec![f64::NAN, 0.0]; 4]).is_err());
    }

    #[test]
    fn bin_centers_are_normalized() {
        let w = ToyObject::zeros(8, 2).unwrap();
        assert_eq!(w.bin_center(0).azimuth(), 0.0);
        assert_eq!(w.bin_center(4).azimuth(), 180.0);
        assert_eq!(w.bin_center(6).azimuth(), -90.0);
    }

    #[test]
    fn render_at_center_midpoint_and_wraparound() {
        let w = ramp_world(8, 3);
        // Exactly at bin 2's center.
        let r = render(&w, w.bin_center(2));
        assert_eq!(r.feature.values(), w.row(2));
        // Midpoint between bins 1 and 2 (center spacing 45 degrees).
        let r = render(&w, pose(67.5));
        for ((x, a), b) in r.feature.values().iter().zip(w.row(1)).zip(w.row(2)) {
            assert_relative_eq!(*x, 0.5 * (a + b), epsilon = 1e-12);
        }
        // Wraparound midpoint between the last bin (-45) and bin 0.
        let r = render(&w, pose(-22.5));
        for ((x, a), b) in r.feature.values().iter().zip(w.row(7)).zip(w.row(0)) {
            assert_relative_eq!(*x, 0.5 * (a + b), epsilon = 1e-12);
        }
    }

    #[test]
    fn teacher_rejects_bad_templates() {
        let t = BiasedTeacher::new(
            fv(&[1.0, 0.0, 0.0]),
            fv(&[1.0, 0.01, 0.0]),
            fv(&[0.0, 0.0, 1.0]),
            0.5,
            ViewLabel::Front,
            8,
        );
        assert!(matches!(t, Err(Error::ConfigInvalid(_))));
        assert!(BiasedTeacher::orthogonal(2, 8, 0.5, ViewLabel::Front).is_err());
        assert!(BiasedTeacher::orthogonal(3, 8, 1.5, ViewLabel::Front).is_err());
        assert!(BiasedTeacher::orthogonal(3, 3, 0.5, ViewLabel::Front).is_err());
        assert!(BiasedTeacher::orthogonal(3, 8, 0.5, ViewLabel::Front)
            .unwrap()
            .with_guidance_scale(0.0)
            .is_err());
    }

    #[test]
    fn target_path_hits_templates_at_canonical_azimuths() {
        let t = BiasedTeacher::orthogonal(4, 16, 0.8, ViewLabel::Front).unwrap();
        assert_eq!(t.target_at(pose(0.0)).values(), t.template(ViewLabel::Front).values());
        assert_eq!(t.target_at(pose(90.0)).values(), t.template(ViewLabel::Side).values());
        assert_eq!(t.target_at(pose(-90.0)).values(), t.template(ViewLabel::Side).values());
        assert_eq!(t.target_at(pose(180.0)).values(), t.template(ViewLabel::Back).values());
        // Between orthogonal unit templates the path stays on the sphere.
        for az in [30.0, 45.0, 120.0, -150.0] {
            assert_relative_eq!(t.target_at(pose(az)).norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn unbiased_teacher_points_both_terms_at_target() {
        let t = BiasedTeacher::orthogonal(4, 16, 0.0, ViewLabel::Front).unwrap();
        let world = ramp_world(16, 4);
        let rendered = render(&world, pose(40.0));
        let target = t.target_at(pose(40.0));
        // Inject something parallel to the target for perfect alignment.
        let c = conditioning_with(target.values());
        let bundle = teacher_score(&t, &rendered, &c).unwrap();
        for ((u, cnd), (tj, fj)) in bundle
            .unconditional
            .values()
            .iter()
            .zip(bundle.conditional.values())
            .zip(target.values().iter().zip(rendered.feature.values()))
        {
            assert_relative_eq!(*u, tj - fj, epsilon = 1e-12, max_relative = 1e-12);
            assert_relative_eq!(*cnd, tj - fj, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn fixed_point_scores_vanish() {
        let t = BiasedTeacher::orthogonal(4, 16, 0.0, ViewLabel::Front).unwrap();
        let target = t.target_at(pose(125.0));
        let rendered = RenderedFeature { pose: pose(125.0), feature: target.clone() };
        let c = conditioning_with(target.values());
        let bundle = teacher_score(&t, &rendered, &c).unwrap();
        assert!(bundle.unconditional.values().iter().all(|&x| x == 0.0));
        assert!(bundle.conditional.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn fully_biased_teacher_pulls_rear_toward_preferred() {
        let t = BiasedTeacher::orthogonal(4, 16, 1.0, ViewLabel::Front).unwrap();
        let world = ToyObject::zeros(16, 4).unwrap();
        let rendered = render(&world, pose(180.0));
        // Zero alignment: inject the exact opposite of the rear target.
        let target = t.target_at(pose(180.0));
        let opposite: Vec<f64> = target.values().iter().map(|x| -x).collect();
        let c = conditioning_with(&opposite);
        let bundle = teacher_score(&t, &rendered, &c).unwrap();
        let front = t.template(ViewLabel::Front);
        for (s, p) in bundle.conditional.values().iter().zip(front.values()) {
            assert_relative_eq!(*s, *p, epsilon = 1e-12);
        }
    }

    #[test]
    fn teacher_score_checks_dims() {
        let t = BiasedTeacher::orthogonal(4, 16, 0.5, ViewLabel::Front).unwrap();
        let rendered = RenderedFeature { pose: pose(0.0), feature: fv(&[1.0, 0.0]) };
        let c = conditioning_with(&[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            teacher_score(&t, &rendered, &c),
            Err(Error::DimMismatch { .. })
        ));
    }

    #[test]
    fn probability_examples() {
        let unbiased = BiasedTeacher::orthogonal(3, 32, 0.0, ViewLabel::Front).unwrap();
        for az in [0.0, 90.0, 180.0, -33.0] {
            assert_eq!(teacher_probability(&unbiased, pose(az), true), 1.0 / 32.0);
            assert_eq!(teacher_probability(&unbiased, pose(az), false), 1.0 / 32.0);
        }

        let degenerate = BiasedTeacher::orthogonal(3, 32, 1.0, ViewLabel::Front).unwrap();
        let w = ToyObject::zeros(32, 3).unwrap();
        let at_preferred = teacher_probability(&degenerate, pose(0.0), true);
        for k in 1..32 {
            assert!(at_preferred > teacher_probability(&degenerate, w.bin_center(k), true));
        }
    }

    #[test]
    fn janus_boundaries_are_exact() {
        let teacher = BiasedTeacher::orthogonal(3, 9, 0.8, ViewLabel::Front).unwrap();
        let w = ToyObject::zeros(9, 3).unwrap();
        let own_targets: Vec<Vec<f64>> = (0..9)
            .map(|k| teacher.target_at(w.bin_center(k)).values().to_vec())
            .collect();
        let healthy = ToyObject::from_rows(own_targets.clone()).unwrap();
        assert_eq!(janus_metric(&healthy, &teacher), 0.0);

        let all_front =
            ToyObject::from_rows(vec![vec![1.0, 0.0, 0.0]; 9]).unwrap();
        assert_eq!(janus_metric(&all_front, &teacher), 1.0);

        // Bin 0's target is the preferred template, so 8 bins are
        // eligible; corrupt exactly 4 of them.
        let mut rows = own_targets;
        for k in 1..=4 {
            rows[k] = vec![1.0, 0.0, 0.0];
        }
        let half = ToyObject::from_rows(rows).unwrap();
        assert_eq!(janus_metric(&half, &teacher), 0.5);
    }

    #[test]
    fn constant_world_profile_is_flat_at_one() {
        let w = ToyObject::from_rows(vec![vec![0.3, -0.7, 0.2]; 12]).unwrap();
        let profile = similarity_profile(&w, pose(0.0), 16);
        assert_eq!(profile.len(), 16);
        for (az, sim) in &profile {
            assert!(*az > -180.0 && *az < 180.0);
            assert_relative_eq!(*sim, 1.0, epsilon = 1e-12);
        }
        assert!(profile.windows(2).all(|p| p[0].0 < p[1].0));
    }

    proptest! {
        #[test]
        fn render_is_linear_in_the_world(
            rows1 in proptest::collection::vec(
                proptest::collection::vec(-5.0f64..5.0, 3), 6),
            rows2 in proptest::collection::vec(
                proptest::collection::vec(-5.0f64..5.0, 3), 6),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            az in -179.9f64..180.0,
        ) {
            let w1 = ToyObject::from_rows(rows1.clone()).unwrap();
            let w2 = ToyObject::from_rows(rows2.clone()).unwrap();
            let combined = ToyObject::from_rows(
                rows1.iter().zip(&rows2).map(|(r1, r2)| {
                    r1.iter().zip(r2).map(|(x, y)| a * x + b * y).collect()
                }).collect()
            ).unwrap();
            let p = pose(az);
            let lhs = render(&combined, p);
            let r1 = render(&w1, p);
            let r2 = render(&w2, p);
            for ((l, x), y) in lhs.feature.values().iter()
                .zip(r1.feature.values())
                .zip(r2.feature.values())
            {
                prop_assert!((l - (a * x + b * y)).abs() <= 1e-12 * (1.0 + l.abs()));
            }
        }

        #[test]
        fn probabilities_normalize_over_bins(
            beta in 0.0f64..=1.0,
            bins in 4usize..40,
            with_bias in proptest::bool::ANY,
        ) {
            let teacher = BiasedTeacher::orthogonal(3, bins, beta, ViewLabel::Side).unwrap();
            let w = ToyObject::zeros(bins, 3).unwrap();
            let mut total = 0.0;
            for k in 0..bins {
                let p = teacher_probability(&teacher, w.bin_center(k), with_bias);
                prop_assert!(p > 0.0);
                total += p;
            }
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn unbiased_probability_is_uniform(bins in 4usize..40, az in -179.9f64..180.0) {
            let teacher = BiasedTeacher::orthogonal(3, bins, 0.0, ViewLabel::Back).unwrap();
            let p = pose(az);
            let expected = 1.0 / bins as f64;
            prop_assert_eq!(teacher_probability(&teacher, p, true), expected);
            prop_assert_eq!(teacher_probability(&teacher, p, false), expected);
        }

        #[test]
        fn profile_symmetric_for_symmetric_world(bins in prop::sample::select(vec![8usize, 12, 16, 24])) {
            // Rows depend on the center azimuth only through cos, which is
            // even, so the world is mirror-symmetric about azimuth 0.
            let w = ToyObject::from_rows(
                (0..bins).map(|k| {
                    let c = (k as f64 * 360.0 / bins as f64).to_radians().cos();
                    vec![1.0, c, c * c]
                }).collect()
            ).unwrap();
            let samples = 2 * bins;
            let profile = similarity_profile(&w, pose(0.0), samples);
            for i in 0..samples / 2 {
                let (az_lo, sim_lo) = profile[i];
                let (az_hi, sim_hi) = profile[samples - 1 - i];
                prop_assert!((az_lo + az_hi).abs() <= 1e-9);
                prop_assert!((sim_lo - sim_hi).abs() <= 1e-9);
            }
        }
    }
}
