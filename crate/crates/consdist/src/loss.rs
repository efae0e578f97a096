//! Ranked partial-order loss over rendered view features.
//!
//! Given views ranked by ascending distance to a reference view (see
//! [`crate::geometry::expected_order`]), similarity to the reference should
//! not increase as distance grows. Each adjacent rank pair contributes a
//! hinge `max(0, s_next - s_prev)`, so only inversions are penalized and a
//! correctly ordered profile costs exactly zero.
//!
//! Gradients are exact analytic partials through the cosine similarity,
//! not a straight-through relaxation. The reference feature participates:
//! its partials are accumulated across every active hinge and reported in
//! [`LossReport::reference_gradient`].

use crate::error::Error;
use crate::geometry::OrderingPlan;
use crate::vecmath::{dot, norm};
use crate::NORM_CUTOFF;

/// Dense rendered-view feature. Entries are finite and there is at least
/// one.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
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

/// Outcome of one partial-order evaluation.
///
/// `value == 0` exactly when `violations == 0`; `gradients` has one entry
/// per input feature (zero vectors where no hinge is active), and
/// `reference_gradient` is the loss partial w.r.t. the reference feature.
#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub value: f64,
    pub violations: usize,
    pub gradients: Vec<FeatureVector>,
    pub reference_gradient: FeatureVector,
}

/// Weight of the partial-order term in the combined objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub kappa: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { kappa: 0.6 }
    }
}

/// `⟨a, b⟩ / (||a|| ||b||)`, clamped to `[-1, 1]` against rounding.
pub fn cosine_sim(a: &FeatureVector, b: &FeatureVector) -> Result<f64, Error> {
    cosine_raw(a.values(), b.values())
}

fn cosine_raw(a: &[f64], b: &[f64]) -> Result<f64, Error> {
    if a.len() != b.len() {
        return Err(Error::DimMismatch { left: a.len(), right: b.len() });
    }
    let na = norm(a);
    let nb = norm(b);
    if na < NORM_CUTOFF || nb < NORM_CUTOFF {
        return Err(Error::ZeroNorm);
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

fn check_dims(features: &[FeatureVector], reference: &FeatureVector) -> Result<(), Error> {
    for f in features {
        if f.dim() != reference.dim() {
            return Err(Error::DimMismatch { left: f.dim(), right: reference.dim() });
        }
    }
    Ok(())
}

/// Similarities of the ranked features to the reference, in rank order.
fn ranked_similarities(
    features: &[Vec<f64>],
    reference: &[f64],
    plan: &OrderingPlan,
) -> Result<Vec<f64>, Error> {
    plan.ranked
        .iter()
        .map(|rv| {
            let f = features
                .get(rv.view)
                .unwrap_or_else(|| panic!("rank refers to view {} outside feature list", rv.view));
            cosine_raw(f, reference)
        })
        .collect()
}

fn hinge_value(sims: &[f64]) -> (f64, usize) {
    let mut value = 0.0;
    let mut violations = 0;
    for pair in sims.windows(2) {
        let margin = pair[1] - pair[0];
        if margin > 0.0 {
            value += margin;
            violations += 1;
        }
    }
    (value, violations)
}

/// Sum of adjacent-rank hinges `max(0, s_{i+1} - s_i)` with exact analytic
/// gradients. Ranks come from `plan`; `features` is indexed by
/// `plan.ranked[..].view`. Features that never appear in an active hinge
/// get a zero gradient, and an exactly tied pair (margin zero) is treated
/// as inactive, so its subgradient contribution is zero.
pub fn partial_order_loss(
    features: &[FeatureVector],
    reference: &FeatureVector,
    plan: &OrderingPlan,
) -> Result<LossReport, Error> {
    if plan.ranked.len() < 2 {
        return Err(Error::TooFewViews(plan.ranked.len()));
    }
    check_dims(features, reference)?;
    let raw: Vec<Vec<f64>> = features.iter().map(|f| f.values().to_vec()).collect();
    let sims = ranked_similarities(&raw, reference.values(), plan)?;
    let (value, violations) = hinge_value(&sims);

    let dim = reference.dim();
    let k = sims.len();
    let mut grads = vec![vec![0.0; dim]; features.len()];
    let mut ref_grad = vec![0.0; dim];
    let nr = norm(reference.values());
    for (t, rv) in plan.ranked.iter().enumerate() {
        // d(value)/d(s_t): +1 for an active hinge below, -1 for one above.
        let mut gs = 0.0;
        if t > 0 && sims[t] - sims[t - 1] > 0.0 {
            gs += 1.0;
        }
        if t + 1 < k && sims[t + 1] - sims[t] > 0.0 {
            gs -= 1.0;
        }
        if gs == 0.0 {
            continue;
        }
        let f = &raw[rv.view];
        let nf = norm(f);
        let s = sims[t];
        for j in 0..dim {
            grads[rv.view][j] += gs * (reference.values()[j] / (nf * nr) - s * f[j] / (nf * nf));
            ref_grad[j] += gs * (f[j] / (nf * nr) - s * reference.values()[j] / (nr * nr));
        }
    }

    Ok(LossReport {
        value,
        violations,
        gradients: grads
            .into_iter()
            .map(|g| FeatureVector::new(g).expect("gradient entries are finite"))
            .collect(),
        reference_gradient: FeatureVector::new(ref_grad).expect("gradient entries are finite"),
    })
}

/// Central-difference check of the feature gradients: perturbs every
/// coordinate of every feature by `±step` and re-evaluates the loss.
/// `step` must lie in `[1e-6, 1e-3]`; outside that band the estimate is
/// dominated by either roundoff or truncation.
pub fn finite_difference_gradient(
    features: &[FeatureVector],
    reference: &FeatureVector,
    plan: &OrderingPlan,
    step: f64,
) -> Result<Vec<FeatureVector>, Error> {
    assert!(
        (1e-6..=1e-3).contains(&step),
        "finite-difference step {step} outside [1e-6, 1e-3]"
    );
    if plan.ranked.len() < 2 {
        return Err(Error::TooFewViews(plan.ranked.len()));
    }
    check_dims(features, reference)?;
    let mut work: Vec<Vec<f64>> = features.iter().map(|f| f.values().to_vec()).collect();
    let mut out = Vec::with_capacity(features.len());
    for i in 0..work.len() {
        let mut grad = vec![0.0; reference.dim()];
        for j in 0..reference.dim() {
            let orig = work[i][j];
            work[i][j] = orig + step;
            let plus = hinge_value(&ranked_similarities(&work, reference.values(), plan)?).0;
            work[i][j] = orig - step;
            let minus = hinge_value(&ranked_similarities(&work, reference.values(), plan)?).0;
            work[i][j] = orig;
            grad[j] = (plus - minus) / (2.0 * step);
        }
        out.push(FeatureVector::new(grad).expect("gradient entries are finite"));
    }
    Ok(out)
}

/// Combined objective `score_loss + kappa * lp_value`.
pub fn total_loss(score_loss: f64, lp_value: f64, config: &LossConfig) -> Result<f64, Error> {
    for v in [score_loss, lp_value, config.kappa] {
        if !v.is_finite() {
            return Err(Error::NonFinite(v));
        }
    }
    Ok(score_loss + config.kappa * lp_value)
}
