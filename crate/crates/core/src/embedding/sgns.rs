//! Negative-sampling objective for one (center, context) pair.
//!
//! For a center vector `c`, a positive context vector `o` and noise vectors
//! `n_1..n_K`:
//!
//! ```text
//! loss = -ln σ(c·o) - Σ_i ln σ(-c·n_i)
//! ```
//!
//! Dot products are clamped to `±DOT_CLAMP` before the sigmoid.

use num_traits::Float;

pub const DOT_CLAMP: f64 = 30.0;

/// Gradient scale `∂loss/∂(c·t)` and loss contribution of one target with
/// label 1 (positive) or 0 (noise).
#[inline]
pub fn pair_coefficient<T: Float>(dot: T, positive: bool) -> (T, T) {
    let clamp = T::from(DOT_CLAMP).unwrap();
    let x = dot.max(-clamp).min(clamp);
    let one = T::one();
    let sigma = one / (one + (-x).exp());
    if positive {
        // -ln σ(x) = ln(1 + e^{-x})
        (sigma - one, (-x).exp().ln_1p())
    } else {
        // -ln σ(-x) = ln(1 + e^{x})
        (sigma, x.exp().ln_1p())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient<T> {
    pub loss: T,
    pub center: Vec<T>,
    pub context: Vec<T>,
    pub negatives: Vec<Vec<T>>,
}

fn dot<T: Float>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Loss and gradients with respect to every participating vector.
pub fn negative_sampling_gradient<T: Float>(
    center: &[T],
    context: &[T],
    negatives: &[&[T]],
) -> SgnsGradient<T> {
    let f = center.len();
    assert_eq!(context.len(), f, "context dimension");
    let mut grad_center = vec![T::zero(); f];

    let (g, mut loss) = pair_coefficient(dot(center, context), true);
    let grad_context: Vec<T> = center.iter().map(|&c| g * c).collect();
    for (gc, &o) in grad_center.iter_mut().zip(context) {
        *gc = *gc + g * o;
    }

    let mut grad_negatives = Vec::with_capacity(negatives.len());
    for neg in negatives {
        assert_eq!(neg.len(), f, "negative dimension");
        let (g, l) = pair_coefficient(dot(center, neg), false);
        loss = loss + l;
        grad_negatives.push(center.iter().map(|&c| g * c).collect());
        for (gc, &n) in grad_center.iter_mut().zip(neg.iter()) {
            *gc = *gc + g * n;
        }
    }

    SgnsGradient {
        loss,
        center: grad_center,
        context: grad_context,
        negatives: grad_negatives,
    }
}
