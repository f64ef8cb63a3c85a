//! Low-dimensional similarity curve `w = 1 / (1 + a * d^(2b))` and the
//! cross-entropy between high- and low-dimensional memberships.

/// Clamp applied to memberships before taking logarithms.
pub const PROB_CLAMP: f64 = 1e-12;

/// Curve shape parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveParams {
    pub a: f64,
    pub b: f64,
}

impl CurveParams {
    /// `a = b = 1`, a Student-t kernel.
    pub fn student_t() -> Self {
        Self { a: 1.0, b: 1.0 }
    }

    /// Similarity from a squared distance.
    #[inline]
    pub fn similarity_sq(&self, sq_dist: f64) -> f64 {
        1.0 / (1.0 + self.a * sq_dist.powf(self.b))
    }
}

/// Similarity of two projected points.
pub fn low_dim_similarity(yi: &[f64], yj: &[f64], a: f64, b: f64) -> f64 {
    let sq: f64 = yi.iter().zip(yj).map(|(p, q)| (p - q) * (p - q)).sum();
    CurveParams { a, b }.similarity_sq(sq)
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Cross-entropy contribution of one ordered pair.
#[inline]
pub fn pair_cross_entropy(v: f64, w: f64) -> f64 {
    let (v, w) = (clamp_prob(v), clamp_prob(w));
    v * (v / w).ln() + (1.0 - v) * ((1.0 - v) / (1.0 - w)).ln()
}

/// Summed cross-entropy over aligned membership slices.
pub fn cross_entropy(v: &[f64], w: &[f64]) -> f64 {
    assert_eq!(v.len(), w.len(), "membership slices must align");
    v.iter().zip(w).map(|(&v, &w)| pair_cross_entropy(v, w)).sum()
}

fn target_curve(t: f64, min_dist: f64) -> f64 {
    if t <= min_dist {
        1.0
    } else {
        (-(t - min_dist)).exp()
    }
}

/// Grid on which the curve is fitted: 300 points spanning `[0, 3]`.
pub fn fit_grid() -> Vec<f64> {
    (0..300).map(|i| 3.0 * i as f64 / 299.0).collect()
}

/// Least-squares fit of `(a, b)` so the similarity curve tracks a flat top
/// up to `min_dist` followed by exponential decay. Levenberg-Marquardt.
pub fn fit_ab(min_dist: f64) -> CurveParams {
    let grid = fit_grid();
    let target: Vec<f64> = grid.iter().map(|&t| target_curve(t, min_dist)).collect();
    let sse = |a: f64, b: f64| -> f64 {
        grid.iter()
            .zip(&target)
            .map(|(&t, &y)| {
                let r = 1.0 / (1.0 + a * t.powf(2.0 * b)) - y;
                r * r
            })
            .sum()
    };

    let (mut a, mut b) = (1.8, 0.8);
    let mut lambda = 1e-3;
    let mut cost = sse(a, b);
    for _ in 0..500 {
        // Normal equations J^T J and J^T r.
        let (mut jaa, mut jab, mut jbb, mut ga, mut gb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&t, &y) in grid.iter().zip(&target) {
            if t == 0.0 {
                continue;
            }
            let tp = t.powf(2.0 * b);
            let denom = 1.0 + a * tp;
            let f = 1.0 / denom;
            let r = f - y;
            let da = -tp / (denom * denom);
            let db = -a * tp * 2.0 * t.ln() / (denom * denom);
            jaa += da * da;
            jab += da * db;
            jbb += db * db;
            ga += da * r;
            gb += db * r;
        }
        let mut improved = false;
        for _ in 0..30 {
            let (m11, m22) = (jaa * (1.0 + lambda), jbb * (1.0 + lambda));
            let det = m11 * m22 - jab * jab;
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let step_a = -(m22 * ga - jab * gb) / det;
            let step_b = -(m11 * gb - jab * ga) / det;
            let (na, nb) = (a + step_a, b + step_b);
            if na > 0.0 && nb > 0.0 {
                let c = sse(na, nb);
                if c < cost {
                    let rel = (cost - c) / cost.max(1e-300);
                    a = na;
                    b = nb;
                    cost = c;
                    lambda = (lambda * 0.3).max(1e-12);
                    improved = rel > 1e-15;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    CurveParams { a, b }
}
