/// Five-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of
/// degree <= 9.
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664_0,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664_0,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Nodes and weights of the five-point rule mapped onto `[a, b]`.
pub(crate) fn gauss5(a: f64, b: f64) -> [(f64, f64); 5] {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut out = [(0.0, 0.0); 5];
    for (o, (x, w)) in out.iter_mut().zip(GL5_NODES.iter().zip(GL5_WEIGHTS.iter())) {
        *o = (mid + half * x, half * w);
    }
    out
}

/// Integral over `[z0, z1]` of `g^2` where `g` is affine with endpoint values
/// `g0` and `g1`.
#[inline]
pub(crate) fn affine_sq(z0: f64, z1: f64, g0: f64, g1: f64) -> f64 {
    (z1 - z0) * (g0 * g0 + g0 * g1 + g1 * g1) / 3.0
}

/// Integral over `[z0, z1]` of an affine function with endpoint values.
#[inline]
pub(crate) fn affine(z0: f64, z1: f64, g0: f64, g1: f64) -> f64 {
    0.5 * (z1 - z0) * (g0 + g1)
}

/// Composite trapezoid rule on a (possibly non-uniform) grid.
pub(crate) fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    debug_assert_eq!(t.len(), f.len());
    t.windows(2)
        .zip(f.windows(2))
        .map(|(tw, fw)| 0.5 * (tw[1] - tw[0]) * (fw[0] + fw[1]))
        .sum()
}
