//! Per-label trajectories.
//!
//! After the change of variables every label `z` moves independently, and
//! labels inside one level-set cell share a single averaged problem. The
//! optimal quantile is therefore assembled from a finite set of *tracks*:
//! one per cell, plus sample labels on the continuous part of `Q_R(0)`,
//! between which positions are interpolated linearly in `z`.

use crate::error::Result;
use crate::lq::ScalarLQSolution;
use crate::measures::{Domain, QuantileFunction};
use crate::partition::LevelSetPartition;
use crate::tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrackKind {
    /// Level-set cell with the given index.
    Cell(usize),
    /// Sample label where `Q_R(0)` and the demand are continuous.
    Point,
    /// Left limit at a jump (or the right end of a continuous piece).
    Left,
    /// Right limit at a jump (or the left end of a continuous piece).
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Track {
    pub kind: TrackKind,
    pub z_lo: f64,
    /// Equal to `z_lo` for samples.
    pub z_hi: f64,
    /// Initial position.
    pub r0: f64,
}

impl Track {
    pub fn is_cell(&self) -> bool {
        matches!(self.kind, TrackKind::Cell(_))
    }

    pub fn weight(&self) -> f64 {
        self.z_hi - self.z_lo
    }

    /// Demand seen by this track: the cell mean for cells, the one-sided
    /// value of `qd` for samples.
    pub fn demand(&self, qd: &QuantileFunction) -> f64 {
        match self.kind {
            TrackKind::Cell(_) => qd.integral(self.z_lo, self.z_hi) / self.weight(),
            TrackKind::Point | TrackKind::Left => qd.eval(self.z_lo),
            TrackKind::Right => qd.eval_right(self.z_lo),
        }
    }
}

/// Ordered tracks; `linked[j]` says whether positions are interpolated
/// between tracks `j` and `j + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackLayout {
    pub tracks: Vec<Track>,
    pub linked: Vec<bool>,
}

/// Labels where `q` jumps (interior gaps of its support).
pub fn jump_labels(q: &QuantileFunction) -> Vec<f64> {
    let tol = tolerances::ATOM_MERGE * q.domain().len();
    q.knots()
        .windows(2)
        .filter(|w| w[0].0 == w[1].0 && w[1].1 - w[0].1 > tol)
        .map(|w| w[0].0)
        .collect()
}

/// Build the tracks for `q0` and its partition. `extra` are additional
/// sample labels and `demand_jumps` labels where the demand quantile jumps;
/// both are only used on the continuous part.
pub fn build_layout(q0: &QuantileFunction, partition: &LevelSetPartition, extra: &[f64], demand_jumps: &[f64]) -> TrackLayout {
    const EPS: f64 = 1e-13;
    let mut jumps = jump_labels(q0);
    jumps.extend_from_slice(demand_jumps);
    let is_jump = |z: f64| jumps.iter().any(|&j| (j - z).abs() <= EPS);

    let mut pieces: Vec<(f64, f64, Option<usize>)> = partition
        .cells()
        .iter()
        .enumerate()
        .map(|(i, c)| (c.z_lo, c.z_hi, Some(i)))
        .collect();
    pieces.extend(partition.continuum().into_iter().map(|(a, b)| (a, b, None)));
    pieces.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut tracks = Vec::new();
    for (a, b, cell) in pieces {
        if let Some(i) = cell {
            tracks.push(Track {
                kind: TrackKind::Cell(i),
                z_lo: a,
                z_hi: b,
                r0: partition.cells()[i].level,
            });
            continue;
        }
        if b - a <= EPS {
            continue;
        }
        let mut zs: Vec<f64> = q0
            .knots()
            .iter()
            .map(|k| k.0)
            .chain(extra.iter().copied())
            .chain(jumps.iter().copied())
            .filter(|&z| z > a + EPS && z < b - EPS)
            .collect();
        zs.sort_by(f64::total_cmp);
        zs.dedup_by(|x, y| (*x - *y).abs() <= EPS);
        let sample = |kind, z: f64| {
            let r0 = match kind {
                TrackKind::Right => q0.eval_right(z),
                _ => q0.eval(z),
            };
            Track { kind, z_lo: z, z_hi: z, r0 }
        };
        tracks.push(sample(TrackKind::Right, a));
        for z in zs {
            if is_jump(z) {
                tracks.push(sample(TrackKind::Left, z));
                tracks.push(sample(TrackKind::Right, z));
            } else {
                tracks.push(sample(TrackKind::Point, z));
            }
        }
        tracks.push(sample(TrackKind::Left, b));
    }
    let linked = tracks
        .windows(2)
        .map(|w| !w[0].is_cell() && !w[1].is_cell() && w[0].z_lo < w[1].z_lo)
        .collect();
    TrackLayout { tracks, linked }
}

impl TrackLayout {
    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Demand value of every track at one instant.
    pub fn demand_values(&self, qd: &QuantileFunction) -> Vec<f64> {
        self.tracks.iter().map(|t| t.demand(qd)).collect()
    }

    /// Quantile function with the given track positions.
    pub fn quantile(&self, domain: Domain, positions: &[f64]) -> Result<QuantileFunction> {
        let mut knots = Vec::with_capacity(2 * self.tracks.len());
        for (t, &r) in self.tracks.iter().zip(positions) {
            knots.push((t.z_lo, r));
            if t.is_cell() {
                knots.push((t.z_hi, r));
            }
        }
        QuantileFunction::from_knots(domain, knots)
    }

    /// `int (f)^2 dz` over the label space for per-track values `f`:
    /// cells weigh by their mass, linked samples are interpolated linearly.
    pub fn l2_sq(&self, f: &[f64]) -> f64 {
        let mut s = 0.0;
        for (j, t) in self.tracks.iter().enumerate() {
            if t.is_cell() {
                s += t.weight() * f[j] * f[j];
            }
        }
        for (j, &l) in self.linked.iter().enumerate() {
            if l {
                let dz = self.tracks[j + 1].z_lo - self.tracks[j].z_lo;
                s += dz * (f[j] * f[j] + f[j] * f[j + 1] + f[j + 1] * f[j + 1]) / 3.0;
            }
        }
        s
    }

    /// Same quadratic form as [`TrackLayout::l2_sq`] for a symmetric
    /// per-pair energy `e(j, l)` (used for frequency-domain costs).
    pub fn l2_form(&self, e: impl Fn(usize, usize) -> f64) -> f64 {
        let mut s = 0.0;
        for (j, t) in self.tracks.iter().enumerate() {
            if t.is_cell() {
                s += t.weight() * e(j, j);
            }
        }
        for (j, &l) in self.linked.iter().enumerate() {
            if l {
                let dz = self.tracks[j + 1].z_lo - self.tracks[j].z_lo;
                s += dz * (e(j, j) + e(j, j + 1) + e(j + 1, j + 1)) / 3.0;
            }
        }
        s
    }
}

/// Steady-state periodic trajectory of one track, stored by its demand
/// harmonics.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTrack {
    pub alpha: f64,
    pub period: f64,
    /// Demand mean `c_0`.
    pub mean: f64,
    /// Demand coefficients `c_k`, `k = 1..=H`, as `(re, im)`.
    pub coefs: Vec<(f64, f64)>,
    /// Demand samples on the period grid (without the wrap-around point).
    pub samples: Vec<f64>,
}

impl FourierTrack {
    /// Fit `H` harmonics to `samples` taken at `t_n = n P / N`.
    pub fn fit(alpha: f64, period: f64, samples: Vec<f64>, harmonics: usize) -> Self {
        let n = samples.len();
        let inv = 1.0 / n as f64;
        let mean = samples.iter().sum::<f64>() * inv;
        let coefs = (1..=harmonics)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (m, &d) in samples.iter().enumerate() {
                    let th = -2.0 * std::f64::consts::PI * ((k * m) % n) as f64 * inv;
                    re += d * th.cos();
                    im += d * th.sin();
                }
                (re * inv, im * inv)
            })
            .collect();
        FourierTrack { alpha, period, mean, coefs, samples }
    }

    pub fn omega(&self, k: usize) -> f64 {
        2.0 * std::f64::consts::PI * k as f64 / self.period
    }

    /// Steady-state gain `1 / (alpha^2 omega^2 + 1)`.
    pub fn gain(&self, k: usize) -> f64 {
        let aw = self.alpha * self.omega(k);
        1.0 / (aw * aw + 1.0)
    }

    /// `sum_k 2 Re(a_k c_k e^{i k w t})` with per-harmonic complex factors.
    fn synth(&self, t: f64, factor: impl Fn(usize) -> (f64, f64)) -> f64 {
        let w = self.omega(1) * t.rem_euclid(self.period);
        let (s1, c1) = w.sin_cos();
        let (mut er, mut ei) = (c1, s1);
        let mut acc = 0.0;
        for (i, &(cr, ci)) in self.coefs.iter().enumerate() {
            let k = i + 1;
            let (fr, fi) = factor(k);
            let (ar, ai) = (fr * cr - fi * ci, fr * ci + fi * cr);
            acc += 2.0 * (ar * er - ai * ei);
            let nr = er * c1 - ei * s1;
            ei = er * s1 + ei * c1;
            er = nr;
        }
        acc
    }

    pub fn state_at(&self, t: f64) -> f64 {
        self.mean + self.synth(t, |k| (self.gain(k), 0.0))
    }

    pub fn control_at(&self, t: f64) -> f64 {
        self.synth(t, |k| (0.0, self.omega(k) * self.gain(k)))
    }

    /// Truncated Fourier series of the demand.
    pub fn demand_series_at(&self, t: f64) -> f64 {
        self.mean + self.synth(t, |_| (1.0, 0.0))
    }

    /// Demand samples interpolated linearly (periodically).
    pub fn demand_at(&self, t: f64) -> f64 {
        let n = self.samples.len();
        let s = t.rem_euclid(self.period) / self.period * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        let lam = s - i as f64;
        (1.0 - lam) * self.samples[i] + lam * self.samples[(i + 1) % n]
    }

    /// Sample energy `(1/N) sum d_n e_n` not carried by the retained
    /// harmonics.
    pub fn tail_energy(&self, other: &FourierTrack) -> f64 {
        let n = self.samples.len() as f64;
        let total: f64 = self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).sum::<f64>() / n;
        let kept: f64 = self.mean * other.mean
            + 2.0
                * self
                    .coefs
                    .iter()
                    .zip(&other.coefs)
                    .map(|(a, b)| a.0 * b.0 + a.1 * b.1)
                    .sum::<f64>();
        (total - kept).max(0.0)
    }
}

/// Trajectory of one track.
#[derive(Clone, Debug, PartialEq)]
pub enum TrackPath {
    Finite(ScalarLQSolution),
    Periodic(FourierTrack),
}

impl TrackPath {
    pub fn state_at(&self, t: f64) -> f64 {
        match self {
            TrackPath::Finite(s) => s.state_at(t),
            TrackPath::Periodic(f) => f.state_at(t),
        }
    }

    pub fn control_at(&self, t: f64) -> f64 {
        match self {
            TrackPath::Finite(s) => s.control_at(t),
            TrackPath::Periodic(f) => f.control_at(t),
        }
    }

    pub fn demand_at(&self, t: f64) -> f64 {
        match self {
            TrackPath::Finite(s) => s.demand_at(t),
            TrackPath::Periodic(f) => f.demand_at(t),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{quantile_of, Density};
    use crate::partition::build_partition;

    fn dom() -> Domain {
        Domain::new(0.0, 4.0).unwrap()
    }

    #[test]
    fn atoms_and_continuum_layout() {
        // atom of mass 0.5 at 1, uniform mass 0.5 on [2, 4]
        let d = Density::new(
            dom(),
            vec![crate::measures::Atom { position: 1.0, mass: 0.5 }],
            vec![2.0, 4.0],
            vec![0.25],
        )
        .unwrap();
        let q = quantile_of(&d);
        let p = build_partition(&q);
        let lay = build_layout(&q, &p, &[0.75], &[]);
        let kinds: Vec<TrackKind> = lay.tracks.iter().map(|t| t.kind).collect();
        assert_eq!(kinds, vec![TrackKind::Cell(0), TrackKind::Right, TrackKind::Point, TrackKind::Left]);
        assert_eq!(lay.linked, vec![false, true, true]);
        assert_eq!(lay.tracks[1].r0, 2.0);
        assert!((lay.tracks[2].r0 - 3.0).abs() < 1e-12);
        let q1 = lay.quantile(dom(), &lay.tracks.iter().map(|t| t.r0).collect::<Vec<_>>()).unwrap();
        for z in [0.2, 0.5, 0.6, 0.9, 1.0] {
            assert!((q1.eval(z) - q.eval(z)).abs() < 1e-12);
        }
    }

    #[test]
    fn jump_splits_sample() {
        let d = Density::new(dom(), vec![], vec![0.0, 1.0, 3.0, 4.0], vec![0.5, 0.0, 0.5]).unwrap();
        let q = quantile_of(&d);
        let p = build_partition(&q);
        assert!(p.cells().is_empty());
        let lay = build_layout(&q, &p, &[], &[]);
        let kinds: Vec<TrackKind> = lay.tracks.iter().map(|t| t.kind).collect();
        assert_eq!(
            kinds,
            vec![TrackKind::Right, TrackKind::Left, TrackKind::Right, TrackKind::Left]
        );
        assert_eq!(lay.linked, vec![true, false, true]);
        assert_eq!(lay.tracks[1].r0, 1.0);
        assert_eq!(lay.tracks[2].r0, 3.0);
    }

    #[test]
    fn l2_matches_quantile_distance() {
        let d = Density::new(dom(), vec![], vec![0.0, 4.0], vec![0.25]).unwrap();
        let q = quantile_of(&d);
        let p = build_partition(&q);
        let lay = build_layout(&q, &p, &[0.5], &[]);
        let f: Vec<f64> = lay.tracks.iter().map(|t| t.r0).collect();
        // int_0^1 (4z)^2 dz
        assert!((lay.l2_sq(&f) - 16.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_steady_state_of_single_harmonic() {
        let (alpha, period, n) = (0.3, 2.0, 64);
        let w = 2.0 * std::f64::consts::PI / period;
        let samples: Vec<f64> = (0..n).map(|m| 1.0 + (w * m as f64 * period / n as f64).cos()).collect();
        let f = FourierTrack::fit(alpha, period, samples, 8);
        let g = 1.0 / (alpha * alpha * w * w + 1.0);
        for t in [0.0, 0.3, 1.1] {
            // a^2 r'' = r - d has the periodic solution r = 1 + g cos(wt)
            let expect = 1.0 + g * (w * t).cos();
            assert!((f.state_at(t) - expect).abs() < 1e-12);
            let h = 1e-5;
            let du = (f.state_at(t + h) - f.state_at(t - h)) / (2.0 * h);
            assert!((f.control_at(t) - du).abs() < 1e-7);
        }
        assert!(f.tail_energy(&f) < 1e-12);
    }
}
