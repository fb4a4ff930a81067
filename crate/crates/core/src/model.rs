//! Domain types: constellations, complex sample grids, pilot grids, and the
//! phase-innovation covariance.

use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::SymMatrix;

pub type C64 = Complex<f64>;

/// A square QAM constellation with per-point bit labels.
///
/// Points are zero-mean with average energy `es`; labels are Gray per
/// real/imaginary axis, stored MSB-first with the in-phase bits leading.
#[derive(Debug, Clone)]
pub struct Constellation {
    points: Vec<C64>,
    labels: Vec<u32>,
    bits_per_symbol: usize,
    es: f64,
    /// labels[point_index] inverted: point index for each label value.
    index_by_label: Vec<u32>,
}

impl Constellation {
    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Bits per symbol, `log2(size)`.
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Average symbol energy.
    pub fn es(&self) -> f64 {
        self.es
    }

    pub fn point(&self, idx: usize) -> C64 {
        self.points[idx]
    }

    pub fn label(&self, idx: usize) -> u32 {
        self.labels[idx]
    }

    /// The `j`-th labeling bit (0 = first/MSB) of point `idx`.
    pub fn bit(&self, idx: usize, j: usize) -> u8 {
        ((self.labels[idx] >> (self.bits_per_symbol - 1 - j)) & 1) as u8
    }

    /// Point index carrying the given label.
    pub fn index_of_label(&self, label: u32) -> usize {
        self.index_by_label[label as usize] as usize
    }

    /// Index of the constellation point nearest to `z` in Euclidean distance.
    pub fn nearest(&self, z: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::MAX;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Indices of the maximum-energy (corner) points. Pilot values are
    /// drawn from this set: a weak inner-ring anchor measures the phase
    /// several times worse, and with only a handful of pilots per channel
    /// that is the difference between acquiring the phase and losing the
    /// frame. For QPSK this is the whole constellation.
    pub fn max_energy_indices(&self) -> Vec<usize> {
        let emax = self
            .points
            .iter()
            .map(|p| p.norm_sqr())
            .fold(0.0f64, f64::max);
        (0..self.points.len())
            .filter(|&i| (self.points[i].norm_sqr() - emax).abs() < 1e-9 * emax)
            .collect()
    }
}

/// Builds a zero-mean square QAM constellation with average energy `es` and
/// per-axis Gray labeling. Supported orders: 4, 16, 64, 256.
pub fn make_qam(order: usize, es: f64) -> Result<Constellation> {
    if !matches!(order, 4 | 16 | 64 | 256) {
        return Err(Error::UnsupportedOrder(order));
    }
    assert!(es > 0.0, "symbol energy must be positive");
    let side = (order as f64).sqrt() as usize;
    let axis_bits = side.trailing_zeros() as usize;
    let bits_per_symbol = 2 * axis_bits;

    // Unit-spaced PAM levels, then scale to the requested energy.
    let level = |i: usize| (2 * i) as f64 - (side - 1) as f64;
    let raw_energy: f64 = (0..side).map(|i| level(i) * level(i)).sum::<f64>() / side as f64 * 2.0;
    let scale = (es / raw_energy).sqrt();

    let gray = |i: usize| (i ^ (i >> 1)) as u32;
    let mut points = Vec::with_capacity(order);
    let mut labels = Vec::with_capacity(order);
    for i in 0..side {
        for q in 0..side {
            points.push(C64::new(level(i) * scale, level(q) * scale));
            labels.push((gray(i) << axis_bits) | gray(q));
        }
    }
    let mut index_by_label = vec![0u32; order];
    for (idx, &l) in labels.iter().enumerate() {
        index_by_label[l as usize] = idx as u32;
    }
    Ok(Constellation {
        points,
        labels,
        bits_per_symbol,
        es,
        index_by_label,
    })
}

/// D x N grid of complex samples, row-major by channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    d: usize,
    n: usize,
    values: Vec<C64>,
}

impl ComplexGrid {
    pub fn zeros(d: usize, n: usize) -> Self {
        Self {
            d,
            n,
            values: vec![C64::new(0.0, 0.0); d * n],
        }
    }

    pub fn from_values(d: usize, n: usize, values: Vec<C64>) -> Result<Self> {
        if values.len() != d * n {
            return Err(Error::LengthMismatch {
                expected: d * n,
                got: values.len(),
            });
        }
        Ok(Self { d, n, values })
    }

    pub fn channels(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// One channel's time series.
    pub fn row(&self, i: usize) -> &[C64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }
}

impl std::ops::Index<(usize, usize)> for ComplexGrid {
    type Output = C64;
    fn index(&self, (i, k): (usize, usize)) -> &C64 {
        &self.values[i * self.n + k]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexGrid {
    fn index_mut(&mut self, (i, k): (usize, usize)) -> &mut C64 {
        &mut self.values[i * self.n + k]
    }
}

/// Innovation covariance of the phase random walk plus per-channel AWGN
/// variances (per real dimension).
#[derive(Debug, Clone)]
pub struct CovarianceSpec {
    pub q: SymMatrix,
    pub sigma2: Vec<f64>,
}

impl CovarianceSpec {
    /// Validates that `q` is PSD (to within a small eigenvalue tolerance)
    /// and that every noise variance is positive.
    pub fn new(q: SymMatrix, sigma2: Vec<f64>) -> Result<Self> {
        if q.dim() != sigma2.len() {
            return Err(Error::DimensionMismatch(format!(
                "Q is {}x{} but {} noise variances given",
                q.dim(),
                q.dim(),
                sigma2.len()
            )));
        }
        let min_eig = q.min_eigenvalue();
        let scale = q.as_matrix().trace().max(1e-300);
        if min_eig < -1e-10 * scale {
            return Err(Error::NotPsd(min_eig));
        }
        if sigma2.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidConfig(
                "noise variances must be positive".into(),
            ));
        }
        Ok(Self { q, sigma2 })
    }

    /// Same AWGN variance on every channel.
    pub fn uniform_noise(q: SymMatrix, sigma2: f64, d: usize) -> Result<Self> {
        Self::new(q, vec![sigma2; d])
    }

    pub fn dim(&self) -> usize {
        self.sigma2.len()
    }

    /// Copy with all off-diagonal entries of `Q` dropped; turns the joint
    /// smoother into independent per-channel smoothers.
    pub fn per_channel(&self) -> Self {
        let d = self.dim();
        let q = SymMatrix::from_fn(d, |i, j| if i == j { self.q[(i, i)] } else { 0.0 });
        Self {
            q,
            sigma2: self.sigma2.clone(),
        }
    }
}

/// Covariance of the per-symbol phase increments: `var_lpn` everywhere plus
/// `var_drift` on the diagonal. One laser phase-noise component common to
/// all channels, plus independent per-channel drifts.
pub fn build_covariance(var_lpn: f64, var_drift: f64, d: usize) -> SymMatrix {
    assert!(var_lpn >= 0.0 && var_drift >= 0.0);
    SymMatrix::from_fn(d, |i, j| {
        if i == j {
            var_lpn + var_drift
        } else {
            var_lpn
        }
    })
}

/// Pilot layout and values over a D x N frame. `true` in `mask` marks a
/// pilot slot; data slots are everything else.
#[derive(Debug, Clone)]
pub struct PilotGrid {
    d: usize,
    n: usize,
    mask: Vec<bool>,
    values: Vec<C64>,
    point_index: Vec<u32>,
}

impl PilotGrid {
    /// A grid with no pilots at all.
    pub fn none(d: usize, n: usize) -> Self {
        Self {
            d,
            n,
            mask: vec![false; d * n],
            values: vec![C64::new(0.0, 0.0); d * n],
            point_index: vec![0; d * n],
        }
    }

    pub fn channels(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_pilot(&self, i: usize, k: usize) -> bool {
        self.mask[i * self.n + k]
    }

    /// Pilot symbol value; only meaningful where `is_pilot` is true.
    pub fn value(&self, i: usize, k: usize) -> C64 {
        self.values[i * self.n + k]
    }

    /// Constellation index of the pilot value.
    pub fn point_index(&self, i: usize, k: usize) -> usize {
        self.point_index[i * self.n + k] as usize
    }

    pub fn num_pilots(&self) -> usize {
        self.mask.iter().filter(|&&p| p).count()
    }

    pub fn pilot_fraction(&self) -> f64 {
        self.num_pilots() as f64 / (self.d * self.n) as f64
    }

    /// Data (non-pilot) time indices of channel `i`, in time order.
    pub fn data_slots(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&k| !self.is_pilot(i, k)).collect()
    }

    /// Marks a slot as a pilot with the given constellation point. Used to
    /// absorb leftover data slots when aligning codewords to the frame.
    pub fn force_pilot(&mut self, i: usize, k: usize, constellation: &Constellation, idx: usize) {
        let at = i * self.n + k;
        self.mask[at] = true;
        self.values[at] = constellation.point(idx);
        self.point_index[at] = idx as u32;
    }

    /// Plain-text mask: one line per channel, 'P' for pilot, 'D' for data.
    pub fn to_mask_text(&self) -> String {
        let mut out = String::with_capacity(self.d * (self.n + 1));
        for i in 0..self.d {
            for k in 0..self.n {
                out.push(if self.is_pilot(i, k) { 'P' } else { 'D' });
            }
            out.push('\n');
        }
        out
    }
}

/// Wrapped-diagonal placement parameters: per-channel pilot period and the
/// per-channel time stagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PilotPlacement {
    pub period: usize,
    pub stagger: usize,
}

impl PilotPlacement {
    /// Period `round(1/rate)` and stagger `floor(period / d)`; stagger 0
    /// collapses to aligned columns when the period is below `d`.
    pub fn from_rate(rate: f64, d: usize) -> Result<Self> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::InvalidRate(rate));
        }
        let period = (1.0 / rate).round() as usize;
        if period < 1 {
            return Err(Error::InvalidRate(rate));
        }
        Ok(Self {
            period,
            stagger: period / d,
        })
    }

    /// Whether channel `i` carries a pilot at time `k` (0-based).
    pub fn is_pilot(&self, i: usize, k: usize) -> bool {
        (k + self.period - (i * self.stagger) % self.period) % self.period == 0
    }
}

/// Places pilots on a wrapped diagonal in the space-time grid: channel `i`
/// carries pilots with period `round(1/rate)`, staggered in time by
/// `floor(period/D)` per channel. Pilot values are drawn uniformly from
/// the constellation's maximum-energy points.
pub fn place_pilots_wrapped_diagonal<R: Rng>(
    d: usize,
    n: usize,
    rate: f64,
    constellation: &Constellation,
    rng: &mut R,
) -> Result<PilotGrid> {
    let placement = PilotPlacement::from_rate(rate, d)?;
    Ok(place_pilots_with(placement, d, n, constellation, rng))
}

/// Wrapped-diagonal placement with explicit period/stagger.
pub fn place_pilots_with<R: Rng>(
    placement: PilotPlacement,
    d: usize,
    n: usize,
    constellation: &Constellation,
    rng: &mut R,
) -> PilotGrid {
    let corners = constellation.max_energy_indices();
    let mut grid = PilotGrid::none(d, n);
    for i in 0..d {
        for k in 0..n {
            if placement.is_pilot(i, k) {
                let idx = corners[rng.random_range(0..corners.len())];
                grid.force_pilot(i, k, constellation, idx);
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn qpsk_points_are_normalized_corners() {
        let c = make_qam(4, 1.0).unwrap();
        let r = 1.0 / 2.0f64.sqrt();
        for p in c.points() {
            assert!((p.re.abs() - r).abs() < 1e-15);
            assert!((p.im.abs() - r).abs() < 1e-15);
        }
    }

    #[test]
    fn qam_mean_and_energy_invariants() {
        for order in [4usize, 16, 64, 256] {
            let c = make_qam(order, 1.0).unwrap();
            let mean: C64 = c.points().iter().sum::<C64>() / order as f64;
            assert!(mean.norm() < 1e-12, "order {order}: mean {mean}");
            let energy: f64 =
                c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((energy - 1.0).abs() < 1e-12, "order {order}: Es {energy}");
            // Labels are a bijection.
            let mut seen = vec![false; order];
            for i in 0..order {
                let l = c.label(i) as usize;
                assert!(!seen[l]);
                seen[l] = true;
            }
        }
    }

    #[test]
    fn qam64_axis_neighbors_differ_in_one_bit() {
        // Exhaustive adjacency scan along both axes.
        let c = make_qam(64, 1.0).unwrap();
        let side = 8;
        let idx = |i: usize, q: usize| i * side + q;
        for i in 0..side {
            for q in 0..side {
                if i + 1 < side {
                    let x = c.label(idx(i, q)) ^ c.label(idx(i + 1, q));
                    assert_eq!(x.count_ones(), 1);
                }
                if q + 1 < side {
                    let x = c.label(idx(i, q)) ^ c.label(idx(i, q + 1));
                    assert_eq!(x.count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn unsupported_order_rejected() {
        assert!(matches!(make_qam(32, 1.0), Err(Error::UnsupportedOrder(32))));
    }

    #[test]
    fn covariance_matches_stated_structure() {
        let q = build_covariance(0.3, 0.05, 1);
        assert!((q[(0, 0)] - 0.35).abs() < 1e-15);

        let lpn = 2.0 * std::f64::consts::PI * 5e-5;
        let q = build_covariance(lpn, lpn / 1000.0, 20);
        assert!((q[(0, 0)] - 3.1447e-4).abs() < 1e-7);
        assert!((q[(0, 1)] - 3.1416e-4).abs() < 1e-7);
    }

    #[test]
    fn covariance_eigenvalues_from_rank_one_structure() {
        // lpn * ones + drift * I has eigenvalues {drift (D-1 times),
        // D*lpn + drift}; check against a full eigensolve.
        let (lpn, drift, d) = (2e-4, 2e-7, 6);
        let q = build_covariance(lpn, drift, d);
        let mut eigs: Vec<f64> = q
            .as_matrix()
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eigs.sort_by(f64::total_cmp);
        for e in &eigs[..d - 1] {
            assert!((e - drift).abs() < 1e-12);
        }
        assert!((eigs[d - 1] - (d as f64 * lpn + drift)).abs() < 1e-12);
        assert!(eigs[0] >= 0.0);
    }

    #[test]
    fn covariance_psd_for_nonnegative_inputs() {
        for &(lpn, drift) in &[(0.0, 0.0), (1e-3, 0.0), (0.0, 1e-5), (0.5, 0.1)] {
            let q = build_covariance(lpn, drift, 5);
            assert!(q.min_eigenvalue() > -1e-12);
        }
    }

    #[test]
    fn pilots_degenerate_single_channel() {
        let c = make_qam(4, 1.0).unwrap();
        let mut rng = StdRng::seed_from_u64(1);
        let g = place_pilots_wrapped_diagonal(1, 4, 0.5, &c, &mut rng).unwrap();
        // 0-based times 0 and 2.
        assert!(g.is_pilot(0, 0) && g.is_pilot(0, 2));
        assert!(!g.is_pilot(0, 1) && !g.is_pilot(0, 3));
    }

    #[test]
    fn pilots_cycle_one_per_column() {
        let c = make_qam(4, 1.0).unwrap();
        let mut rng = StdRng::seed_from_u64(2);
        let g = place_pilots_wrapped_diagonal(4, 8, 0.25, &c, &mut rng).unwrap();
        for k in 0..8 {
            let count = (0..4).filter(|&i| g.is_pilot(i, k)).count();
            assert_eq!(count, 1, "column {k}");
            // Channels cycle 0,1,2,3,0,...
            let ch = (0..4).find(|&i| g.is_pilot(i, k)).unwrap();
            assert_eq!(ch, k % 4);
        }
        for i in 0..4 {
            let rate = (0..8).filter(|&k| g.is_pilot(i, k)).count() as f64 / 8.0;
            assert!((rate - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn pilot_fraction_at_one_percent() {
        let c = make_qam(16, 1.0).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        let g = place_pilots_wrapped_diagonal(20, 10_000, 0.01, &c, &mut rng).unwrap();
        let frac = g.pilot_fraction();
        assert!((frac - 0.01).abs() <= 1.0 / (20.0 * 10_000.0), "frac {frac}");
    }

    #[test]
    fn pilot_rate_exact_when_period_divides_frame() {
        let c = make_qam(4, 1.0).unwrap();
        for (d, n, rp) in [(2usize, 40usize, 0.1f64), (4, 100, 0.05), (8, 64, 0.125)] {
            let mut rng = StdRng::seed_from_u64(4);
            let g = place_pilots_wrapped_diagonal(d, n, rp, &c, &mut rng).unwrap();
            assert!(
                (g.pilot_fraction() - rp).abs() <= 1.0 / (d * n) as f64,
                "d={d} n={n} rp={rp}: {}",
                g.pilot_fraction()
            );
        }
    }

    #[test]
    fn invalid_pilot_rate_rejected() {
        let c = make_qam(4, 1.0).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        assert!(place_pilots_wrapped_diagonal(2, 10, 0.0, &c, &mut rng).is_err());
        assert!(place_pilots_wrapped_diagonal(2, 10, 1.0, &c, &mut rng).is_err());
    }

    #[test]
    fn mask_text_round_shape() {
        let c = make_qam(4, 1.0).unwrap();
        let mut rng = StdRng::seed_from_u64(6);
        let g = place_pilots_wrapped_diagonal(2, 6, 0.5, &c, &mut rng).unwrap();
        let text = g.to_mask_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines.iter().all(|l| l.len() == 6));
        assert_eq!(lines[0].chars().next().unwrap(), 'P');
        assert!(lines[0].chars().all(|ch| ch == 'P' || ch == 'D'));
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    proptest! {
        #[test]
        fn covariance_always_psd(
            lpn in 0.0f64..1.0,
            drift in 0.0f64..1.0,
            d in 1usize..16,
        ) {
            let q = build_covariance(lpn, drift, d);
            prop_assert!(q.min_eigenvalue() > -1e-10 * (lpn + drift + 1.0));
        }

        #[test]
        fn pilot_rate_within_one_slot(
            d in 1usize..8,
            periods in 1usize..12,
            inv_rate in 2usize..40,
            seed in 0u64..1000,
        ) {
            // Frame length a multiple of the period so the rate is exact.
            let rate = 1.0 / inv_rate as f64;
            let n = periods * inv_rate;
            let c = make_qam(4, 1.0).unwrap();
            let mut rng = StdRng::seed_from_u64(seed);
            let g = place_pilots_wrapped_diagonal(d, n, rate, &c, &mut rng).unwrap();
            let frac = g.pilot_fraction();
            prop_assert!(
                (frac - rate).abs() <= 1.0 / (d * n) as f64 + 1e-12,
                "d={} n={} rate={} frac={}", d, n, rate, frac
            );
            // Pilot values always come from the constellation.
            for i in 0..d {
                for k in 0..n {
                    if g.is_pilot(i, k) {
                        let idx = g.point_index(i, k);
                        prop_assert_eq!(g.value(i, k), c.point(idx));
                    }
                }
            }
        }
    }
}
