//! Centered discrete Fourier transform and dense/sparse spectrum types.
//!
//! Frequencies live in the centered band `B = (-ceil(N/2), floor(N/2)]` and
//! signal entry `j` holds the value at the grid point `y_j = -pi + 2*pi*j/N`.
//! With that pairing the analysis map is
//! `fhat_w = ((-1)^w / N) * sum_j f_j e^{-2*pi*i*w*j/N}`
//! and synthesis is the trigonometric polynomial
//! `f(x) = sum_{w in B} fhat_w e^{i*w*x}` evaluated on the grid.

use num_complex::Complex64;
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

/// Centered frequency band `(-ceil(N/2), floor(N/2)] ∩ Z` for bandwidth `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyBand {
    n: usize,
}

impl FrequencyBand {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "bandwidth must be at least 1");
        FrequencyBand { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Smallest frequency in the band: `-ceil(N/2) + 1`.
    pub fn lo(&self) -> i64 {
        -((self.n as i64 + 1) / 2) + 1
    }

    /// Largest frequency in the band: `floor(N/2)`.
    pub fn hi(&self) -> i64 {
        self.n as i64 / 2
    }

    pub fn contains(&self, w: i64) -> bool {
        w >= self.lo() && w <= self.hi()
    }

    /// Reduces an arbitrary integer mod `N` into the band.
    pub fn wrap(&self, w: i64) -> i64 {
        let n = self.n as i64;
        let mut r = w.rem_euclid(n);
        if r > self.hi() {
            r -= n;
        }
        r
    }

    /// Position of `w` when the band is laid out from `lo()` upward.
    pub fn index_of(&self, w: i64) -> usize {
        debug_assert!(self.contains(w));
        (w - self.lo()) as usize
    }

    pub fn freq_at(&self, idx: usize) -> i64 {
        debug_assert!(idx < self.n);
        self.lo() + idx as i64
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo()..=self.hi()
    }
}

/// Equispaced sample point `y_j = -pi + 2*pi*j/N`.
pub fn grid_point(n: usize, j: usize) -> f64 {
    -PI + 2.0 * PI * (j as f64) / (n as f64)
}

/// Time-domain samples `f_j = f(y_j)`, `j = 0..N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalVector(pub Vec<Complex64>);

impl SignalVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inf_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Sparse set of `(frequency, coefficient)` pairs, frequencies distinct.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseSpectrum {
    pub terms: Vec<(i64, Complex64)>,
}

impl SparseSpectrum {
    pub fn new(terms: Vec<(i64, Complex64)>) -> Self {
        SparseSpectrum { terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: i64) -> Option<Complex64> {
        self.terms.iter().find(|(f, _)| *f == w).map(|(_, c)| *c)
    }

    /// Support as a sorted frequency list.
    pub fn support(&self) -> Vec<i64> {
        let mut s: Vec<i64> = self.terms.iter().map(|(w, _)| *w).collect();
        s.sort_unstable();
        s
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Length-`N` coefficient vector indexed by the centered band.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSpectrum {
    band: FrequencyBand,
    vals: Vec<Complex64>,
}

impl DenseSpectrum {
    pub fn zero(n: usize) -> Self {
        DenseSpectrum {
            band: FrequencyBand::new(n),
            vals: vec![Complex64::ZERO; n],
        }
    }

    pub fn from_sparse(n: usize, spec: &SparseSpectrum) -> Self {
        let mut d = DenseSpectrum::zero(n);
        for &(w, c) in &spec.terms {
            assert!(d.band.contains(w), "frequency {w} outside band for N={n}");
            let idx = d.band.index_of(w);
            d.vals[idx] += c;
        }
        d
    }

    pub fn band(&self) -> FrequencyBand {
        self.band
    }

    pub fn n(&self) -> usize {
        self.band.n()
    }

    pub fn at(&self, w: i64) -> Complex64 {
        self.vals[self.band.index_of(w)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let lo = self.band.lo();
        self.vals.iter().enumerate().map(move |(i, &c)| (lo + i as i64, c))
    }

    pub fn l2_norm(&self) -> f64 {
        self.vals.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// The `k` largest-magnitude terms under the canonical ordering.
    pub fn top_k(&self, k: usize) -> SparseSpectrum {
        let mut cands: Vec<(i64, Complex64)> = self.iter().collect();
        // Partition the k best in O(N) before sorting just those; a full sort
        // of the dense band dominates the per-band cost otherwise.
        if k < cands.len() {
            cands.select_nth_unstable_by(k, rank_cmp);
            cands.truncate(k);
        }
        rank_by_magnitude(&mut cands);
        SparseSpectrum::new(cands)
    }
}

fn rank_cmp(a: &(i64, Complex64), b: &(i64, Complex64)) -> std::cmp::Ordering {
    // norm_sqr orders identically to norm (monotone on >= 0) without the sqrt.
    b.1.norm_sqr()
        .partial_cmp(&a.1.norm_sqr())
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(a.0.abs().cmp(&b.0.abs()))
        .then(a.0.cmp(&b.0))
}

/// Canonical candidate order: |coeff| descending, ties by |freq| then freq.
///
/// Every top-k selection in the crate uses this ordering so results are
/// reproducible across engines and thread schedules.
pub fn rank_by_magnitude(cands: &mut [(i64, Complex64)]) {
    cands.sort_by(rank_cmp);
}

/// Analysis transform: spectrum of `f` over the centered band.
pub fn centered_dft(f: &SignalVector) -> DenseSpectrum {
    let n = f.len();
    assert!(n >= 1, "centered_dft requires at least one sample");
    let mut buf = f.0.clone();
    fft_in_place(&mut buf, false);
    let band = FrequencyBand::new(n);
    let scale = 1.0 / n as f64;
    let mut vals = vec![Complex64::ZERO; n];
    for w in band.iter() {
        let k = w.rem_euclid(n as i64) as usize;
        let sign = if w.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        vals[band.index_of(w)] = buf[k] * (sign * scale);
    }
    DenseSpectrum { band, vals }
}

/// Synthesis transform: grid samples of the trigonometric polynomial.
pub fn centered_idft(spec: &DenseSpectrum) -> SignalVector {
    let n = spec.n();
    let mut buf = vec![Complex64::ZERO; n];
    for (w, c) in spec.iter() {
        let k = w.rem_euclid(n as i64) as usize;
        let sign = if w.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        buf[k] = c * sign;
    }
    fft_in_place(&mut buf, true);
    SignalVector(buf)
}

/// Evaluates `sum_w c_w e^{i*w*x}` term by term.
pub fn eval_trig_poly(spec: &SparseSpectrum, x: f64) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for &(w, c) in &spec.terms {
        acc += c * Complex64::from_polar(1.0, w as f64 * x);
    }
    acc
}

/// Unnormalized DFT of arbitrary length, in place.
///
/// Forward uses kernel `e^{-2*pi*i*j*k/n}`; `inverse` conjugates the kernel
/// and applies no scaling. Power-of-two lengths run radix-2; everything else
/// goes through the Bluestein chirp embedding.
pub(crate) fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        fft_radix2(buf, inverse);
    } else {
        fft_bluestein(buf, inverse);
    }
}

/// Forward twiddle table `tw[i] = e^{-2*pi*i*I/n}` for `i < n/2`, cached per
/// length. Transforms of a given size recur thousands of times per run, so the
/// trig setup is paid once per thread.
fn forward_twiddles(n: usize) -> Rc<[Complex64]> {
    thread_local! {
        static CACHE: RefCell<HashMap<usize, Rc<[Complex64]>>> = RefCell::new(HashMap::new());
    }
    CACHE.with(|c| {
        Rc::clone(c.borrow_mut().entry(n).or_insert_with(|| {
            (0..n / 2)
                .map(|i| Complex64::from_polar(1.0, -2.0 * PI * (i as f64) / (n as f64)))
                .collect()
        }))
    })
}

fn fft_radix2(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let tw = forward_twiddles(n);
    let mut len = 2;
    while len <= n {
        let stride = n / len;
        for start in (0..n).step_by(len) {
            for k in 0..len / 2 {
                let mut w = tw[k * stride];
                if inverse {
                    w.im = -w.im;
                }
                let a = buf[start + k];
                let b = buf[start + k + len / 2] * w;
                buf[start + k] = a + b;
                buf[start + k + len / 2] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Chirp phases and the pre-transformed spreading kernel for a Bluestein
/// embedding of length `n`, cached per (length, direction).
struct BluesteinPlan {
    /// `e^{sign*pi*i*j^2/n}` for `j < n`, with `j^2` reduced mod `2n` exactly
    /// so the angle stays small even for large `j`.
    chirp: Rc<[Complex64]>,
    /// Forward FFT of the symmetric conjugate-chirp kernel, length `m`.
    kernel_fft: Rc<[Complex64]>,
}

fn bluestein_plan(n: usize, inverse: bool) -> BluesteinPlan {
    thread_local! {
        static CACHE: RefCell<HashMap<(usize, bool), (Rc<[Complex64]>, Rc<[Complex64]>)>> =
            RefCell::new(HashMap::new());
    }
    let (chirp, kernel_fft) = CACHE.with(|c| {
        let mut map = c.borrow_mut();
        let (ch, kf) = map.entry((n, inverse)).or_insert_with(|| {
            let sign = if inverse { 1.0 } else { -1.0 };
            let chirp: Rc<[Complex64]> = (0..n)
                .map(|j| {
                    let sq = ((j as u128 * j as u128) % (2 * n as u128)) as f64;
                    Complex64::from_polar(1.0, sign * PI * sq / n as f64)
                })
                .collect();
            let m = (2 * n - 1).next_power_of_two();
            let mut b = vec![Complex64::ZERO; m];
            for (j, w) in chirp.iter().enumerate() {
                let inv = w.conj();
                b[j] = inv;
                if j > 0 {
                    b[m - j] = inv;
                }
            }
            fft_radix2(&mut b, false);
            (chirp, b.into())
        });
        (Rc::clone(ch), Rc::clone(kf))
    });
    BluesteinPlan { chirp, kernel_fft }
}

fn fft_bluestein(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    let plan = bluestein_plan(n, inverse);
    let m = plan.kernel_fft.len();
    let mut a = vec![Complex64::ZERO; m];
    for j in 0..n {
        a[j] = buf[j] * plan.chirp[j];
    }
    fft_radix2(&mut a, false);
    for (ai, bi) in a.iter_mut().zip(plan.kernel_fft.iter()) {
        *ai *= bi;
    }
    fft_radix2(&mut a, true);
    let scale = 1.0 / m as f64;
    for (k, out) in buf.iter_mut().enumerate() {
        *out = a[k] * plan.chirp[k] * scale;
    }
}
