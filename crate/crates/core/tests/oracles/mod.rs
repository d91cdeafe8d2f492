//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the library under test.

#![allow(dead_code)]

/// Double-double number `hi + lo`.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn mul_f(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi));
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Dd::new(-q1)));
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Dd::new(-q2)));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::new(q3))
    }

    pub fn div_f(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let r = self.add(Dd::new(q1).mul_f(-b));
        let q2 = r.hi / b;
        let r = r.add(Dd::new(q2).mul_f(-b));
        let q3 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }.add(Dd::new(q3))
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Direct hypergeometric series `sum (a)_n / (c)_n x^n / n!` carried in
/// double-double arithmetic. Good to ~1e-15 relative for `|x| <= 40`, where
/// the largest term is about `e^40`.
pub fn kummer_series_dd(a: f64, c: f64, x: f64) -> f64 {
    let mut term = Dd::new(1.0);
    let mut sum = Dd::new(1.0);
    for n in 0..10_000 {
        let nf = n as f64;
        let an = Dd::new(a).add(Dd::new(nf));
        let cn = Dd::new(c).add(Dd::new(nf));
        term = term.mul(an).mul_f(x).div(cn).div_f(nf + 1.0);
        sum = sum.add(term);
        if term.hi.abs() < 1e-34 * sum.hi.abs().max(1e-300) && nf > x.abs() {
            break;
        }
    }
    sum.to_f64()
}

/// `Gamma(5/4)`, 20 digits.
pub const GAMMA_5_4: f64 = 0.906_402_477_055_477_07;

/// Leading four terms of the large-argument expansion of `M(-1/4; 1; x)`,
/// `x -> -inf`: `|x|^(1/4) / Gamma(5/4) * sum_s (a)_s (a - c + 1)_s / s! |x|^-s`.
pub fn kummer_quarter_asymptotic(x: f64) -> f64 {
    let (a, b) = (-0.25, -0.25);
    let z = -x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for s in 0..4 {
        let sf = s as f64;
        term *= (a + sf) * (b + sf) / ((sf + 1.0) * z);
        sum += term;
    }
    z.powf(0.25) / GAMMA_5_4 * sum
}

/// Modified Bessel function `I_n(z)` for `n` in {0, 1}, by its power series.
/// All terms are positive, so the sum is accurate for moderate `z`.
pub fn bessel_i(n: u32, z: f64) -> f64 {
    let h = z / 2.0;
    let mut term = if n == 0 { 1.0 } else { h };
    let mut sum = term;
    for k in 1..10_000 {
        let kf = k as f64;
        term *= h * h / (kf * (kf + n as f64));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Amplitude-domain MMSE-STSA gain,
/// `sqrt(pi)/2 sqrt(v)/gamma exp(-v/2) [(1 + v) I0(v/2) + v I1(v/2)]`.
pub fn mmse_stsa_gain(xi: f64, gamma: f64) -> f64 {
    let v = xi / (1.0 + xi) * gamma;
    let e = (-v / 2.0).exp();
    std::f64::consts::PI.sqrt() / 2.0 * v.sqrt() / gamma
        * ((1.0 + v) * bessel_i(0, v / 2.0) * e + v * bessel_i(1, v / 2.0) * e)
}

/// Moore-Penrose pseudo-inverse of a complex matrix through nalgebra's SVD.
pub fn svd_pinv(rows: usize, cols: usize, entries: &[(f64, f64)]) -> Vec<(f64, f64)> {
    use nalgebra::{Complex, DMatrix};
    let a = DMatrix::from_fn(rows, cols, |i, j| {
        let (re, im) = entries[i * cols + j];
        Complex::new(re, im)
    });
    let p = a.pseudo_inverse(1e-12).expect("svd pseudo-inverse");
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..cols {
        for j in 0..rows {
            let c = p[(i, j)];
            out.push((c.re, c.im));
        }
    }
    out
}

/// Log spectral distortion by direct DFT of Hann-square-root windowed frames.
pub fn brute_force_lsd(reference: &[f64], estimate: &[f64], frame_len: usize, hop: usize) -> f64 {
    let window: Vec<f64> = (0..frame_len)
        .map(|n| (std::f64::consts::PI * n as f64 / frame_len as f64).sin())
        .collect();
    let mags = |x: &[f64], start: usize| -> Vec<f64> {
        (0..=frame_len / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for n in 0..frame_len {
                    let ph = -2.0 * std::f64::consts::PI * (k * n) as f64 / frame_len as f64;
                    let v = x[start + n] * window[n];
                    re += v * ph.cos();
                    im += v * ph.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    };
    let frames = (reference.len() - frame_len) / hop + 1;
    let ref_mags: Vec<Vec<f64>> = (0..frames).map(|l| mags(reference, l * hop)).collect();
    let peak = ref_mags.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    let eps = 1e-6 * peak;
    let mut total = 0.0;
    for (l, r) in ref_mags.iter().enumerate() {
        let e = mags(estimate, l * hop);
        let sq: f64 = r
            .iter()
            .zip(&e)
            .map(|(x, y)| (20.0 * ((x + eps) / (y + eps)).log10()).powi(2))
            .sum();
        total += (sq / r.len() as f64).sqrt();
    }
    total / frames as f64
}
