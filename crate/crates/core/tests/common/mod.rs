//! Reference computations shared by the test targets. Built on nalgebra
//! and plain loops so they share no code with the library.
#![allow(dead_code)]

use enrob_core::numerics::{ComplexMatrix, HermitianMatrix};
use enrob_core::states::{DensityMatrix, Ket};
use nalgebra::{Complex, DMatrix};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn to_na(m: &HermitianMatrix) -> DMatrix<Complex<f64>> {
    let d = m.dim();
    DMatrix::from_fn(d, d, |i, j| m.get(i, j))
}

pub fn na_eigenvalues(m: &DMatrix<Complex<f64>>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let a = ComplexMatrix::from_fn(d, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    a.hermitian_part()
}

/// Partial transpose on the parties in `cut`, written out digit by digit.
pub fn pt_oracle(m: &DMatrix<Complex<f64>>, dims: &[usize], cut: &[usize]) -> DMatrix<Complex<f64>> {
    let digits = |mut x: usize| {
        let mut out = vec![0; dims.len()];
        for p in (0..dims.len()).rev() {
            out[p] = x % dims[p];
            x /= dims[p];
        }
        out
    };
    let index = |ds: &[usize]| ds.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x);
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let (mut dr, mut dc) = (digits(r), digits(c));
            for &p in cut {
                std::mem::swap(&mut dr[p], &mut dc[p]);
            }
            out[(index(&dr), index(&dc))] = m[(r, c)];
        }
    }
    out
}

/// All nonempty proper subsets containing party 0 (one per bipartition).
pub fn cuts(n: usize) -> Vec<Vec<usize>> {
    (1..(1usize << n) - 1)
        .filter(|mask| mask & 1 == 1)
        .map(|mask| (0..n).filter(|p| mask >> p & 1 == 1).collect())
        .collect()
}

/// Max overlap of `psi` with full product states, by a Bloch-angle grid
/// followed by a shrinking pattern search.
pub fn bloch_lambda(psi: &Ket) -> f64 {
    let n = psi.dims().len();
    let amps = psi.amplitudes().to_vec();
    let overlap = |ang: &[f64]| -> f64 {
        let qubits: Vec<[C64; 2]> = (0..n)
            .map(|k| {
                let (t, p) = (ang[2 * k], ang[2 * k + 1]);
                [C64::new((t / 2.0).cos(), 0.0), C64::from_polar((t / 2.0).sin(), p)]
            })
            .collect();
        let mut acc = C64::new(0.0, 0.0);
        for (idx, a) in amps.iter().enumerate() {
            let mut prod = C64::new(1.0, 0.0);
            for (k, q) in qubits.iter().enumerate() {
                prod *= q[(idx >> (n - 1 - k)) & 1];
            }
            acc += a.conj() * prod;
        }
        acc.norm_sqr()
    };
    let thetas: Vec<f64> = (0..13).map(|i| std::f64::consts::PI * i as f64 / 12.0).collect();
    let phis: Vec<f64> = (0..12).map(|i| std::f64::consts::TAU * i as f64 / 12.0).collect();
    let singles: Vec<(f64, f64)> = thetas.iter().flat_map(|&t| phis.iter().map(move |&p| (t, p))).collect();
    let mut best = (f64::MIN, vec![0.0; 2 * n]);
    let total = singles.len().pow(n as u32);
    for mut code in 0..total {
        let mut ang = vec![0.0; 2 * n];
        for k in 0..n {
            let (t, p) = singles[code % singles.len()];
            code /= singles.len();
            ang[2 * k] = t;
            ang[2 * k + 1] = p;
        }
        let v = overlap(&ang);
        if v > best.0 {
            best = (v, ang);
        }
    }
    let (mut val, mut ang) = best;
    let mut step = 0.2;
    while step > 1e-10 {
        let mut improved = false;
        for k in 0..2 * n {
            for s in [step, -step] {
                let mut trial = ang.clone();
                trial[k] += s;
                let v = overlap(&trial);
                if v > val {
                    val = v;
                    ang = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    val
}

/// `max(0, -d min_cut lambda_min(rho^T_cut))`: white noise shifts every
/// partially transposed spectrum uniformly.
pub fn shift_oracle(rho: &DensityMatrix) -> f64 {
    let dims = rho.dims();
    let m = to_na(rho.matrix());
    let worst = cuts(dims.len())
        .iter()
        .map(|c| na_eigenvalues(&pt_oracle(&m, dims, c))[0])
        .fold(f64::INFINITY, f64::min);
    (-(rho.dim() as f64) * worst).max(0.0)
}

pub fn ginibre(d: usize, rank: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex<f64>> {
    let g = DMatrix::from_fn(d, rank, |_, _| {
        Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    m / tr
}

/// Smallest s with `(rho + s pi)/(1+s)` PPT, by bisection on `[0, cap]`.
pub fn ppt_threshold(rho: &DMatrix<Complex<f64>>, pi: &DMatrix<Complex<f64>>, cap: f64) -> f64 {
    let ppt = |s: f64| na_eigenvalues(&pt_oracle(&(rho + pi * Complex::new(s, 0.0)), &[2, 2], &[1]))[0] >= 0.0;
    if !ppt(cap) {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ppt(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Upper bound on the generalized robustness of `rho` (two qubits): the
/// best PPT threshold over random noise states, then a local mixing search.
pub fn gr_upper_bound(rho: &DensityMatrix, seed: u64, samples: usize) -> f64 {
    let r = to_na(rho.matrix());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::INFINITY, DMatrix::zeros(4, 4));
    for k in 0..samples {
        let pi = ginibre(4, 1 + k % 4, &mut rng);
        let s = ppt_threshold(&r, &pi, 50.0);
        if s < best.0 {
            best = (s, pi);
        }
    }
    for _ in 0..samples {
        let w = rng.random_range(0.0..0.3);
        let cand = &best.1 * Complex::new(1.0 - w, 0.0) + ginibre(4, 1, &mut rng) * Complex::new(w, 0.0);
        let s = ppt_threshold(&r, &cand, 50.0);
        if s < best.0 {
            best = (s, cand);
        }
    }
    best.0
}
