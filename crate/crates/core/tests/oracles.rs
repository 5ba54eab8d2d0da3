//! Library results against independent reference computations.
#![allow(clippy::needless_range_loop)]

use enrob_core::numerics::{herm_eig, hs_inner, psd_project, HermitianMatrix};
use enrob_core::robustness::{generalized_robustness, pure_lambda_k, pure_lambda_seesaw, random_robustness};
use enrob_core::sdp::{hermitian_embedding, solve, Constraint, Entry, SdpProblem, SolveStatus, SymMatrix};
use enrob_core::separability::SeparabilityModel;
use enrob_core::states::{ket_bell, ket_ghz, ket_w, random_density, Ket};
use nalgebra::{Complex, DMatrix};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::*;

#[test]
fn eigenvalues_match_nalgebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..60 {
        let d = 2 + trial % 15;
        let h = random_hermitian(d, &mut rng);
        let ours = herm_eig(h.matrix()).unwrap();
        let theirs = na_eigenvalues(&to_na(&h));
        for (a, b) in ours.eigenvalues.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10, "d = {d}: {a} vs {b}");
        }
        let norm = h.frobenius_norm();
        for k in 0..d {
            let v = ours.eigenvector(k);
            let hv = h.matrix().matvec(&v);
            let res: f64 = hv
                .iter()
                .zip(&v)
                .map(|(x, y)| (x - y * ours.eigenvalues[k]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res <= 1e-9 * norm.max(1.0));
        }
    }
}

#[test]
fn bell_partial_transpose_spectrum() {
    // characteristic polynomial (x - 1/2)^3 (x + 1/2)
    let rho = ket_bell().density();
    let pt = pt_oracle(&to_na(rho.matrix()), &[2, 2], &[1]);
    let ev = na_eigenvalues(&pt);
    let want = [-0.5, 0.5, 0.5, 0.5];
    for (a, b) in ev.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    let ours = enrob_core::states::partial_transpose(&rho, &enrob_core::states::Bipartition::new(2, &[1]).unwrap())
        .unwrap()
        .eig()
        .eigenvalues;
    for (a, b) in ours.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn psd_projection_matches_clip_reimplementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for d in [2, 3, 4, 8] {
        let h = random_hermitian(d, &mut rng);
        let ours = psd_project(&h, false).unwrap();
        let eig = to_na(&h).symmetric_eigen();
        let clipped = eig.eigenvalues.map(|l| l.max(0.0));
        let diag = DMatrix::from_diagonal(&clipped.map(|l| Complex::new(l, 0.0)));
        let theirs = &eig.eigenvectors * diag * eig.eigenvectors.adjoint();
        for i in 0..d {
            for j in 0..d {
                assert!((ours.get(i, j) - theirs[(i, j)]).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn hs_inner_matches_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in [2, 4, 8] {
        let (a, b) = (random_hermitian(d, &mut rng), random_hermitian(d, &mut rng));
        let mut sum = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                sum += a.get(i, j) * b.get(j, i);
            }
        }
        assert!((hs_inner(&a, &b).unwrap() - sum.re).abs() < 1e-12);
        assert!(sum.im.abs() < 1e-12);
    }
}

#[test]
fn embedding_doubles_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for d in [2, 3, 5] {
        let h = random_hermitian(d, &mut rng);
        let e = hermitian_embedding(&h);
        let n = 2 * d;
        let real = DMatrix::from_fn(n, n, |i, j| e.get(i, j));
        let mut ev: Vec<f64> = real.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let base = na_eigenvalues(&to_na(&h));
        for k in 0..d {
            assert!((ev[2 * k] - base[k]).abs() < 1e-10);
            assert!((ev[2 * k + 1] - base[k]).abs() < 1e-10);
        }
    }
}

/// Orthonormal basis of 3x3 symmetric matrices under the Frobenius product.
fn sym_basis() -> Vec<[[f64; 3]; 3]> {
    let mut out = Vec::new();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..3 {
        for j in i..3 {
            let mut m = [[0.0; 3]; 3];
            if i == j {
                m[i][i] = 1.0;
            } else {
                m[i][j] = s;
                m[j][i] = s;
            }
            out.push(m);
        }
    }
    out
}

fn dot(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> f64 {
    (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j] * b[i][j])
        .sum()
}

fn axpy(a: &mut [[f64; 3]; 3], s: f64, b: &[[f64; 3]; 3]) {
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] += s * b[i][j];
        }
    }
}

fn random_sym(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = rng.random_range(-1.0..1.0);
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    m
}

fn na3(m: &[[f64; 3]; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| m[i][j])
}

/// Minimizes <C, X0 + a D1 + b D2> over the PSD slice: the slice is the
/// star-shaped set r <= r(theta) around 0, with r(theta) the exact
/// boundary distance along direction theta, and the objective is scanned
/// densely in theta then refined by golden section.
fn slice_minimum(c: &[[f64; 3]; 3], x0: &[[f64; 3]; 3], d1: &[[f64; 3]; 3], d2: &[[f64; 3]; 3]) -> f64 {
    let l = na3(x0).cholesky().expect("x0 positive definite").l();
    let linv = l.clone().try_inverse().unwrap();
    let radius = |t: f64| -> f64 {
        let mut d = [[0.0; 3]; 3];
        axpy(&mut d, t.cos(), d1);
        axpy(&mut d, t.sin(), d2);
        let m = &linv * na3(&d) * linv.transpose();
        let lo = m.symmetric_eigenvalues().min();
        assert!(lo < 0.0, "traceless direction must leave the cone");
        -1.0 / lo
    };
    let (f0, g1, g2) = (dot(c, x0), dot(c, d1), dot(c, d2));
    let f = |t: f64| f0 + radius(t) * (t.cos() * g1 + t.sin() * g2);
    let n = 20_000;
    let step = std::f64::consts::TAU / n as f64;
    let best = (0..n)
        .map(|i| i as f64 * step)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let (mut a, mut b) = (best - step, best + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if f(x1) < f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    f(0.5 * (a + b))
}

#[test]
fn random_3x3_sdp_matches_slice_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..8 {
        let mut x0 = [[0.0; 3]; 3];
        let r = random_sym(&mut rng);
        axpy(&mut x0, 0.3, &r);
        for i in 0..3 {
            x0[i][i] += 1.0;
        }
        // two orthonormal traceless directions
        let mut dirs: Vec<[[f64; 3]; 3]> = Vec::new();
        while dirs.len() < 2 {
            let mut d = random_sym(&mut rng);
            let tr = (d[0][0] + d[1][1] + d[2][2]) / 3.0;
            for i in 0..3 {
                d[i][i] -= tr;
            }
            for e in &dirs {
                let p = dot(&d, e);
                axpy(&mut d, -p, e);
            }
            let nrm = dot(&d, &d).sqrt();
            if nrm > 1e-3 {
                d.iter_mut().flatten().for_each(|v| *v /= nrm);
                dirs.push(d);
            }
        }
        // constraints span the complement of the two directions
        let mut comp: Vec<[[f64; 3]; 3]> = Vec::new();
        for mut e in sym_basis() {
            for q in dirs.iter().chain(comp.iter()) {
                let p = dot(&e, q);
                axpy(&mut e, -p, q);
            }
            let nrm = dot(&e, &e).sqrt();
            if nrm > 1e-6 {
                e.iter_mut().flatten().for_each(|v| *v /= nrm);
                comp.push(e);
            }
        }
        assert_eq!(comp.len(), 4);
        let c = random_sym(&mut rng);
        let constraints = comp
            .iter()
            .map(|a| {
                let mut entries = Vec::new();
                for i in 0..3 {
                    for j in i..3 {
                        if a[i][j] != 0.0 {
                            entries.push(Entry {
                                block: 0,
                                row: i,
                                col: j,
                                value: a[i][j],
                            });
                        }
                    }
                }
                Constraint::new(entries, dot(a, &x0))
            })
            .collect();
        let obj = SymMatrix::from_fn(3, |i, j| c[i][j]);
        let p = SdpProblem::new(vec![3], vec![obj], constraints).unwrap();
        let sol = solve(&p, 1e-9, 200);
        assert_eq!(sol.status, SolveStatus::Optimal);
        let oracle = slice_minimum(&c, &x0, &dirs[0], &dirs[1]);
        assert!((sol.primal_obj - oracle).abs() < 1e-4, "{} vs {oracle}", sol.primal_obj);
    }
}

#[test]
fn seesaw_matches_bloch_grid() {
    let full = vec![vec![0], vec![1], vec![2]];
    for (psi, exact) in [(ket_ghz(), 0.5), (ket_w(), 4.0 / 9.0)] {
        let grid = bloch_lambda(&psi);
        let seesaw = pure_lambda_seesaw(&psi, &full, 32, 3).unwrap().lambda;
        assert!((grid - exact).abs() < 1e-8, "grid {grid}");
        assert!((seesaw - grid).abs() < 1e-6, "seesaw {seesaw} vs grid {grid}");
    }
}

#[test]
fn biseparable_lambda_matches_schmidt_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut kets = vec![ket_ghz(), ket_w()];
    for _ in 0..4 {
        let amps: Vec<C64> = (0..8)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        kets.push(Ket::normalized(amps, vec![2, 2, 2]).unwrap());
    }
    for psi in kets {
        // largest squared Schmidt coefficient over the three cuts A|BC, B|AC, C|AB
        let a = psi.amplitudes();
        let mut best: f64 = 0.0;
        for p in 0..3 {
            let m = DMatrix::from_fn(2, 4, |i, j| {
                let others: Vec<usize> = (0..3).filter(|&x| x != p).collect();
                let mut bits = [0usize; 3];
                bits[p] = i;
                bits[others[0]] = j >> 1;
                bits[others[1]] = j & 1;
                a[bits[0] << 2 | bits[1] << 1 | bits[2]]
            });
            let s = m.singular_values()[0];
            best = best.max(s * s);
        }
        let lam = pure_lambda_k(&psi, 2, 16, 7).unwrap().lambda;
        assert!((lam - best).abs() < 1e-8, "{lam} vs {best}");
    }
}

#[test]
fn random_robustness_matches_eigenvalue_shift() {
    let ghz = ket_ghz().density();
    let m3 = SeparabilityModel::intersect_ppt(&[2, 2, 2]).unwrap();
    assert!((shift_oracle(&ghz) - 4.0).abs() < 1e-12);
    assert!((random_robustness(&ghz, &m3).unwrap().value - 4.0).abs() < 1e-6);
    for seed in 0..6 {
        for dims in [vec![2, 2], vec![2, 2, 2]] {
            let rho = random_density(&dims, 1 + seed as usize % 3, 100 + seed).unwrap();
            let m = SeparabilityModel::intersect_ppt(&dims).unwrap();
            let v = random_robustness(&rho, &m).unwrap().value;
            let want = shift_oracle(&rho);
            assert!(
                (v - want).abs() < 1e-6 * (1.0 + want),
                "{dims:?} seed {seed}: {v} vs {want}"
            );
        }
    }
}

#[test]
fn bell_generalized_robustness_is_bracketed() {
    let rho = ket_bell().density();
    let m = SeparabilityModel::exact_two_qubit(&[2, 2]).unwrap();
    let value = generalized_robustness(&rho, &m).unwrap().value;

    let upper = gr_upper_bound(&rho, 8, 1500);

    // lower bound: W = I - 2|Phi+><Phi+| has W^T_B >= 0 and W <= I
    let phi = ket_bell();
    let w = HermitianMatrix::identity(4).sub(&HermitianMatrix::projector(phi.amplitudes()).scale(2.0));
    let wpt = pt_oracle(&to_na(&w), &[2, 2], &[1]);
    assert!(na_eigenvalues(&wpt)[0] >= -1e-12);
    assert!(na_eigenvalues(&to_na(&w))[3] <= 1.0 + 1e-12);
    let lower = -hs_inner(&w, rho.matrix()).unwrap();

    assert!((lower - 1.0).abs() < 1e-12);
    assert!(upper < 1.2, "random-noise search too weak: {upper}");
    assert!(
        lower - 1e-6 <= value && value <= upper + 1e-6,
        "{lower} <= {value} <= {upper}"
    );
    assert!((value - 1.0).abs() < 1e-3);
}
