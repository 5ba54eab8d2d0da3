use super::linalg::SymMatrix;
use crate::numerics::{ComplexMatrix, HermitianMatrix, C64};

/// `[[Re h, -Im h], [Im h, Re h]]`. Each eigenvalue of `h` appears twice.
pub fn hermitian_embedding(h: &HermitianMatrix) -> SymMatrix {
    let d = h.dim();
    SymMatrix::from_fn(2 * d, |i, j| {
        let v = h.get(i % d, j % d);
        match (i < d, j < d) {
            (true, true) | (false, false) => v.re,
            (true, false) => -v.im,
            (false, true) => v.im,
        }
    })
}

/// Hermitian matrix represented by an arbitrary symmetric `2d x 2d` block,
/// i.e. the `Y` with `tr(H Y) = <emb(H)/2, X>` for every Hermitian `H`.
/// PSD blocks map to PSD matrices.
pub fn hermitian_from_embedding(x: &SymMatrix) -> HermitianMatrix {
    let d = x.n() / 2;
    let m = ComplexMatrix::from_fn(d, |i, j| {
        let re = 0.5 * (x.get(i, j) + x.get(i + d, j + d));
        let im = 0.5 * (x.get(i + d, j) - x.get(i, j + d));
        C64::new(re, im)
    });
    m.hermitian_part()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_y_embedding_spectrum() {
        let y = ComplexMatrix::from_vec(
            2,
            vec![
                C64::new(0.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let e = hermitian_embedding(&HermitianMatrix::new(y).unwrap());
        let vals = e.eigenvalues();
        let want = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in vals.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip() {
        let h = ComplexMatrix::from_fn(3, |i, j| C64::new((i + j) as f64, i as f64 - j as f64));
        let h = h.hermitian_part();
        let back = hermitian_from_embedding(&hermitian_embedding(&h));
        assert!(back.sub(&h).frobenius_norm() < 1e-14);
    }
}
