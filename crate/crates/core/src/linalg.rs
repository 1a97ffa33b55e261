//! Dense complex kernels used by the capacity evaluators.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl SquareMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] += v;
    }

    /// Natural log-determinant of a Hermitian positive-definite matrix via an
    /// in-place Cholesky factorization. Only the lower triangle is read.
    pub fn hpd_log_det(mut self) -> Result<f64> {
        self.cholesky_in_place()
    }

    /// Overwrites the lower triangle with `L` such that `A = L L^H` and
    /// returns `ln det A`.
    pub fn cholesky_in_place(&mut self) -> Result<f64> {
        let n = self.n;
        let mut log_det = 0.0;
        for j in 0..n {
            let (done, rest) = self.data.split_at_mut(j * n);
            let row_j = &mut rest[..n];
            // Row j of L, columns < j.
            for k in 0..j {
                let row_k = &done[k * n..k * n + k + 1];
                let mut acc = row_j[k];
                for m in 0..k {
                    acc -= row_j[m] * row_k[m].conj();
                }
                row_j[k] = acc / row_k[k].re;
            }
            let mut diag = row_j[j].re;
            for m in 0..j {
                diag -= row_j[m].norm_sqr();
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::Numeric(format!(
                    "matrix is not positive definite (pivot {j} = {diag})"
                )));
            }
            let d = diag.sqrt();
            row_j[j] = Complex64::new(d, 0.0);
            log_det += 2.0 * d.ln();
        }
        Ok(log_det)
    }

    /// Row `i` of the packed lower Cholesky factor, entries `0..=i`.
    pub fn lower_row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..i * self.n + i + 1]
    }
}

/// `sum_k conj(a_k) b_k` over split real/imaginary storage.
#[inline]
pub fn dot_conj_split(are: &[f64], aim: &[f64], bre: &[f64], bim: &[f64]) -> Complex64 {
    let n = are.len();
    debug_assert!(aim.len() == n && bre.len() == n && bim.len() == n);
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let chunks = n / 4 * 4;
    let mut k = 0;
    while k < chunks {
        for lane in 0..4 {
            let (ar, ai, br, bi) = (are[k + lane], aim[k + lane], bre[k + lane], bim[k + lane]);
            re[lane] += ar * br + ai * bi;
            im[lane] += ar * bi - ai * br;
        }
        k += 4;
    }
    let mut r = (re[0] + re[1]) + (re[2] + re[3]);
    let mut i = (im[0] + im[1]) + (im[2] + im[3]);
    for k in chunks..n {
        r += are[k] * bre[k] + aim[k] * bim[k];
        i += are[k] * bim[k] - aim[k] * bre[k];
    }
    Complex64::new(r, i)
}

/// `sum_k conj(a_k) b_k`.
#[inline]
pub fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [Complex64::new(0.0, 0.0); 2];
    let mut it = a.chunks_exact(2).zip(b.chunks_exact(2));
    for (x, y) in &mut it {
        acc[0] += x[0].conj() * y[0];
        acc[1] += x[1].conj() * y[1];
    }
    let mut s = acc[0] + acc[1];
    if a.len() % 2 == 1 {
        let k = a.len() - 1;
        s += a[k].conj() * b[k];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hpd(n: usize, rng: &mut ChaCha8Rng) -> (SquareMatrix, nalgebra::DMatrix<Complex64>) {
        let g = nalgebra::DMatrix::<Complex64>::from_fn(n, n + 3, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let a = &g * g.adjoint() + nalgebra::DMatrix::<Complex64>::identity(n, n);
        let mut m = SquareMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, a[(i, j)]);
            }
        }
        (m, a)
    }

    #[test]
    fn log_det_matches_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 5, 17, 40] {
            let (m, a) = random_hpd(n, &mut rng);
            let eig = a.symmetric_eigenvalues();
            let want: f64 = eig.iter().map(|l| l.ln()).sum();
            let got = m.hpd_log_det().unwrap();
            assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "{n}: {got} vs {want}");
        }
    }

    #[test]
    fn factor_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut m, a) = random_hpd(6, &mut rng);
        m.cholesky_in_place().unwrap();
        for i in 0..6 {
            for j in 0..=i {
                let li = m.lower_row(i);
                let lj = m.lower_row(j);
                let v: Complex64 = (0..=j).map(|k| li[k] * lj[k].conj()).sum();
                assert!((v - a[(i, j)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn indefinite_rejected() {
        let mut m = SquareMatrix::identity(2);
        m.set(1, 1, Complex64::new(-1.0, 0.0));
        assert!(matches!(m.hpd_log_det(), Err(Error::Numeric(_))));
        assert_eq!(SquareMatrix::identity(0).hpd_log_det().unwrap(), 0.0);
    }

    #[test]
    fn dots_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [0, 1, 3, 4, 9, 33] {
            let a: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random(), rng.random())).collect();
            let b: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.random(), rng.random())).collect();
            let naive: Complex64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
            let split = |v: &[Complex64]| (v.iter().map(|z| z.re).collect::<Vec<_>>(), v.iter().map(|z| z.im).collect::<Vec<_>>());
            let (ar, ai) = split(&a);
            let (br, bi) = split(&b);
            assert!((dot_conj(&a, &b) - naive).norm() < 1e-12);
            assert!((dot_conj_split(&ar, &ai, &br, &bi) - naive).norm() < 1e-12);
        }
    }
}
