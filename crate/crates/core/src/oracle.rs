//! Brute-force reference computations of the fusion outcome distribution.
//!
//! Two routes, both independent of the closed form in [`crate::fock_prob`]:
//!
//! * [`oracle_distribution`] exponentiates the beamsplitter generator
//!   `a†b + ab†` restricted to the `N`-photon block and reads the output
//!   amplitudes off the evolved state.
//! * [`convolution_distribution`] expands the transformed creation
//!   operators as polynomials in `a†`, `b†` and normalizes with `√(k!)`.
//!
//! Convention: `η = cos θ`, so a photon entering the first port leaves it
//! with probability `η²`; the first port is the measured one.

use num_complex::Complex64;

use crate::combinatorics::log_factorial;
use crate::error::{domain, FockError, Result};
use crate::fock_prob::{PhotonCount, Reflectivity, SubtractionDistribution};

/// Largest block the matrix route accepts.
pub const MATRIX_ORACLE_CAP: usize = 24;
/// Largest block the convolution route accepts.
pub const CONVOLUTION_ORACLE_CAP: usize = 60;

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Self::zeros(dim);
        for i in 0..dim {
            out[(i, i)] = Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * other.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    fn scale(&mut self, factor: Complex64) {
        self.data.iter_mut().for_each(|x| *x *= factor);
    }

    fn add_assign(&mut self, other: &Self) {
        self.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(x, y)| *x += y);
    }

    /// Max-norm of `self† self − I`.
    pub fn unitarity_defect(&self) -> f64 {
        let prod = self.adjoint().matmul(self);
        let id = Self::identity(self.dim);
        prod.data
            .iter()
            .zip(&id.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    fn max_row_sum(&self) -> f64 {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Generator `a†b + ab†` on the block with `total` photons; basis index `k`
/// is the photon number of the first mode.
pub fn generator_block(total: PhotonCount) -> DenseMatrix {
    let mut g = DenseMatrix::zeros(total + 1);
    for k in 0..total {
        let x = (((k + 1) * (total - k)) as f64).sqrt();
        g[(k + 1, k)] = Complex64::new(x, 0.0);
        g[(k, k + 1)] = Complex64::new(x, 0.0);
    }
    g
}

/// `exp(A)` by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &DenseMatrix) -> DenseMatrix {
    let norm = a.max_row_sum();
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let mut scaled = a.clone();
    scaled.scale(Complex64::new(0.5f64.powi(squarings as i32), 0.0));
    let mut result = DenseMatrix::identity(a.dim());
    let mut term = DenseMatrix::identity(a.dim());
    for k in 1..=24 {
        term = term.matmul(&scaled);
        term.scale(Complex64::new(1.0 / k as f64, 0.0));
        result.add_assign(&term);
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

/// `exp(−iθ G)` on the `total`-photon block.
pub fn beamsplitter_unitary(total: PhotonCount, theta: f64) -> Result<DenseMatrix> {
    if total > MATRIX_ORACLE_CAP {
        return Err(FockError::Capacity {
            total,
            cap: MATRIX_ORACLE_CAP,
        });
    }
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return domain(format!("mixing angle {theta} outside [0, π/2]"));
    }
    let mut g = generator_block(total);
    g.scale(Complex64::new(0.0, -theta));
    Ok(expm(&g))
}

/// Two-mode Fock amplitudes with a fixed total photon number.
#[derive(Clone, Debug, PartialEq)]
pub struct FockBlock {
    pub total: PhotonCount,
    pub amplitudes: Vec<Complex64>,
}

impl FockBlock {
    pub fn basis(total: PhotonCount, first_mode: PhotonCount) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); total + 1];
        amplitudes[first_mode] = Complex64::new(1.0, 0.0);
        Self { total, amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn evolve(&self, u: &DenseMatrix) -> Self {
        let amplitudes = (0..=self.total)
            .map(|i| {
                (0..=self.total)
                    .map(|j| u[(i, j)] * self.amplitudes[j])
                    .sum()
            })
            .collect();
        Self {
            total: self.total,
            amplitudes,
        }
    }
}

/// Outcome distribution from the evolved state `U(arccos η) |m, n⟩`.
pub fn oracle_distribution(
    m: PhotonCount,
    n: PhotonCount,
    eta: &Reflectivity,
) -> Result<SubtractionDistribution> {
    let total = m + n;
    let theta = eta.eta().clamp(0.0, 1.0).acos();
    let u = beamsplitter_unitary(total, theta)?;
    let out = FockBlock::basis(total, m).evolve(&u);
    Ok(SubtractionDistribution {
        m,
        n,
        eta: eta.clone(),
        probs: out.amplitudes.iter().map(|a| a.norm_sqr()).collect(),
    })
}

/// Outcome distribution by expanding
/// `(η a† + √(1−η²) b†)^m (√(1−η²) a† − η b†)^n |0,0⟩`.
pub fn convolution_distribution(
    m: PhotonCount,
    n: PhotonCount,
    eta: &Reflectivity,
) -> Result<SubtractionDistribution> {
    let total = m + n;
    if total > CONVOLUTION_ORACLE_CAP {
        return Err(FockError::Capacity {
            total,
            cap: CONVOLUTION_ORACLE_CAP,
        });
    }
    let e = eta.eta();
    let t = (1.0 - eta.stay_probability()).max(0.0).sqrt();
    // coefficient of (a†)^k (b†)^(deg−k)
    let first = binomial_expansion(m, e, t);
    let second = binomial_expansion(n, t, -e);
    let mut poly = vec![0.0; total + 1];
    for (i, x) in first.iter().enumerate() {
        for (j, y) in second.iter().enumerate() {
            poly[i + j] += x * y;
        }
    }
    let log_norm = -0.5 * (log_factorial(m as u64) + log_factorial(n as u64));
    let probs = poly
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let log_fock =
                0.5 * (log_factorial(k as u64) + log_factorial((total - k) as u64)) + log_norm;
            let amp = c * log_fock.exp();
            amp * amp
        })
        .collect();
    Ok(SubtractionDistribution {
        m,
        n,
        eta: eta.clone(),
        probs,
    })
}

/// Coefficients of `(x·a† + y·b†)^deg` indexed by the power of `a†`.
fn binomial_expansion(deg: usize, x: f64, y: f64) -> Vec<f64> {
    let mut poly = vec![1.0];
    for _ in 0..deg {
        let mut next = vec![0.0; poly.len() + 1];
        for (k, c) in poly.iter().enumerate() {
            next[k + 1] += c * x;
            next[k] += c * y;
        }
        poly = next;
    }
    poly
}
