//! Brute-force reference: every operator of the search as an explicit dense
//! matrix over the `2·m·2^m`-dimensional register, composed by matrix
//! products. Only meant for cross-checking [`WalkState`](super::WalkState) at
//! small coin sizes.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{check_coin_size, CoinPhases, WalkConfig, WalkError};

pub const MAX_DENSE_COIN_SIZE: usize = 4;

type CMatrix = DMatrix<Complex64>;

fn dim(m: usize) -> usize {
    2 * (m << m)
}

fn flat(m: usize, q: usize, d: usize, x: usize) -> usize {
    let n = 1 << m;
    q * m * n + d * n + x
}

fn permutation(size: usize, target: impl Fn(usize) -> usize) -> CMatrix {
    let mut p = CMatrix::zeros(size, size);
    for i in 0..size {
        p[(target(i), i)] = Complex64::new(1.0, 0.0);
    }
    p
}

/// Unitary DFT matrix of dimension `k`.
pub fn dft(k: usize) -> CMatrix {
    let scale = 1.0 / (k as f64).sqrt();
    CMatrix::from_fn(k, k, |j, l| {
        Complex64::from_polar(scale, TAU * ((j * l) % k) as f64 / k as f64)
    })
}

/// `(I₂ ⊗ F_m ⊗ F_n) |0, 0, 0⟩`.
pub fn initial_vector(m: usize) -> DVector<Complex64> {
    let transform = CMatrix::identity(2, 2)
        .kronecker(&dft(m))
        .kronecker(&dft(1 << m));
    let mut basis = DVector::zeros(dim(m));
    basis[0] = Complex64::new(1.0, 0.0);
    transform * basis
}

pub fn oracle_matrix(m: usize, marked: &[usize]) -> CMatrix {
    let n = 1 << m;
    permutation(dim(m), |i| {
        let x = i % n;
        if marked.contains(&x) {
            (i + m * n) % dim(m)
        } else {
            i
        }
    })
}

/// The `m × m` traversing coin `e^{iζ}(I − (1 − e^{iφ})|χ⟩⟨χ|)`.
pub fn traversing_coin(m: usize, phases: CoinPhases) -> CMatrix {
    let chi = DVector::from_element(m, Complex64::new(1.0 / (m as f64).sqrt(), 0.0));
    let projector = &chi * chi.adjoint();
    let one = Complex64::new(1.0, 0.0);
    (CMatrix::identity(m, m) - projector * (one - Complex64::from_polar(1.0, phases.phi)))
        * Complex64::from_polar(1.0, phases.zeta)
}

/// Block-diagonal coin: traversing coin on the `q = 0` block, `−I` on the
/// `q = 1` block.
pub fn coin_matrix(m: usize, phases: CoinPhases) -> CMatrix {
    let n = 1 << m;
    let free = traversing_coin(m, phases).kronecker(&CMatrix::identity(n, n));
    let marking = -CMatrix::identity(m * n, m * n);
    let mut c = CMatrix::zeros(dim(m), dim(m));
    c.view_mut((0, 0), (m * n, m * n)).copy_from(&free);
    c.view_mut((m * n, m * n), (m * n, m * n))
        .copy_from(&marking);
    c
}

pub fn shift_matrix(m: usize) -> CMatrix {
    let n = 1 << m;
    permutation(dim(m), |i| {
        let q = i / (m * n);
        let d = (i / n) % m;
        let x = i % n;
        flat(m, q, d, x ^ (1 << d))
    })
}

/// `S · O · C · O` for one iteration.
pub fn iteration_matrix(m: usize, phases: CoinPhases, marked: &[usize]) -> CMatrix {
    let o = oracle_matrix(m, marked);
    shift_matrix(m) * &o * coin_matrix(m, phases) * &o
}

pub fn probability(m: usize, state: &DVector<Complex64>, marked: &[usize]) -> f64 {
    let n = 1 << m;
    state
        .iter()
        .enumerate()
        .filter(|(i, _)| marked.contains(&(i % n)))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Success probability computed entirely with dense matrices.
pub fn dense_reference_run(config: &WalkConfig, phases: &[CoinPhases]) -> Result<f64, WalkError> {
    let m = config.m();
    check_coin_size(m)?;
    if m > MAX_DENSE_COIN_SIZE {
        return Err(WalkError::DenseTooLarge {
            m,
            max: MAX_DENSE_COIN_SIZE,
        });
    }
    if phases.len() != config.iterations() {
        return Err(WalkError::ScheduleLength {
            expected: config.iterations(),
            got: phases.len(),
        });
    }
    let mut state = initial_vector(m);
    for &p in phases {
        state = iteration_matrix(m, p, config.marked()) * state;
    }
    Ok(probability(m, &state, config.marked()))
}
