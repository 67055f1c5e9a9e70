//! State-vector simulation of the coined quantum random walk search on the
//! `m`-dimensional hypercube.
//!
//! The register holds a control qubit `q`, a coin (edge direction) register
//! `d` of dimension `m`, and a node register `x` of dimension `2^m`. The
//! amplitudes are stored flat with index `q·(m·2^m) + d·2^m + x`.
//!
//! One search iteration applies, right to left, `S · O · C₁ · C₀(φ, ζ) · O`:
//! the oracle flips the control qubit on marked nodes, the traversing coin
//! acts on the `q = 0` block, the marking coin `−I` acts on the `q = 1` block,
//! the oracle is applied again and finally the walker moves along the edge
//! selected by the coin register.

pub mod dense;

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::io::{self, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::format::fmt_sig;
use crate::schedule::iteration_count;

/// Largest supported coin size. `2·m·2^m` amplitudes must fit comfortably in
/// memory.
pub const MAX_COIN_SIZE: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("coin size m = {0} is out of range (expected 2 <= m <= {MAX_COIN_SIZE})")]
    CoinSize(usize),
    #[error("no marked node given")]
    NoMarkedNode,
    #[error("marked node {node} is outside the hypercube with {node_count} nodes")]
    MarkedOutOfRange { node: usize, node_count: usize },
    #[error("phase list has {got} entries, expected {expected} (one per iteration)")]
    ScheduleLength { expected: usize, got: usize },
    #[error("dense reference is limited to m <= {max}, got m = {m}")]
    DenseTooLarge { m: usize, max: usize },
}

/// Size of the hypercube, the marked nodes and the number of search
/// iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    m: usize,
    marked: Vec<usize>,
    iterations: usize,
}

impl WalkConfig {
    /// Configuration with the default iteration count for a single solution.
    pub fn new(m: usize, marked: impl IntoIterator<Item = usize>) -> Result<Self, WalkError> {
        check_coin_size(m)?;
        let node_count = 1usize << m;
        let mut marked: Vec<usize> = marked.into_iter().collect();
        marked.sort_unstable();
        marked.dedup();
        if marked.is_empty() {
            return Err(WalkError::NoMarkedNode);
        }
        if let Some(&node) = marked.iter().find(|&&x| x >= node_count) {
            return Err(WalkError::MarkedOutOfRange { node, node_count });
        }
        Ok(Self {
            m,
            marked,
            iterations: iteration_count(m),
        })
    }

    /// Single marked node `0`.
    pub fn single(m: usize) -> Result<Self, WalkError> {
        Self::new(m, [0])
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn node_count(&self) -> usize {
        1 << self.m
    }

    pub fn marked(&self) -> &[usize] {
        &self.marked
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

pub(crate) fn check_coin_size(m: usize) -> Result<(), WalkError> {
    if (2..=MAX_COIN_SIZE).contains(&m) {
        Ok(())
    } else {
        Err(WalkError::CoinSize(m))
    }
}

/// Phases of the traversing coin `e^{iζ}(I − (1 − e^{iφ})|χ⟩⟨χ|)`.
///
/// `phi` is the Householder phase, `zeta` the global multiplier. Values are
/// kept as given; any real is valid and shifts by `2π` have no effect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinPhases {
    pub phi: f64,
    pub zeta: f64,
}

impl CoinPhases {
    pub const fn new(phi: f64, zeta: f64) -> Self {
        Self { phi, zeta }
    }

    /// The Grover coin `φ = ζ = π`.
    pub const GROVER: Self = Self::new(PI, PI);

    /// Both phases reduced to `[0, 2π)`.
    pub fn normalized(self) -> Self {
        Self::new(self.phi.rem_euclid(TAU), self.zeta.rem_euclid(TAU))
    }

    pub fn is_finite(self) -> bool {
        self.phi.is_finite() && self.zeta.is_finite()
    }
}

impl fmt::Display for CoinPhases {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(phi = {}, zeta = {})", self.phi, self.zeta)
    }
}

/// Full register `|q, d, x⟩` as a flat amplitude array.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    m: usize,
    amplitudes: Vec<Complex64>,
}

impl WalkState {
    /// Initial state: control qubit in `|0⟩`, coin and node registers in the
    /// uniform superposition (the DFT of `|0⟩`).
    pub fn initial(m: usize) -> Result<Self, WalkError> {
        check_coin_size(m)?;
        let block = m << m;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * block];
        let a = Complex64::new(1.0 / (block as f64).sqrt(), 0.0);
        amplitudes[..block].fill(a);
        Ok(Self { m, amplitudes })
    }

    /// Wraps raw amplitudes. The length must be `2·m·2^m`.
    pub fn from_amplitudes(m: usize, amplitudes: Vec<Complex64>) -> Result<Self, WalkError> {
        check_coin_size(m)?;
        assert_eq!(
            amplitudes.len(),
            2 * (m << m),
            "amplitude array length does not match m = {m}"
        );
        Ok(Self { m, amplitudes })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn node_count(&self) -> usize {
        1 << self.m
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Flat index of `(q, d, x)`.
    #[inline]
    pub fn index(&self, q: usize, d: usize, x: usize) -> usize {
        let n = self.node_count();
        q * self.m * n + d * n + x
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Flips the control qubit on every marked node.
    pub fn apply_oracle(&mut self, marked: &[usize]) {
        let n = self.node_count();
        let block = self.m * n;
        for &x in marked {
            for d in 0..self.m {
                self.amplitudes.swap(d * n + x, block + d * n + x);
            }
        }
    }

    /// Traversing coin on the `q = 0` block and marking coin `−I` on the
    /// `q = 1` block.
    pub fn apply_coins(&mut self, phases: CoinPhases) {
        let m = self.m;
        let n = self.node_count();
        let (free, marked) = self.amplitudes.split_at_mut(m * n);

        // C₀ v = e^{iζ} (v − (1 − e^{iφ}) ⟨χ|v⟩ χ), applied per node.
        let global = Complex64::from_polar(1.0, phases.zeta);
        let reflect = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, phases.phi);
        let mut overlap = vec![Complex64::new(0.0, 0.0); n];
        for dir in free.chunks_exact(n) {
            for (s, &a) in overlap.iter_mut().zip(dir) {
                *s += a;
            }
        }
        let scale = reflect / m as f64;
        for s in overlap.iter_mut() {
            *s *= scale;
        }
        for dir in free.chunks_exact_mut(n) {
            for (a, &s) in dir.iter_mut().zip(&overlap) {
                *a = global * (*a - s);
            }
        }

        for a in marked.iter_mut() {
            *a = -*a;
        }
    }

    /// Moves every amplitude along the edge selected by its coin direction:
    /// `(q, d, x) ↔ (q, d, x ⊕ 2^d)`.
    pub fn apply_shift(&mut self) {
        let n = self.node_count();
        let m = self.m;
        // chunks cycle through d = 0..m for q = 0, then again for q = 1
        for (c, dir) in self.amplitudes.chunks_exact_mut(n).enumerate() {
            let bit = 1usize << (c % m);
            for x in 0..n {
                if x & bit == 0 {
                    dir.swap(x, x | bit);
                }
            }
        }
    }

    /// One search iteration `S · O · C₁ · C₀ · O`.
    pub fn step(&mut self, phases: CoinPhases, marked: &[usize]) {
        self.apply_oracle(marked);
        self.apply_coins(phases);
        self.apply_oracle(marked);
        self.apply_shift();
    }

    /// Probability that measuring the node register yields a marked node.
    pub fn success_probability(&self, marked: &[usize]) -> f64 {
        let n = self.node_count();
        let mut p = 0.0;
        for dir in self.amplitudes.chunks_exact(n) {
            for &x in marked {
                p += dir[x].norm_sqr();
            }
        }
        p
    }

    /// Writes the state as CSV with columns `q,d,x,re,im` in flat-index
    /// order, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "q,d,x,re,im")?;
        let n = self.node_count();
        for (i, a) in self.amplitudes.iter().enumerate() {
            let q = i / (self.m * n);
            let d = (i / n) % self.m;
            let x = i % n;
            writeln!(
                out,
                "{q},{d},{x},{},{}",
                fmt_sig(a.re, 17),
                fmt_sig(a.im, 17)
            )?;
        }
        Ok(())
    }
}

/// Runs the full search with one coin setting per iteration and returns the
/// success probability.
pub fn run_walk(config: &WalkConfig, phases: &[CoinPhases]) -> Result<f64, WalkError> {
    Ok(final_state(config, phases)?.success_probability(config.marked()))
}

/// State after all iterations of [`run_walk`].
pub fn final_state(config: &WalkConfig, phases: &[CoinPhases]) -> Result<WalkState, WalkError> {
    if phases.len() != config.iterations() {
        return Err(WalkError::ScheduleLength {
            expected: config.iterations(),
            got: phases.len(),
        });
    }
    let mut state = WalkState::initial(config.m())?;
    for &p in phases {
        state.step(p, config.marked());
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(m: usize, rng: &mut ChaCha8Rng) -> WalkState {
        let len = 2 * (m << m);
        let mut amps: Vec<Complex64> = (0..len)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        WalkState::from_amplitudes(m, amps).unwrap()
    }

    #[test]
    fn initial_state_layout() {
        let s = WalkState::initial(2).unwrap();
        assert_eq!(s.amplitudes().len(), 16);
        let a = 1.0 / 8f64.sqrt();
        for (i, amp) in s.amplitudes().iter().enumerate() {
            let expected = if i < 8 { a } else { 0.0 };
            assert_eq!(amp.re, expected);
            assert_eq!(amp.im, 0.0);
        }
        let s4 = WalkState::initial(4).unwrap();
        assert_abs_diff_eq!(s4.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_small_coin() {
        assert_eq!(WalkState::initial(1), Err(WalkError::CoinSize(1)));
        assert_eq!(WalkConfig::single(0), Err(WalkError::CoinSize(0)));
    }

    #[test]
    fn config_validation() {
        assert_eq!(WalkConfig::new(3, []), Err(WalkError::NoMarkedNode));
        assert_eq!(
            WalkConfig::new(3, [8]),
            Err(WalkError::MarkedOutOfRange {
                node: 8,
                node_count: 8
            })
        );
        let c = WalkConfig::new(4, [3, 1, 3]).unwrap();
        assert_eq!(c.marked(), &[1, 3]);
        assert_eq!(c.node_count(), 16);
        assert_eq!(c.iterations(), 5);
    }

    #[test]
    fn oracle_on_all_nodes_swaps_every_control_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s0 = random_state(3, &mut rng);
        let mut s = s0.clone();
        let all: Vec<usize> = (0..8).collect();
        s.apply_oracle(&all);
        let half = s.amplitudes().len() / 2;
        assert_eq!(&s.amplitudes()[..half], &s0.amplitudes()[half..]);
        assert_eq!(&s.amplitudes()[half..], &s0.amplitudes()[..half]);
    }

    #[test]
    fn oracle_and_shift_are_involutions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for m in 2..=5 {
            let s0 = random_state(m, &mut rng);
            let mut s = s0.clone();
            s.apply_oracle(&[1, 2]);
            s.apply_oracle(&[1, 2]);
            assert_eq!(s, s0);
            s.apply_shift();
            assert_ne!(s, s0);
            s.apply_shift();
            assert_eq!(s, s0);
        }
    }

    #[test]
    fn grover_coin_eigenvectors() {
        let m = 3;
        let n = 8;
        // v = χ on node 0
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * m * n];
        for d in 0..m {
            amps[d * n] = Complex64::new(1.0 / (m as f64).sqrt(), 0.0);
        }
        let mut s = WalkState::from_amplitudes(m, amps.clone()).unwrap();
        s.apply_coins(CoinPhases::GROVER);
        for (a, b) in s.amplitudes().iter().zip(&amps) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, b.im, epsilon = 1e-15);
        }

        // v ⟂ χ on node 5
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * m * n];
        amps[5] = Complex64::new(0.5, 0.1);
        amps[n + 5] = Complex64::new(-0.5, -0.1);
        let mut s = WalkState::from_amplitudes(m, amps.clone()).unwrap();
        s.apply_coins(CoinPhases::GROVER);
        for (a, b) in s.amplitudes().iter().zip(&amps) {
            assert_abs_diff_eq!(a.re, -b.re, epsilon = 1e-15);
            assert_abs_diff_eq!(a.im, -b.im, epsilon = 1e-15);
        }
    }

    #[test]
    fn marking_coin_negates_control_one_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s0 = random_state(3, &mut rng);
        let mut s = s0.clone();
        s.apply_coins(CoinPhases::new(0.3, 1.7));
        let half = s.amplitudes().len() / 2;
        for (a, b) in s.amplitudes()[half..].iter().zip(&s0.amplitudes()[half..]) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn shift_flips_the_selected_bit() {
        let m = 2;
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * m * 4];
        let from = 4; // (q = 0, d = 1, x = 0)
        amps[from] = Complex64::new(1.0, 0.0);
        let mut s = WalkState::from_amplitudes(m, amps).unwrap();
        s.apply_shift();
        let to = s.index(0, 1, 2);
        assert_eq!(s.amplitudes()[to], Complex64::new(1.0, 0.0));
        assert_abs_diff_eq!(s.norm_sqr(), 1.0);
    }

    #[test]
    fn success_probability_basics() {
        let s = WalkState::initial(4).unwrap();
        assert_abs_diff_eq!(s.success_probability(&[0]), 1.0 / 16.0, epsilon = 1e-15);
        let all: Vec<usize> = (0..16).collect();
        assert_abs_diff_eq!(s.success_probability(&all), 1.0, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let r = random_state(3, &mut rng);
        let mut explicit = 0.0;
        for q in 0..2 {
            for d in 0..3 {
                explicit += r.amplitudes()[r.index(q, d, 6)].norm_sqr();
            }
        }
        assert_abs_diff_eq!(r.success_probability(&[6]), explicit, epsilon = 1e-15);
    }

    #[test]
    fn empty_oracle_reduces_to_coin_then_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s0 = random_state(3, &mut rng);
        let ph = CoinPhases::new(1.1, 2.3);
        let mut a = s0.clone();
        a.step(ph, &[]);
        let mut b = s0;
        b.apply_coins(ph);
        b.apply_shift();
        assert_eq!(a, b);
    }

    #[test]
    fn grover_run_m4_near_half() {
        let c = WalkConfig::single(4).unwrap();
        let p = run_walk(&c, &[CoinPhases::GROVER; 5]).unwrap();
        assert!((p - 0.391).abs() <= 0.05, "p = {p}");
    }

    #[test]
    fn run_walk_rejects_length_mismatch() {
        let c = WalkConfig::single(4).unwrap();
        assert_eq!(
            run_walk(&c, &[CoinPhases::GROVER; 4]),
            Err(WalkError::ScheduleLength {
                expected: 5,
                got: 4
            })
        );
    }

    #[test]
    fn marked_node_choice_is_immaterial() {
        let phases = [CoinPhases::new(2.0, 4.1); 4];
        let a = run_walk(&WalkConfig::new(3, [0]).unwrap(), &phases).unwrap();
        let b = run_walk(&WalkConfig::new(3, [7]).unwrap(), &phases).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12);
    }

    #[test]
    fn state_dump_layout() {
        let s = WalkState::initial(2).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 17);
        assert_eq!(lines[0], "q,d,x,re,im");
        let first = format!("0,0,0,{},", fmt_sig(1.0 / 8f64.sqrt(), 17));
        assert!(lines[1].starts_with(&first), "{}", lines[1]);
        let re: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(re, s.amplitudes()[0].re);
        assert!(lines[9].starts_with("1,0,0,"));
        assert!(lines[6].starts_with("0,1,1,"));
    }
}
