//! Brute-force thermal-state expectation values over a truncated Fock space.
//!
//! A multimode thermal state is diagonal in the product number basis, with
//! weight `Π_k m_k^n_k / (1 + m_k)^(1 + n_k)` on `|{n_k}⟩`. Every moment here is
//! computed by enumerating that basis and letting ladder operators act on each
//! basis ket (`a|n⟩ = √n |n−1⟩`, `a†|n⟩ = √(n+1) |n+1⟩`). No operator matrices
//! are built and nothing is random.
//!
//! The module is the ground truth that the closed-form moment identities are
//! checked against:
//!
//! ```text
//! ⟨a†_k a_k'⟩           = m_k δ(k,k')
//! ⟨a†_k a†_k' a_k'' a_k'''⟩ = m_k m_k' [δ(k,k'')δ(k',k''') + δ(k,k''')δ(k',k'')]
//! ```

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Largest basis the enumeration will walk unless told otherwise.
pub const DEFAULT_BASIS_CAP: u128 = 1_000_000;

/// Per-mode tail of `Σ n² P(n)` that the default truncation keeps below.
const DEFAULT_MOMENT_TAIL: f64 = 1e-12;

/// Label of one transverse mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex(usize);

impl ModeIndex {
    pub fn get(self) -> usize {
        self.0
    }
}

/// Truncated multimode thermal state described by its mean occupations.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalState {
    mode_means: Vec<f64>,
    n_max: usize,
}

impl ThermalState {
    pub fn new(mode_means: Vec<f64>, n_max: usize) -> Result<Self> {
        if mode_means.is_empty() {
            return Err(Error::invalid("thermal state", "at least one mode is required"));
        }
        if n_max < 1 {
            return Err(Error::invalid("thermal state", "n_max must be at least 1"));
        }
        if let Some((k, m)) = mode_means
            .iter()
            .enumerate()
            .find(|(_, m)| !m.is_finite() || **m < 0.0)
        {
            return Err(Error::invalid(
                "thermal state",
                format!("mode {k} has mean occupation {m}; must be finite and nonnegative"),
            ));
        }
        Ok(Self { mode_means, n_max })
    }

    /// Builds the state with [`default_truncation`](Self::default_truncation).
    pub fn with_default_truncation(mode_means: Vec<f64>) -> Result<Self> {
        let n_max = Self::default_truncation(&mode_means);
        Self::new(mode_means, n_max)
    }

    /// `max(20, ⌈10·m + 10⌉, N)` over all modes, where `N` is the smallest
    /// cutoff whose `n²`-weighted tail is below 1e-12.
    pub fn default_truncation(mode_means: &[f64]) -> usize {
        mode_means
            .iter()
            .filter(|m| m.is_finite() && **m >= 0.0)
            .map(|&m| {
                let heuristic = (10.0 * m + 10.0).ceil() as usize;
                let mut n = 20usize.max(heuristic);
                while moment_tail(m, n, 2) > DEFAULT_MOMENT_TAIL && n < 100_000 {
                    n += 1;
                }
                n
            })
            .max()
            .unwrap_or(20)
    }

    pub fn mode_means(&self) -> &[f64] {
        &self.mode_means
    }

    pub fn modes(&self) -> usize {
        self.mode_means.len()
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn mode(&self, k: usize) -> Result<ModeIndex> {
        if k < self.modes() {
            Ok(ModeIndex(k))
        } else {
            Err(Error::ModeOutOfRange {
                index: k,
                modes: self.modes(),
            })
        }
    }

    /// Size of the truncated product basis, `(n_max + 1)^modes`.
    pub fn basis_size(&self) -> Option<u128> {
        (self.n_max as u128 + 1).checked_pow(self.modes() as u32)
    }

    /// Geometric bound `Σ_k (m_k / (1 + m_k))^(n_max + 1)` on `1 − Tr ρ`.
    pub fn tail_bound(&self) -> f64 {
        self.mode_means
            .iter()
            .map(|&m| (m / (1.0 + m)).powi(self.n_max as i32 + 1))
            .sum()
    }

    /// Truncated trace `Σ weights`, evaluated per mode (no enumeration).
    pub fn trace(&self) -> f64 {
        self.mode_means
            .iter()
            .map(|&m| mode_probabilities(m, self.n_max).iter().sum::<f64>())
            .product()
    }

    /// Asserts `0 ≤ 1 − Tr ρ ≤ tail_bound`, with a rounding allowance.
    pub fn check_normalization(&self) -> Result<()> {
        let deficit = 1.0 - self.trace();
        let slack = 1e-14 * self.modes() as f64 * (self.n_max as f64 + 1.0);
        if deficit < -slack || deficit > self.tail_bound() + slack {
            return Err(Error::invalid(
                "thermal state",
                format!(
                    "trace deficit {deficit:e} outside geometric tail bound {:e}",
                    self.tail_bound()
                ),
            ));
        }
        Ok(())
    }
}

/// `P(n) = m^n / (1 + m)^(n + 1)` for `n = 0..=n_max`.
fn mode_probabilities(mean: f64, n_max: usize) -> Vec<f64> {
    let ratio = mean / (1.0 + mean);
    let mut p = Vec::with_capacity(n_max + 1);
    let mut current = 1.0 / (1.0 + mean);
    for _ in 0..=n_max {
        p.push(current);
        current *= ratio;
    }
    p
}

/// `Σ_{n > n_max} n^power P(n)` for a single thermal mode.
pub fn moment_tail(mean: f64, n_max: usize, power: i32) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    let ratio = mean / (1.0 + mean);
    let mut n = n_max + 1;
    let mut p = (1.0 / (1.0 + mean)) * ratio.powi(n as i32);
    let mut total = 0.0;
    loop {
        let term = (n as f64).powi(power) * p;
        total += term;
        if term <= total * 1e-17 || p == 0.0 {
            break;
        }
        n += 1;
        p *= ratio;
    }
    total
}

/// One ladder operator in a normally written product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create(ModeIndex),
    Annihilate(ModeIndex),
}

/// Walks every occupation tuple of the truncated basis with its weight.
fn for_each_basis_state(
    state: &ThermalState,
    cap: u128,
    mut visit: impl FnMut(&[usize], f64),
) -> Result<()> {
    let size = state.basis_size().unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::ResourceLimit { needed: size, cap });
    }
    let tables: Vec<Vec<f64>> = state
        .mode_means
        .iter()
        .map(|&m| mode_probabilities(m, state.n_max))
        .collect();
    let modes = state.modes();
    let mut occ = vec![0usize; modes];
    loop {
        let weight: f64 = occ.iter().zip(&tables).map(|(&n, t)| t[n]).product();
        visit(&occ, weight);

        // odometer increment
        let mut k = 0;
        loop {
            if k == modes {
                return Ok(());
            }
            occ[k] += 1;
            if occ[k] <= state.n_max {
                break;
            }
            occ[k] = 0;
            k += 1;
        }
    }
}

/// Diagonal weights of the truncated density operator keyed by occupation tuple.
pub fn state_weights(state: &ThermalState) -> Result<BTreeMap<Vec<usize>, f64>> {
    state_weights_capped(state, DEFAULT_BASIS_CAP)
}

pub fn state_weights_capped(
    state: &ThermalState,
    cap: u128,
) -> Result<BTreeMap<Vec<usize>, f64>> {
    let mut out = BTreeMap::new();
    for_each_basis_state(state, cap, |occ, w| {
        out.insert(occ.to_vec(), w);
    })?;
    Ok(out)
}

/// `⟨n| ops |n⟩`, applying the product right to left to the basis ket.
fn diagonal_element(occ: &[usize], ops: &[Ladder], scratch: &mut Vec<usize>) -> f64 {
    scratch.clear();
    scratch.extend_from_slice(occ);
    let mut amp = 1.0;
    for op in ops.iter().rev() {
        match *op {
            Ladder::Annihilate(ModeIndex(k)) => {
                let n = scratch[k];
                if n == 0 {
                    return 0.0;
                }
                amp *= (n as f64).sqrt();
                scratch[k] = n - 1;
            }
            Ladder::Create(ModeIndex(k)) => {
                let n = scratch[k];
                amp *= (n as f64 + 1.0).sqrt();
                scratch[k] = n + 1;
            }
        }
    }
    if scratch.as_slice() == occ {
        amp
    } else {
        0.0
    }
}

/// `Tr[ρ Π ops]` by explicit weighted sum over the truncated basis.
pub fn expectation(state: &ThermalState, ops: &[Ladder]) -> Result<f64> {
    for op in ops {
        let (Ladder::Create(k) | Ladder::Annihilate(k)) = *op;
        state.mode(k.0)?;
    }
    let mut total = 0.0;
    let mut scratch = Vec::with_capacity(state.modes());
    for_each_basis_state(state, DEFAULT_BASIS_CAP, |occ, w| {
        if w != 0.0 {
            total += w * diagonal_element(occ, ops, &mut scratch);
        }
    })?;
    Ok(total)
}

/// `Tr[ρ a†_k a_k']`.
pub fn second_moment(state: &ThermalState, k: ModeIndex, k1: ModeIndex) -> Result<f64> {
    expectation(state, &[Ladder::Create(k), Ladder::Annihilate(k1)])
}

/// `Tr[ρ a†_k a†_k' a_k'' a_k''']`.
pub fn fourth_moment(
    state: &ThermalState,
    k: ModeIndex,
    k1: ModeIndex,
    k2: ModeIndex,
    k3: ModeIndex,
) -> Result<f64> {
    expectation(
        state,
        &[
            Ladder::Create(k),
            Ladder::Create(k1),
            Ladder::Annihilate(k2),
            Ladder::Annihilate(k3),
        ],
    )
}

/// Closed-form pair-contraction value `m_k m_k' [δ(k,k'')δ(k',k''') + δ(k,k''')δ(k',k'')]`.
pub fn two_delta_fourth_moment(
    mode_means: &[f64],
    k: ModeIndex,
    k1: ModeIndex,
    k2: ModeIndex,
    k3: ModeIndex,
) -> f64 {
    let d = |a: ModeIndex, b: ModeIndex| if a == b { 1.0 } else { 0.0 };
    mode_means[k.0] * mode_means[k1.0] * (d(k, k2) * d(k1, k3) + d(k, k3) * d(k1, k2))
}

/// Zero-delay normalized correlation `⟨a†a†aa⟩ / ⟨a†a⟩²` of one mode.
pub fn g2_zero_delay_single_mode(state: &ThermalState, k: ModeIndex) -> Result<f64> {
    let first = second_moment(state, k, k)?;
    if first == 0.0 {
        return Err(Error::DivisionByZero("single-mode g2 (zero mean occupation)"));
    }
    let second = fourth_moment(state, k, k, k, k)?;
    Ok(second / (first * first))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(m: f64, n_max: usize) -> ThermalState {
        ThermalState::new(vec![m], n_max).unwrap()
    }

    #[test]
    fn unit_mean_weights_halve() {
        let w = state_weights(&single(1.0, 60)).unwrap();
        assert_eq!(w[&vec![0]], 0.5);
        assert_eq!(w[&vec![1]], 0.25);
    }

    #[test]
    fn vacuum_weights() {
        let w = state_weights(&single(0.0, 5)).unwrap();
        assert_eq!(w[&vec![0]], 1.0);
        assert!((1..=5).all(|n| w[&vec![n]] == 0.0));
    }

    #[test]
    fn two_mode_normalization() {
        let s = ThermalState::new(vec![0.1, 0.1], 10).unwrap();
        assert!(s.tail_bound() < 1e-11);
        let total: f64 = state_weights(&s).unwrap().values().sum();
        assert!((total - 1.0).abs() < 1e-10);
        s.check_normalization().unwrap();
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ThermalState::new(vec![-0.1], 10).is_err());
        assert!(ThermalState::new(vec![], 10).is_err());
        assert!(ThermalState::new(vec![0.5], 0).is_err());
        let s = ThermalState::new(vec![0.5; 3], 200).unwrap();
        assert!(matches!(
            state_weights(&s),
            Err(Error::ResourceLimit { .. })
        ));
        assert!(matches!(s.mode(3), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn second_moment_examples() {
        let s = ThermalState::new(vec![0.1, 0.3], 10).unwrap();
        let (a, b) = (s.mode(0).unwrap(), s.mode(1).unwrap());
        assert!((second_moment(&s, a, a).unwrap() - 0.1).abs() < 1e-8);
        assert_eq!(second_moment(&s, a, b).unwrap(), 0.0);

        let s = single(1.0, 40);
        let k = s.mode(0).unwrap();
        assert!((second_moment(&s, k, k).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fourth_moment_examples() {
        let s = ThermalState::new(vec![0.2; 3], 12).unwrap();
        let m: Vec<_> = (0..3).map(|k| s.mode(k).unwrap()).collect();
        // k = k'', k' = k''' on distinct modes
        assert!((fourth_moment(&s, m[0], m[1], m[0], m[1]).unwrap() - 0.04).abs() < 1e-7);
        // no contraction pattern
        assert_eq!(fourth_moment(&s, m[0], m[1], m[2], m[2]).unwrap(), 0.0);
        assert_eq!(fourth_moment(&s, m[0], m[0], m[1], m[2]).unwrap(), 0.0);
        // all equal: ⟨n(n−1)⟩ = 2 m² and the literal pair sum agree
        let all = fourth_moment(&s, m[1], m[1], m[1], m[1]).unwrap();
        assert!((all - 0.08).abs() < 1e-7);
        let pairs = two_delta_fourth_moment(s.mode_means(), m[1], m[1], m[1], m[1]);
        assert!((pairs - 0.08).abs() < 1e-15);
    }

    #[test]
    fn single_mode_g2() {
        for (m, n_max, tol) in [(0.5, 30, 1e-6), (1.0, 60, 1e-8)] {
            let s = single(m, n_max);
            let g2 = g2_zero_delay_single_mode(&s, s.mode(0).unwrap()).unwrap();
            assert!((g2 - 2.0).abs() < tol, "m={m}: {g2}");
        }
        // two-photon truncation gives 2(1+m)³/(1+3m)², first order in the mean
        for m in [1e-2, 1e-3, 1e-4] {
            let s = single(m, 2);
            let g2 = g2_zero_delay_single_mode(&s, s.mode(0).unwrap()).unwrap();
            assert!((g2 - 2.0).abs() < 10.0 * m, "m={m}: {g2}");
        }
        let s = single(0.0, 4);
        assert!(matches!(
            g2_zero_delay_single_mode(&s, s.mode(0).unwrap()),
            Err(Error::DivisionByZero(_))
        ));
    }

    #[test]
    fn default_truncation_meets_tail_target() {
        for m in [0.0, 0.1, 0.5, 1.0, 2.0] {
            let n = ThermalState::default_truncation(&[m]);
            assert!(n >= 20 && n >= (10.0 * m + 10.0).ceil() as usize);
            assert!(moment_tail(m, n, 2) <= DEFAULT_MOMENT_TAIL);
        }
    }

    #[test]
    fn moment_tail_matches_direct_sum() {
        // Σ_{n>N} n² P(n) against a long explicit sum
        let (m, cut) = (0.7, 15);
        let p = mode_probabilities(m, 2000);
        let direct: f64 = (cut + 1..=2000).map(|n| (n * n) as f64 * p[n]).sum();
        assert!((moment_tail(m, cut, 2) - direct).abs() < 1e-14);
    }
}
