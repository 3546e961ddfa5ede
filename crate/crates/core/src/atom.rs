//! Atom description: energy levels, dipole couplings, Bohr frequencies and the
//! per-frequency lowering operators `D_ω = Σ_{ε_n−ε_m=ω} P_m D P_n`.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{CMatrix, ZERO};

/// Default absolute tolerance (energy units) under which two Bohr frequencies
/// are treated as the same transition frequency.
pub const DEFAULT_MERGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtomError {
    #[error("an atom needs at least 2 levels, got {0}")]
    TooFewLevels(usize),
    #[error("energy {index} is not finite")]
    NonFiniteEnergy { index: usize },
    #[error("energies must be sorted ascending (level {index} has {value} < {previous})")]
    UnsortedEnergies {
        index: usize,
        value: f64,
        previous: f64,
    },
    #[error("dipole {pair} references a level outside 0..{dim}")]
    LevelOutOfRange { pair: TransitionPair, dim: usize },
    #[error("dipole {pair} must connect a higher level to a lower one (ε_upper > ε_lower)")]
    NotLowering { pair: TransitionPair },
    #[error("duplicate dipole entry {0}")]
    DuplicateDipole(TransitionPair),
    #[error("merge tolerance must be finite and non-negative, got {0}")]
    BadTolerance(f64),
}

/// Ordered level pair `(upper, lower)` naming the transition `|upper⟩ → |lower⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionPair {
    pub upper: usize,
    pub lower: usize,
}

impl TransitionPair {
    pub const fn new(upper: usize, lower: usize) -> Self {
        Self { upper, lower }
    }
}

impl fmt::Display for TransitionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.upper, self.lower)
    }
}

impl From<(usize, usize)> for TransitionPair {
    fn from((upper, lower): (usize, usize)) -> Self {
        Self { upper, lower }
    }
}

/// Validated atom: ascending energies and a dipole amplitude per coupled pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpec {
    energies: Vec<f64>,
    dipoles: BTreeMap<TransitionPair, Complex64>,
    merge_tolerance: f64,
}

impl AtomSpec {
    /// Validates and builds an atom. `dipoles` maps `(n, m)` with `ε_n > ε_m`
    /// to the amplitude `d`; the lowering operator is `D = Σ d* |m⟩⟨n|`.
    pub fn new<P>(energies: &[f64], dipoles: &[(P, Complex64)]) -> Result<Self, AtomError>
    where
        P: Copy + Into<TransitionPair>,
    {
        if energies.len() < 2 {
            return Err(AtomError::TooFewLevels(energies.len()));
        }
        for (index, e) in energies.iter().enumerate() {
            if !e.is_finite() {
                return Err(AtomError::NonFiniteEnergy { index });
            }
            if index > 0 && *e < energies[index - 1] {
                return Err(AtomError::UnsortedEnergies {
                    index,
                    value: *e,
                    previous: energies[index - 1],
                });
            }
        }
        let dim = energies.len();
        let mut map = BTreeMap::new();
        for &(pair, d) in dipoles {
            let pair: TransitionPair = pair.into();
            if pair.upper >= dim || pair.lower >= dim {
                return Err(AtomError::LevelOutOfRange { pair, dim });
            }
            if energies[pair.upper] <= energies[pair.lower] {
                return Err(AtomError::NotLowering { pair });
            }
            if map.insert(pair, d).is_some() {
                return Err(AtomError::DuplicateDipole(pair));
            }
        }
        Ok(Self {
            energies: energies.to_vec(),
            dipoles: map,
            merge_tolerance: DEFAULT_MERGE_TOLERANCE,
        })
    }

    pub fn with_merge_tolerance(mut self, tol: f64) -> Result<Self, AtomError> {
        if !tol.is_finite() || tol < 0.0 {
            return Err(AtomError::BadTolerance(tol));
        }
        self.merge_tolerance = tol;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn merge_tolerance(&self) -> f64 {
        self.merge_tolerance
    }

    pub fn dipole(&self, pair: TransitionPair) -> Option<Complex64> {
        self.dipoles.get(&pair).copied()
    }

    /// Dipole entries in `(upper, lower)` order, including zero amplitudes.
    pub fn dipoles(&self) -> impl Iterator<Item = (TransitionPair, Complex64)> + '_ {
        self.dipoles.iter().map(|(p, d)| (*p, *d))
    }

    pub fn transition_frequency(&self, pair: TransitionPair) -> f64 {
        self.energies[pair.upper] - self.energies[pair.lower]
    }

    /// `H_A = Σ ε_n |n⟩⟨n|`.
    pub fn hamiltonian(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.energies.iter().map(|e| Complex64::new(*e, 0.0)),
        ))
    }

    /// Full lowering operator `D = Σ d* |m⟩⟨n|`.
    pub fn lowering_operator(&self) -> CMatrix {
        let mut d = CMatrix::zeros(self.dim(), self.dim());
        for (pair, amp) in self.dipoles() {
            d[(pair.lower, pair.upper)] += amp.conj();
        }
        d
    }

    /// Positive Bohr frequencies of dipole-coupled pairs, merged within the
    /// atom's tolerance and sorted ascending.
    pub fn bohr_frequencies(&self) -> Vec<f64> {
        self.frequency_clusters()
            .into_iter()
            .map(|(omega, _)| omega)
            .collect()
    }

    /// Groups nonzero dipole pairs by Bohr frequency. Consecutive sorted
    /// frequencies closer than the tolerance to the cluster's first member
    /// share one cluster; its frequency is the cluster mean.
    fn frequency_clusters(&self) -> Vec<(f64, Vec<(TransitionPair, Complex64)>)> {
        type Entry = (f64, TransitionPair, Complex64);
        let mut entries: Vec<Entry> = self
            .dipoles()
            .filter(|(_, d)| *d != ZERO)
            .map(|(p, d)| (self.transition_frequency(p), p, d))
            .collect();
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut clusters: Vec<(f64, Vec<Entry>)> = Vec::new();
        for entry in entries {
            match clusters.last_mut() {
                Some((first, members)) if entry.0 - *first <= self.merge_tolerance => {
                    members.push(entry)
                }
                _ => clusters.push((entry.0, vec![entry])),
            }
        }
        clusters
            .into_iter()
            .map(|(_, members)| {
                let omega = members.iter().map(|m| m.0).sum::<f64>() / members.len() as f64;
                (omega, members.into_iter().map(|(_, p, d)| (p, d)).collect())
            })
            .collect()
    }

    /// Splits `D` into per-frequency lowering operators.
    pub fn transition_operators(&self) -> TransitionSet {
        let dim = self.dim();
        let transitions = self
            .frequency_clusters()
            .into_iter()
            .map(|(omega, pairs)| {
                let mut operator = CMatrix::zeros(dim, dim);
                for (p, d) in &pairs {
                    operator[(p.lower, p.upper)] += d.conj();
                }
                Transition {
                    omega,
                    operator,
                    pairs,
                }
            })
            .collect();
        TransitionSet {
            dim,
            merge_tolerance: self.merge_tolerance,
            transitions,
        }
    }
}

/// Free-function form of [`AtomSpec::new`].
pub fn build_atom<P>(energies: &[f64], dipoles: &[(P, Complex64)]) -> Result<AtomSpec, AtomError>
where
    P: Copy + Into<TransitionPair>,
{
    AtomSpec::new(energies, dipoles)
}

pub fn bohr_frequencies(atom: &AtomSpec) -> Vec<f64> {
    atom.bohr_frequencies()
}

pub fn transition_operators(atom: &AtomSpec) -> TransitionSet {
    atom.transition_operators()
}

/// One Bohr frequency `ω` with its lowering operator `D_ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub omega: f64,
    pub operator: CMatrix,
    /// Dipole pairs merged into this frequency, with their amplitudes.
    pub pairs: Vec<(TransitionPair, Complex64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSet {
    dim: usize,
    merge_tolerance: f64,
    transitions: Vec<Transition>,
}

impl TransitionSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Transition> {
        self.transitions.iter()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.omega).collect()
    }

    pub fn merge_tolerance(&self) -> f64 {
        self.merge_tolerance
    }

    /// Index of the transition whose frequency is within the merge tolerance of `omega`.
    pub fn index_of_frequency(&self, omega: f64) -> Option<usize> {
        self.transitions
            .iter()
            .position(|t| (t.omega - omega).abs() <= self.merge_tolerance)
    }

    /// Index of the transition containing the dipole pair.
    pub fn index_of_pair(&self, pair: TransitionPair) -> Option<usize> {
        self.transitions
            .iter()
            .position(|t| t.pairs.iter().any(|(p, _)| *p == pair))
    }

    pub fn dipole(&self, pair: TransitionPair) -> Option<Complex64> {
        self.transitions
            .iter()
            .flat_map(|t| t.pairs.iter())
            .find(|(p, _)| *p == pair)
            .map(|(_, d)| *d)
    }

    /// `Σ_ω D_ω`.
    pub fn total_operator(&self) -> CMatrix {
        self.transitions
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, t| {
                acc + &t.operator
            })
    }
}

impl<'a> IntoIterator for &'a TransitionSet {
    type Item = &'a Transition;
    type IntoIter = std::slice::Iter<'a, Transition>;

    fn into_iter(self) -> Self::IntoIter {
        self.transitions.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, ket_bra, ONE};

    fn three_level(energies: [f64; 3], d: [Complex64; 3]) -> AtomSpec {
        AtomSpec::new(&energies, &[((1, 0), d[0]), ((2, 1), d[1]), ((2, 0), d[2])]).unwrap()
    }

    #[test]
    fn two_level_lowering_is_sigma_minus() {
        let atom = AtomSpec::new(&[0.0, 1.0], &[((1, 0), ONE)]).unwrap();
        assert_eq!(atom.lowering_operator(), ket_bra(2, 0, 1));
        assert_eq!(atom.bohr_frequencies(), vec![1.0]);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let none: &[((usize, usize), Complex64)] = &[];
        assert_eq!(AtomSpec::new(&[0.0], none), Err(AtomError::TooFewLevels(1)));
        assert!(matches!(
            AtomSpec::new(&[0.0, 1.0], &[((0, 1), ONE)]),
            Err(AtomError::NotLowering { .. })
        ));
        assert!(matches!(
            AtomSpec::new(&[0.0, 1.0], &[((1, 0), ONE), ((1, 0), ONE)]),
            Err(AtomError::DuplicateDipole(_))
        ));
        assert!(matches!(
            AtomSpec::new(&[0.0, 1.0], &[((2, 0), ONE)]),
            Err(AtomError::LevelOutOfRange { .. })
        ));
        assert!(matches!(
            AtomSpec::new(&[1.0, 0.0], none),
            Err(AtomError::UnsortedEnergies { .. })
        ));
        // equal energies cannot carry a dipole
        assert!(matches!(
            AtomSpec::new(&[0.0, 0.0, 1.0], &[((1, 0), ONE)]),
            Err(AtomError::NotLowering { .. })
        ));
    }

    #[test]
    fn nondegenerate_three_level_frequencies_and_operators() {
        let d = [c(0.5, 0.1), c(1.0, -0.3), c(0.0, 2.0)];
        let atom = three_level([0.0, 1.0, 3.0], d);
        assert_eq!(atom.bohr_frequencies(), vec![1.0, 2.0, 3.0]);
        let set = atom.transition_operators();
        assert_eq!(set.len(), 3);
        let expect = [
            ket_bra(3, 0, 1) * d[0].conj(),
            ket_bra(3, 1, 2) * d[1].conj(),
            ket_bra(3, 0, 2) * d[2].conj(),
        ];
        for (t, e) in set.iter().zip(expect.iter()) {
            assert_eq!(&t.operator, e);
        }
        assert_eq!(set.total_operator(), atom.lowering_operator());
    }

    #[test]
    fn lambda_atom_drops_forbidden_transition() {
        let atom = three_level([0.0, 1.0, 3.0], [ZERO, ONE, ONE]);
        assert_eq!(atom.bohr_frequencies(), vec![2.0, 3.0]);
        let set = atom.transition_operators();
        assert_eq!(set.index_of_frequency(1.0), None);
        assert_eq!(set.index_of_pair(TransitionPair::new(1, 0)), None);
    }

    #[test]
    fn degenerate_frequency_is_merged() {
        let atom = three_level([0.0, 1.0, 2.0], [ONE, ONE, ONE]);
        assert_eq!(atom.bohr_frequencies(), vec![1.0, 2.0]);
        let set = atom.transition_operators();
        let d1 = &set.iter().next().unwrap().operator;
        assert_eq!(*d1, ket_bra(3, 0, 1) + ket_bra(3, 1, 2));
        assert_eq!(set.iter().next().unwrap().pairs.len(), 2);
    }

    #[test]
    fn merge_tolerance_is_configurable() {
        let atom = three_level([0.0, 1.0, 2.0 + 1e-7], [ONE, ONE, ONE]);
        assert_eq!(atom.bohr_frequencies().len(), 3);
        let loose = atom.with_merge_tolerance(1e-6).unwrap();
        assert_eq!(loose.bohr_frequencies().len(), 2);
    }

    #[test]
    fn projector_consistency_by_enumeration() {
        let atom = three_level([0.0, 0.7, 1.9], [c(0.3, 0.2), c(1.1, 0.0), c(-0.4, 0.9)]);
        let set = atom.transition_operators();
        let e = atom.energies();
        for t in &set {
            for m in 0..3 {
                for n in 0..3 {
                    let entry = t.operator[(m, n)];
                    if ((e[n] - e[m]) - t.omega).abs() > 1e-12 {
                        assert_eq!(entry, ZERO, "P_{m} D_ω P_{n} should vanish");
                    }
                    if m >= n {
                        assert_eq!(entry, ZERO, "D_ω may only lower the energy");
                    }
                }
            }
        }
    }
}
