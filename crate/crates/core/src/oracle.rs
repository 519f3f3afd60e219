//! Exact diagonalization of the full `2^N` chain Hamiltonian.
//!
//! Used as an independent reference for the one-magnon closed forms. The
//! Hamiltonian is
//!
//! ```text
//! H = K/2 sum_i (S+_i S-_{i+1} + h.c.) + Delta sum_i Sz_i Sz_{i+1} - E0
//! ```
//!
//! on an open chain, with `Sz = +-1/2` and `E0 = Delta (N - 1) / 4` so the
//! all-up state sits at zero energy. Basis layout matches [`FullState`].

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::magnon::{evolve_bell, evolve_unentangled, max_norm, mode_table, AmplitudeVector, C64};
use crate::rdm::{embed_magnon, rdm_from_magnon, rdm_from_state, FullState};

pub const MAX_SITES: usize = 12;

const EIGEN_EPS: f64 = 1e-14;
const EIGEN_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianSpec {
    n: usize,
    k: f64,
    delta: f64,
    e0: f64,
}

impl HamiltonianSpec {
    pub fn new(n: usize, k: f64, delta: f64) -> Result<Self> {
        if !(2..=MAX_SITES).contains(&n) {
            return Err(Error::OracleSize { got: n, max: MAX_SITES });
        }
        if !k.is_finite() || k == 0.0 {
            return Err(Error::BadExchange(k));
        }
        if !delta.is_finite() {
            return Err(Error::Precondition(format!("anisotropy must be finite, got {delta}")));
        }
        Ok(Self {
            n,
            k,
            delta,
            e0: delta * (n - 1) as f64 / 4.0,
        })
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn exchange(&self) -> f64 {
        self.k
    }

    pub fn anisotropy(&self) -> f64 {
        self.delta
    }

    pub fn offset(&self) -> f64 {
        self.e0
    }
}

/// Dense real symmetric Hamiltonian in the `2^N` computational basis.
pub fn build_hamiltonian(spec: &HamiltonianSpec) -> DMatrix<f64> {
    let n = spec.n;
    let dim = 1usize << n;
    let hop = 0.5 * spec.k;
    let mut h = DMatrix::zeros(dim, dim);
    for x in 0..dim {
        let mut diag = -spec.e0;
        for site in 1..n {
            let a = FullState::bit_of(n, site);
            let b = FullState::bit_of(n, site + 1);
            let up_a = (x >> a) & 1 == 1;
            let up_b = (x >> b) & 1 == 1;
            if up_a == up_b {
                diag += 0.25 * spec.delta;
            } else {
                diag -= 0.25 * spec.delta;
                let y = x ^ (1 << a) ^ (1 << b);
                h[(y, x)] += hop;
            }
        }
        h[(x, x)] += diag;
    }
    h
}

/// Number of down spins in basis state `x`.
pub fn down_count(n: usize, x: usize) -> usize {
    n - (x & ((1usize << n) - 1)).count_ones() as usize
}

/// Diagonal of total `S^z` in the computational basis.
pub fn total_sz(n: usize) -> DVector<f64> {
    DVector::from_fn(1usize << n, |x, _| 0.5 * n as f64 - down_count(n, x) as f64)
}

/// Basis indices with exactly `downs` down spins, ascending.
pub fn sector_indices(n: usize, downs: usize) -> Vec<usize> {
    (0..1usize << n).filter(|&x| down_count(n, x) == downs).collect()
}

/// Restriction of `h` to the `downs`-down-spin subspace.
pub fn sector_block(h: &DMatrix<f64>, n: usize, downs: usize) -> DMatrix<f64> {
    let idx = sector_indices(n, downs);
    DMatrix::from_fn(idx.len(), idx.len(), |r, c| h[(idx[r], idx[c])])
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal columns matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max |H v - lambda v|` over all eigenpairs.
    pub fn residual(&self, h: &DMatrix<f64>) -> f64 {
        let hv = h * &self.eigenvectors;
        let lv = &self.eigenvectors * DMatrix::from_diagonal(&self.eigenvalues);
        (hv - lv).amax()
    }

    pub fn orthonormality_error(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.eigenvectors;
        (g - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.eigenvectors * DMatrix::from_diagonal(&self.eigenvalues) * self.eigenvectors.transpose()
    }
}

pub fn diagonalize(h: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    let eig = SymmetricEigen::try_new(h.clone(), EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(order.len(), order.iter().map(|&k| eig.eigenvalues[k]));
    let eigenvectors = eig.eigenvectors.select_columns(&order);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// `exp(-i H t) |psi>` by spectral summation (`hbar = 1`).
pub fn evolve_full(dec: &SpectralDecomposition, state: &FullState, t: f64) -> Result<FullState> {
    if !t.is_finite() {
        return Err(Error::NonFiniteTime(t));
    }
    let amp = state.amplitudes();
    if amp.len() != dec.dim() {
        return Err(Error::DimensionMismatch {
            expected: dec.dim(),
            got: amp.len(),
        });
    }
    let v = &dec.eigenvectors;
    let re = v.tr_mul(&amp.map(|z| z.re));
    let im = v.tr_mul(&amp.map(|z| z.im));
    let mut out_re = DVector::zeros(dec.dim());
    let mut out_im = DVector::zeros(dec.dim());
    let rot = DVector::from_fn(dec.dim(), |k, _| {
        C64::new(re[k], im[k]) * C64::from_polar(1.0, -dec.eigenvalues[k] * t)
    });
    out_re.gemv(1.0, v, &rot.map(|z| z.re), 0.0);
    out_im.gemv(1.0, v, &rot.map(|z| z.im), 0.0);
    let out = out_re.zip_map(&out_im, C64::new);
    FullState::new(state.sites(), out)
}

/// `<psi| H |psi>`.
pub fn energy(h: &DMatrix<f64>, state: &FullState) -> f64 {
    let amp = state.amplitudes();
    let hr = h * amp.map(|z| z.re);
    let hi = h * amp.map(|z| z.im);
    amp.iter()
        .zip(hr.iter().zip(hi.iter()))
        .map(|(z, (&a, &b))| (z.conj() * C64::new(a, b)).re)
        .sum()
}

/// Weight of `state` outside the one-down-spin sector.
pub fn sector_leakage(state: &FullState) -> f64 {
    let n = state.sites();
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|&(x, _)| down_count(n, x) != 1)
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// Outcome of comparing analytic and exact reduced density matrices.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub sites: usize,
    pub exchange: f64,
    pub anisotropy: f64,
    pub trials: usize,
    pub tolerance: f64,
    pub seed: u64,
    /// Largest elementwise `|rho_analytic - rho_exact|` starting from `|0111...>`.
    pub max_deviation_unentangled: f64,
    /// Same, starting from the Bell pair on sites 1, 2.
    pub max_deviation_bell: f64,
    pub max_leakage: f64,
    pub hygiene_failures: usize,
    /// False for exploratory runs where no threshold applies.
    pub asserted: bool,
    pub pass: bool,
}

impl ValidationReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_deviation_unentangled.max(self.max_deviation_bell)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sites:                     {}", self.sites)?;
        writeln!(f, "exchange K:                {}", self.exchange)?;
        writeln!(f, "anisotropy Delta:          {}", self.anisotropy)?;
        writeln!(f, "trials per initial state:  {}", self.trials)?;
        writeln!(f, "seed:                      {}", self.seed)?;
        writeln!(f, "tolerance:                 {:e}", self.tolerance)?;
        writeln!(f, "max deviation unentangled: {:e}", self.max_deviation_unentangled)?;
        writeln!(f, "max deviation bell:        {:e}", self.max_deviation_bell)?;
        writeln!(f, "max sector leakage:        {:e}", self.max_leakage)?;
        writeln!(f, "hygiene failures:          {}", self.hygiene_failures)?;
        let verdict = match (self.asserted, self.pass) {
            (false, _) => "not asserted",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        write!(f, "result:                    {verdict}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Initial {
    Unentangled,
    Bell,
}

fn analytic(modes: &crate::magnon::ModeTable, which: Initial, t: f64) -> Result<AmplitudeVector> {
    match which {
        Initial::Unentangled => evolve_unentangled(modes, t),
        Initial::Bell => evolve_bell(modes, t),
    }
}

struct Comparison {
    max_dev: [f64; 2],
    max_leakage: f64,
    hygiene_failures: usize,
}

fn compare_against_oracle(spec: &HamiltonianSpec, trials: usize, seed: u64) -> Result<Comparison> {
    let n = spec.n;
    let modes = mode_table(n, spec.k)?;
    let dec = diagonalize(&build_hamiltonian(spec))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_max = 10.0 * n as f64 / spec.k.abs();
    let mut out = Comparison {
        max_dev: [0.0; 2],
        max_leakage: 0.0,
        hygiene_failures: 0,
    };
    for (slot, which) in [Initial::Unentangled, Initial::Bell].into_iter().enumerate() {
        let psi0 = analytic(&modes, which, 0.0)?;
        let full0 = embed_magnon(&psi0);
        for _ in 0..trials {
            let i = rng.random_range(1..n);
            let j = rng.random_range(i + 1..=n);
            let t = rng.random_range(0.0..=t_max);
            let exact_state = evolve_full(&dec, &full0, t)?;
            out.max_leakage = out.max_leakage.max(sector_leakage(&exact_state));
            let exact = rdm_from_state(&exact_state, i, j)?;
            let approx = rdm_from_magnon(&analytic(&modes, which, t)?, i, j)?;
            for rho in [&exact, &approx] {
                if !rho.hygiene()?.passes() {
                    out.hygiene_failures += 1;
                }
            }
            let dev = max_norm((exact.matrix() - approx.matrix()).iter());
            out.max_dev[slot] = out.max_dev[slot].max(dev);
        }
    }
    Ok(out)
}

/// Cross-check the one-magnon closed forms against exact evolution at `Delta = 0`.
///
/// Draws `trials` random `(i, j, t)` with `t` in `[0, 10 N / |K|]` for each of
/// the two initial states and records the largest elementwise deviation.
pub fn validate_sector(
    spec: &HamiltonianSpec,
    trials: usize,
    tolerance: f64,
    seed: u64,
) -> Result<ValidationReport> {
    if spec.delta != 0.0 {
        return Err(Error::Precondition(format!(
            "sector validation requires Delta = 0, got {}",
            spec.delta
        )));
    }
    let cmp = compare_against_oracle(spec, trials, seed)?;
    let max = cmp.max_dev[0].max(cmp.max_dev[1]);
    Ok(ValidationReport {
        sites: spec.n,
        exchange: spec.k,
        anisotropy: spec.delta,
        trials,
        tolerance,
        seed,
        max_deviation_unentangled: cmp.max_dev[0],
        max_deviation_bell: cmp.max_dev[1],
        max_leakage: cmp.max_leakage,
        hygiene_failures: cmp.hygiene_failures,
        asserted: true,
        pass: max < tolerance && cmp.hygiene_failures == 0,
    })
}

/// Deviation of the `Delta = 0` closed forms from exact dynamics at nonzero
/// `Delta`. Nothing is asserted: `asserted` and `pass` are false and
/// `tolerance` is NaN.
pub fn anisotropy_experiment(spec: &HamiltonianSpec, trials: usize, seed: u64) -> Result<ValidationReport> {
    let cmp = compare_against_oracle(spec, trials, seed)?;
    Ok(ValidationReport {
        sites: spec.n,
        exchange: spec.k,
        anisotropy: spec.delta,
        trials,
        tolerance: f64::NAN,
        seed,
        max_deviation_unentangled: cmp.max_dev[0],
        max_deviation_bell: cmp.max_dev[1],
        max_leakage: cmp.max_leakage,
        hygiene_failures: cmp.hygiene_failures,
        asserted: false,
        pass: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdm::extract_magnon;

    fn spec(n: usize, k: f64, delta: f64) -> HamiltonianSpec {
        HamiltonianSpec::new(n, k, delta).unwrap()
    }

    #[test]
    fn size_window() {
        assert!(matches!(HamiltonianSpec::new(1, 1.0, 0.0), Err(Error::OracleSize { .. })));
        assert!(matches!(HamiltonianSpec::new(13, 1.0, 0.0), Err(Error::OracleSize { .. })));
        assert!(HamiltonianSpec::new(12, 1.0, 0.0).is_ok());
    }

    #[test]
    fn two_site_block() {
        let h = build_hamiltonian(&spec(2, 1.0, 0.0));
        // "01" = 1, "10" = 2
        assert_eq!(h[(1, 2)], 0.5);
        assert_eq!(h[(2, 1)], 0.5);
        assert_eq!(h[(1, 1)], 0.0);
        assert_eq!(h[(2, 2)], 0.0);
        let block = sector_block(&h, 2, 1);
        let dec = diagonalize(&block).unwrap();
        assert!((dec.eigenvalues[0] + 0.5).abs() < 1e-14);
        assert!((dec.eigenvalues[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn all_up_has_zero_energy() {
        for delta in [0.0, 0.5, -1.3] {
            let s = spec(6, 1.0, delta);
            let h = build_hamiltonian(&s);
            let top = (1usize << 6) - 1;
            assert!(h.column(top).amax() < 1e-15);
            // all-down state is degenerate with all-up
            assert!(h[(0, 0)].abs() < 1e-15);
        }
    }

    #[test]
    fn hamiltonian_is_symmetric_and_conserves_sz() {
        for delta in [0.0, 0.7] {
            let n = 7;
            let h = build_hamiltonian(&spec(n, 1.4, delta));
            assert_eq!(h, h.transpose());
            let sz = DMatrix::from_diagonal(&total_sz(n));
            let comm = &h * &sz - &sz * &h;
            assert!(comm.amax() < 1e-12);
        }
    }

    #[test]
    fn one_magnon_spectrum() {
        for n in 2..=9 {
            let k = 1.7;
            let h = build_hamiltonian(&spec(n, k, 0.0));
            let dec = diagonalize(&sector_block(&h, n, 1)).unwrap();
            let modes = mode_table(n, k).unwrap();
            let mut expected = modes.dispersion().to_vec();
            expected.sort_by(f64::total_cmp);
            for (a, b) in dec.eigenvalues.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn decomposition_invariants() {
        let h = build_hamiltonian(&spec(6, 1.0, 0.3));
        let dec = diagonalize(&h).unwrap();
        let norm = h.amax().max(1.0);
        assert!(dec.orthonormality_error() < 1e-10);
        assert!(dec.residual(&h) < 1e-10 * norm * h.nrows() as f64);
        assert!((dec.reconstruct() - &h).amax() < 1e-9);
        assert!(dec.eigenvalues.as_slice().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn evolution_basics() {
        let s = spec(5, 1.0, 0.4);
        let h = build_hamiltonian(&s);
        let dec = diagonalize(&h).unwrap();
        let psi = embed_magnon(&AmplitudeVector::bell(5, 2, 4).unwrap());
        let same = evolve_full(&dec, &psi, 0.0).unwrap();
        assert!(max_norm((same.amplitudes() - psi.amplitudes()).iter()) < 1e-13);

        let e0 = energy(&h, &psi);
        for t in [0.5, 3.0, 17.0] {
            let out = evolve_full(&dec, &psi, t).unwrap();
            assert!((out.amplitudes().norm_squared() - 1.0).abs() < 1e-10);
            assert!((energy(&h, &out) - e0).abs() < 1e-10);
            assert!(sector_leakage(&out) < 1e-12);
            extract_magnon(&out).unwrap();
        }

        // stationary eigenvector picks up a pure phase
        let k = 11;
        let v = dec.eigenvectors.column(k).map(|x| C64::new(x, 0.0));
        let st = FullState::new(5, v.clone()).unwrap();
        let out = evolve_full(&dec, &st, 2.5).unwrap();
        let phase = v.dotc(out.amplitudes());
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!(max_norm((out.amplitudes() - v * phase).iter()) < 1e-12);

        let wrong = FullState::basis("0111").unwrap();
        assert!(matches!(evolve_full(&dec, &wrong, 1.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn central_cross_validation() {
        let n = 8;
        let s = spec(n, 1.0, 0.0);
        let dec = diagonalize(&build_hamiltonian(&s)).unwrap();
        let modes = mode_table(n, 1.0).unwrap();
        let psi0 = AmplitudeVector::localized(n, 1).unwrap();
        let exact = extract_magnon(&evolve_full(&dec, &embed_magnon(&psi0), 5.0).unwrap()).unwrap();
        let closed = evolve_unentangled(&modes, 5.0).unwrap();
        assert!(max_norm((exact.as_vector() - closed.as_vector()).iter()) < 1e-10);
    }

    #[test]
    fn propagator_matches_exact_columns() {
        let n = 6;
        let t = 3.7;
        let dec = diagonalize(&build_hamiltonian(&spec(n, 1.0, 0.0))).unwrap();
        let gamma = crate::magnon::propagator(&mode_table(n, 1.0).unwrap(), t).unwrap();
        for m in 1..=n {
            let start = embed_magnon(&AmplitudeVector::localized(n, m).unwrap());
            let col = extract_magnon(&evolve_full(&dec, &start, t).unwrap()).unwrap();
            for l in 1..=n {
                assert!((col.amplitude(l) - gamma.get(l, m)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn bell_and_random_states_match() {
        use rand::Rng;
        let n = 8;
        let dec = diagonalize(&build_hamiltonian(&spec(n, 1.0, 0.0))).unwrap();
        let modes = mode_table(n, 1.0).unwrap();
        let bell = extract_magnon(
            &evolve_full(&dec, &embed_magnon(&AmplitudeVector::bell(n, 1, 2).unwrap()), 2.0).unwrap(),
        )
        .unwrap();
        assert!(max_norm((bell.as_vector() - evolve_bell(&modes, 2.0).unwrap().as_vector()).iter()) < 1e-10);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let v = DVector::from_fn(n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
            let psi0 = AmplitudeVector::new(v.normalize(), 0.0).unwrap();
            let t = rng.random_range(0.0..40.0);
            let exact = extract_magnon(&evolve_full(&dec, &embed_magnon(&psi0), t).unwrap()).unwrap();
            let closed = crate::magnon::evolve_general(&modes, &psi0, t).unwrap();
            assert!(max_norm((exact.as_vector() - closed.as_vector()).iter()) < 1e-10);
        }
    }

    #[test]
    fn validation_passes_and_guards() {
        let r = validate_sector(&spec(6, 1.0, 0.0), 50, 1e-10, 1).unwrap();
        assert!(r.pass, "{r}");
        let r = validate_sector(&spec(2, 1.0, 0.0), 20, 1e-10, 2).unwrap();
        assert!(r.pass, "{r}");
        assert!(matches!(
            validate_sector(&spec(4, 1.0, 0.5), 10, 1e-10, 3),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn anisotropy_leaks_nothing_but_shifts_dynamics() {
        let r = anisotropy_experiment(&spec(6, 1.0, 0.5), 20, 4).unwrap();
        assert!(r.max_leakage < 1e-12);
        assert!(r.max_deviation() > 1e-6);
    }
}
