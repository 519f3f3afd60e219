//! One-magnon dynamics of the open XY chain.
//!
//! With a single down spin the chain is a tight-binding model with hopping
//! `K/2`. Its eigenmodes on an open chain of `N` sites are standing sine waves
//! with wavenumbers `q_n = pi n / (N + 1)` and energies `K cos q_n`, so the
//! single-particle propagator is available in closed form as a mode sum.
//!
//! Sites are labelled `1..=N` in every public signature. Time is in units of
//! `1/K` with `hbar = 1`; `K` is carried by the [`ModeTable`].

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Largest modulus among complex entries.
pub fn max_norm<'a>(entries: impl IntoIterator<Item = &'a C64>) -> f64 {
    entries.into_iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Normalization tolerance applied to caller-supplied amplitude vectors.
pub const NORM_TOL: f64 = 1e-8;

/// One-magnon eigenbasis and dispersion for an open chain.
#[derive(Debug, Clone)]
pub struct ModeTable {
    n: usize,
    k: f64,
    q: Vec<f64>,
    /// `phi[(l - 1, n - 1)] = phi_l(q_n)`; columns are modes.
    phi: DMatrix<f64>,
    eps: Vec<f64>,
}

impl ModeTable {
    pub fn new(n: usize, k: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewSites(n));
        }
        if !k.is_finite() || k == 0.0 {
            return Err(Error::BadExchange(k));
        }
        let denom = (n + 1) as f64;
        let q: Vec<f64> = (1..=n).map(|m| PI * m as f64 / denom).collect();
        let eps = q.iter().map(|&qn| k * qn.cos()).collect();
        let norm = (2.0 / denom).sqrt();
        let phi = DMatrix::from_fn(n, n, |l, m| norm * (q[m] * (l + 1) as f64).sin());
        Ok(Self { n, k, q, phi, eps })
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn exchange(&self) -> f64 {
        self.k
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.q
    }

    pub fn dispersion(&self) -> &[f64] {
        &self.eps
    }

    /// Mode matrix with rows indexed by site and columns by mode.
    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    /// Time-evolution phases `exp(-i eps_n t)` for every mode.
    fn phases(&self, t: f64) -> Result<Vec<C64>> {
        if !t.is_finite() {
            return Err(Error::NonFiniteTime(t));
        }
        Ok(self
            .eps
            .iter()
            .map(|&e| C64::from_polar(1.0, -e * t))
            .collect())
    }

    fn propagate_with(&self, phases: &[C64], psi0: &DVector<C64>) -> DVector<C64> {
        // project onto modes, rotate phases, project back: O(N^2)
        let coeffs: Vec<C64> = (0..self.n)
            .map(|m| {
                let overlap: C64 = (0..self.n).map(|l| psi0[l] * self.phi[(l, m)]).sum();
                overlap * phases[m]
            })
            .collect();
        DVector::from_fn(self.n, |l, _| {
            (0..self.n).map(|m| coeffs[m] * self.phi[(l, m)]).sum()
        })
    }
}

/// Build the mode table for `n` sites and exchange strength `k`.
pub fn mode_table(n: usize, k: f64) -> Result<ModeTable> {
    ModeTable::new(n, k)
}

/// Normalized amplitudes of the single down spin, `psi[l - 1]` for site `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    psi: DVector<C64>,
    t: f64,
}

impl AmplitudeVector {
    pub fn new(psi: DVector<C64>, t: f64) -> Result<Self> {
        if psi.len() < 2 {
            return Err(Error::TooFewSites(psi.len()));
        }
        let norm_sqr = psi.norm_squared();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm_sqr));
        }
        Ok(Self { psi, t })
    }

    pub fn from_slice(psi: &[C64], t: f64) -> Result<Self> {
        Self::new(DVector::from_column_slice(psi), t)
    }

    /// Down spin localized at `site` (1-based).
    pub fn localized(n: usize, site: usize) -> Result<Self> {
        if site == 0 || site > n {
            return Err(Error::BadPair { i: site, j: site, n });
        }
        let mut psi = DVector::zeros(n);
        psi[site - 1] = C64::new(1.0, 0.0);
        Self::new(psi, 0.0)
    }

    /// `(|site_a> + |site_b>) / sqrt(2)`: one Bell pair, every other spin up.
    pub fn bell(n: usize, site_a: usize, site_b: usize) -> Result<Self> {
        if site_a == 0 || site_b == 0 || site_a > n || site_b > n || site_a == site_b {
            return Err(Error::BadPair {
                i: site_a,
                j: site_b,
                n,
            });
        }
        let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut psi = DVector::zeros(n);
        psi[site_a - 1] = amp;
        psi[site_b - 1] = amp;
        Self::new(psi, 0.0)
    }

    pub fn sites(&self) -> usize {
        self.psi.len()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.psi
    }

    /// Amplitude on `site` (1-based).
    pub fn amplitude(&self, site: usize) -> C64 {
        self.psi[site - 1]
    }

    pub fn norm_squared(&self) -> f64 {
        self.psi.norm_squared()
    }
}

/// `gamma_{l,m}(t) = sum_q exp(-i eps_q t) phi_l(q) phi_m(q)`.
#[derive(Debug, Clone)]
pub struct PropagatorMatrix {
    t: f64,
    gamma: DMatrix<C64>,
}

impl PropagatorMatrix {
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.gamma
    }

    /// `gamma_{l,m}` with 1-based sites.
    pub fn get(&self, l: usize, m: usize) -> C64 {
        self.gamma[(l - 1, m - 1)]
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.gamma
    }
}

/// Full propagator by direct mode summation, O(N^3).
pub fn propagator(modes: &ModeTable, t: f64) -> Result<PropagatorMatrix> {
    let phases = modes.phases(t)?;
    let n = modes.n;
    let phi = &modes.phi;
    let mut gamma = DMatrix::zeros(n, n);
    for l in 0..n {
        for m in l..n {
            let g: C64 = (0..n)
                .map(|q| phases[q] * (phi[(l, q)] * phi[(m, q)]))
                .sum();
            gamma[(l, m)] = g;
            gamma[(m, l)] = g;
        }
    }
    Ok(PropagatorMatrix { t, gamma })
}

/// Evolve `|01111...>`: the down spin starts on site 1.
pub fn evolve_unentangled(modes: &ModeTable, t: f64) -> Result<AmplitudeVector> {
    let psi0 = AmplitudeVector::localized(modes.n, 1)?;
    evolve_general(modes, &psi0, t)
}

/// Evolve `(|01> + |10>)/sqrt(2)` on sites 1, 2 with every other spin up.
pub fn evolve_bell(modes: &ModeTable, t: f64) -> Result<AmplitudeVector> {
    let psi0 = AmplitudeVector::bell(modes.n, 1, 2)?;
    evolve_general(modes, &psi0, t)
}

/// `psi(t) = gamma(t) psi(0)`. The time stamp of `psi0` is ignored; the
/// result is stamped with `t`.
pub fn evolve_general(
    modes: &ModeTable,
    psi0: &AmplitudeVector,
    t: f64,
) -> Result<AmplitudeVector> {
    if psi0.sites() != modes.n {
        return Err(Error::DimensionMismatch {
            expected: modes.n,
            got: psi0.sites(),
        });
    }
    let norm_sqr = psi0.norm_squared();
    if (norm_sqr - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm_sqr));
    }
    let phases = modes.phases(t)?;
    let psi = modes.propagate_with(&phases, &psi0.psi);
    Ok(AmplitudeVector { psi, t })
}
