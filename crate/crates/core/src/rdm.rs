//! Two-qubit reduced density matrices.
//!
//! Qubit convention: `|0>` is a down spin and `|1>` an up spin. A pair
//! `(i, j)` with `i < j` is stored in the ordered basis `|00>, |01>, |10>, |11>`
//! with site `i` in the first slot, so basis index = `2 * bit_i + bit_j`.
//! Matrix elements follow the usual letter layout:
//!
//! ```text
//!     A  E  F  G
//!     .  B  H  I
//!     .  .  C  J
//!     .  .  .  D
//! ```

use nalgebra::{DVector, Matrix4, SymmetricEigen};

use crate::error::{Error, Result};
use crate::magnon::{max_norm, AmplitudeVector, C64};

/// Hermiticity and trace tolerance for every constructed density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_TOL, 0)` are treated as zero; anything lower is invalid.
pub const PSD_TOL: f64 = 1e-10;
/// Off-diagonal magnitude below which `E, F, G, I, J` count as zero.
pub const SECTOR_TOL: f64 = 1e-12;
/// Off-sector weight above which [`extract_magnon`] refuses a state.
pub const LEAKAGE_TOL: f64 = 1e-8;
pub const STATE_NORM_TOL: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// The ten independent entries of a two-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Elements {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: C64,
    pub f: C64,
    pub g: C64,
    pub h: C64,
    pub i: C64,
    pub j: C64,
}

/// Worst-case deviations from a valid density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hygiene {
    pub hermiticity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
}

impl Hygiene {
    pub fn passes(&self) -> bool {
        self.hermiticity <= HERMITIAN_TOL
            && self.trace <= TRACE_TOL
            && self.min_eigenvalue >= -PSD_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitDensity {
    i: usize,
    j: usize,
    rho: Matrix4<C64>,
}

impl TwoQubitDensity {
    /// Validates Hermiticity, unit trace and positivity before accepting `rho`.
    pub fn new(i: usize, j: usize, rho: Matrix4<C64>) -> Result<Self> {
        if i == 0 || i >= j {
            return Err(Error::BadPair { i, j, n: j.max(i) });
        }
        let out = Self { i, j, rho };
        let hy = out.hygiene()?;
        if !hy.passes() {
            return Err(Error::InvalidDensity(format!(
                "hermiticity {:e}, trace error {:e}, min eigenvalue {:e}",
                hy.hermiticity, hy.trace, hy.min_eigenvalue
            )));
        }
        Ok(out)
    }

    /// Fixed-magnetization form: only the diagonal and `H` are populated.
    pub fn from_sector(i: usize, j: usize, a: f64, b: f64, c: f64, d: f64, h: C64) -> Result<Self> {
        let z = C64::new(0.0, 0.0);
        let r = |x: f64| C64::new(x, 0.0);
        #[rustfmt::skip]
        let rho = Matrix4::new(
            r(a), z,         z,    z,
            z,    r(b),      h,    z,
            z,    h.conj(),  r(c), z,
            z,    z,         z,    r(d),
        );
        Self::new(i, j, rho)
    }

    /// Maximally mixed state `I/4`.
    pub fn maximally_mixed(i: usize, j: usize) -> Result<Self> {
        Self::new(i, j, Matrix4::identity() * C64::new(0.25, 0.0))
    }

    /// Projector onto a pure two-qubit state (normalized internally).
    pub fn pure(i: usize, j: usize, amplitudes: [C64; 4]) -> Result<Self> {
        let v = nalgebra::Vector4::from(amplitudes);
        let n2 = v.norm_squared();
        if n2 == 0.0 {
            return Err(Error::NotNormalized(0.0));
        }
        let rho = v * v.adjoint() / C64::new(n2, 0.0);
        Self::new(i, j, rho)
    }

    pub fn sites(&self) -> (usize, usize) {
        (self.i, self.j)
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.rho
    }

    pub fn elements(&self) -> Elements {
        let r = &self.rho;
        Elements {
            a: r[(0, 0)].re,
            b: r[(1, 1)].re,
            c: r[(2, 2)].re,
            d: r[(3, 3)].re,
            e: r[(0, 1)],
            f: r[(0, 2)],
            g: r[(0, 3)],
            h: r[(1, 2)],
            i: r[(1, 3)],
            j: r[(2, 3)],
        }
    }

    /// Largest magnitude among the off-diagonals that vanish at fixed magnetization.
    pub fn sector_violation(&self) -> f64 {
        let el = self.elements();
        [el.e, el.f, el.g, el.i, el.j]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_sector(&self) -> bool {
        self.sector_violation() < SECTOR_TOL
    }

    /// Eigenvalues in ascending order, without clamping.
    pub fn eigenvalues(&self) -> Result<[f64; 4]> {
        let eig = SymmetricEigen::try_new(self.hermitian_part(), EIGEN_EPS, EIGEN_MAX_ITER)
            .ok_or(Error::NoConvergence)?;
        let mut ev = [0.0; 4];
        ev.copy_from_slice(eig.eigenvalues.as_slice());
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    pub fn hygiene(&self) -> Result<Hygiene> {
        let hermiticity = max_norm((self.rho - self.rho.adjoint()).iter());
        let tr = self.rho.trace();
        let trace = (tr - C64::new(1.0, 0.0)).norm();
        let min_eigenvalue = self.eigenvalues()?[0];
        Ok(Hygiene {
            hermiticity,
            trace,
            min_eigenvalue,
        })
    }

    pub(crate) fn hermitian_part(&self) -> Matrix4<C64> {
        (self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0)
    }
}

fn check_pair(i: usize, j: usize, n: usize) -> Result<()> {
    if i == 0 || i >= j || j > n {
        return Err(Error::BadPair { i, j, n });
    }
    Ok(())
}

/// Reduced density matrix of sites `(i, j)` for a one-down-spin state.
///
/// Only `B = |psi_i|^2`, `C = |psi_j|^2`, `D = 1 - B - C` and
/// `H = psi_i psi_j*` survive; `A` and the remaining coherences are exactly 0.
pub fn rdm_from_magnon(psi: &AmplitudeVector, i: usize, j: usize) -> Result<TwoQubitDensity> {
    check_pair(i, j, psi.sites())?;
    let pi = psi.amplitude(i);
    let pj = psi.amplitude(j);
    let b = pi.norm_sqr();
    let c = pj.norm_sqr();
    let d = 1.0 - b - c;
    TwoQubitDensity::from_sector(i, j, 0.0, b, c, d, pi * pj.conj())
}

/// Pure state on `N` qubits. Basis index is `sum_l bit_l 2^(N - l)` with
/// `bit_l = 1` for an up spin, so site 1 is the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    n: usize,
    amp: DVector<C64>,
}

impl FullState {
    pub fn new(n: usize, amp: DVector<C64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewSites(n));
        }
        if n >= usize::BITS as usize || amp.len() != 1usize << n {
            return Err(Error::DimensionMismatch {
                expected: 1usize.checked_shl(n as u32).unwrap_or(0),
                got: amp.len(),
            });
        }
        let norm_sqr = amp.norm_squared();
        if (norm_sqr - 1.0).abs() > STATE_NORM_TOL {
            return Err(Error::NotNormalized(norm_sqr));
        }
        Ok(Self { n, amp })
    }

    /// Computational basis state from a bit string such as `"0111"`, site 1 first.
    pub fn basis(bits: &str) -> Result<Self> {
        let n = bits.len();
        let idx = bits.chars().try_fold(0usize, |acc, ch| match ch {
            '0' => Ok(acc << 1),
            '1' => Ok((acc << 1) | 1),
            other => Err(Error::Precondition(format!("bad bit {other:?} in {bits:?}"))),
        })?;
        let mut amp = DVector::zeros(1usize << n);
        amp[idx] = C64::new(1.0, 0.0);
        Self::new(n, amp)
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amp
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amp
    }

    /// Bit position of `site` inside a basis index.
    pub fn bit_of(n: usize, site: usize) -> u32 {
        (n - site) as u32
    }

    /// Basis index with a single down spin on `site`.
    pub fn one_down_index(n: usize, site: usize) -> usize {
        ((1usize << n) - 1) ^ (1usize << Self::bit_of(n, site))
    }
}

/// Partial trace of `|psi><psi|` over every site except `i` and `j`.
pub fn rdm_from_state(state: &FullState, i: usize, j: usize) -> Result<TwoQubitDensity> {
    let n = state.n;
    check_pair(i, j, n)?;
    let bi = FullState::bit_of(n, i);
    let bj = FullState::bit_of(n, j);
    let mask = (1usize << bi) | (1usize << bj);
    let amp = &state.amp;
    let mut rho = Matrix4::<C64>::zeros();
    for rest in (0..amp.len()).filter(|x| x & mask == 0) {
        let v: [C64; 4] = std::array::from_fn(|k| {
            let (hi, lo) = (k >> 1, k & 1);
            amp[rest | (hi << bi) | (lo << bj)]
        });
        for (r, vr) in v.iter().enumerate() {
            for (c, vc) in v.iter().enumerate() {
                rho[(r, c)] += vr * vc.conj();
            }
        }
    }
    // exact for a normalized state; removes residual norm drift otherwise
    rho /= C64::new(amp.norm_squared(), 0.0);
    TwoQubitDensity::new(i, j, rho)
}

/// Place `sum_l psi_l |l>` into the full `2^N` basis.
pub fn embed_magnon(psi: &AmplitudeVector) -> FullState {
    let n = psi.sites();
    let mut amp = DVector::zeros(1usize << n);
    for l in 1..=n {
        amp[FullState::one_down_index(n, l)] = psi.amplitude(l);
    }
    FullState { n, amp }
}

/// Inverse of [`embed_magnon`] on the one-down-spin sector.
pub fn extract_magnon(state: &FullState) -> Result<AmplitudeVector> {
    let n = state.n;
    let sector: Vec<usize> = (1..=n).map(|l| FullState::one_down_index(n, l)).collect();
    let leak: f64 = state
        .amp
        .iter()
        .enumerate()
        .filter(|(x, _)| !sector.contains(x))
        .map(|(_, z)| z.norm_sqr())
        .sum();
    if leak > LEAKAGE_TOL {
        return Err(Error::OutsideSector(leak));
    }
    let psi = DVector::from_iterator(n, sector.iter().map(|&x| state.amp[x]));
    let norm = psi.norm();
    AmplitudeVector::new(psi / C64::new(norm, 0.0), 0.0)
}
