//! Pairwise entanglement measures of a two-qubit density matrix.
//!
//! Every measure has a general route that works on any valid 4x4 matrix.
//! Matrices at fixed magnetization (only the diagonal and `H` nonzero) also
//! get closed-form fast paths; [`measure_all`] picks them automatically.
//!
//! Single-qubit Paulis in the `|0> = down, |1> = up` basis:
//! `sigma_z = diag(-1, 1)`, `sigma_x = [[0, 1], [1, 0]]`,
//! `sigma_y = [[0, i], [-i, 0]]`, so that `sigma_+ |0> = |1>`.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, SVD};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::magnon::C64;
use crate::rdm::{TwoQubitDensity, PSD_TOL};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlators {
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub s_plus: f64,
    pub s_minus: f64,
}

/// Correlation-function bounds on the localizable entanglement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeBounds {
    pub lower: f64,
    pub upper: f64,
}

/// Closed-form sector expressions reported for inspection only.
///
/// `sum_of_roots = 2 (sqrt(AD) + sqrt(BC))` coincides with the upper bound and
/// `max_form = max(4 |AD - BC|, 2 Re H)` with the lower bound, so neither is
/// used as a bound here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorForms {
    pub sum_of_roots: f64,
    pub max_form: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureSet {
    pub impurity: f64,
    /// von Neumann entropy in bits.
    pub entropy: f64,
    pub concurrence: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub s_plus: f64,
    pub s_minus: f64,
    pub le_lower: f64,
    pub le_upper: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sector_forms: Option<SectorForms>,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn ci(im: f64) -> C64 {
    C64::new(0.0, im)
}

pub fn sigma_x() -> Matrix2<C64> {
    Matrix2::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

pub fn sigma_y() -> Matrix2<C64> {
    Matrix2::new(c(0.0), ci(1.0), ci(-1.0), c(0.0))
}

pub fn sigma_z() -> Matrix2<C64> {
    Matrix2::new(c(-1.0), c(0.0), c(0.0), c(1.0))
}

/// `a (x) b` with `a` acting on the first slot (site `i`).
pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, col| a[(r >> 1, col >> 1)] * b[(r & 1, col & 1)])
}

fn expectation(rho: &TwoQubitDensity, op: &Matrix4<C64>) -> f64 {
    (rho.matrix() * op).trace().re
}

/// Sets eigenvalues in `[-PSD_TOL, 0)` to zero and rejects anything lower.
fn clamp_eigenvalue(x: f64) -> Result<f64> {
    if x >= 0.0 {
        Ok(x)
    } else if x >= -PSD_TOL {
        Ok(0.0)
    } else {
        Err(Error::InvalidDensity(format!("eigenvalue {x:e} below tolerance")))
    }
}

fn hermitian_eigen(m: Matrix4<C64>) -> Result<SymmetricEigen<C64, nalgebra::U4>> {
    SymmetricEigen::try_new(m, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::NoConvergence)
}

fn shannon_bits(probs: impl IntoIterator<Item = f64>) -> f64 {
    probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}

fn require_sector(rho: &TwoQubitDensity) -> Result<()> {
    if rho.is_sector() {
        Ok(())
    } else {
        Err(Error::NotInSector(rho.sector_violation()))
    }
}

/// `M = 1 - Tr rho^2`.
pub fn impurity(rho: &TwoQubitDensity) -> f64 {
    let m = rho.matrix();
    1.0 - (m * m).trace().re
}

/// `M = 1 - A^2 - B^2 - C^2 - D^2 - 2 |H|^2` at fixed magnetization.
pub fn impurity_sector(rho: &TwoQubitDensity) -> Result<f64> {
    require_sector(rho)?;
    let el = rho.elements();
    Ok(1.0 - el.a * el.a - el.b * el.b - el.c * el.c - el.d * el.d - 2.0 * el.h.norm_sqr())
}

/// `S = -Tr rho log2 rho`.
pub fn entropy(rho: &TwoQubitDensity) -> Result<f64> {
    let ev = rho.eigenvalues()?;
    let probs = ev.iter().map(|&x| clamp_eigenvalue(x)).collect::<Result<Vec<_>>>()?;
    Ok(shannon_bits(probs))
}

/// Entropy from the block structure `A (+) [[B, H], [H*, C]] (+) D`.
pub fn entropy_sector(rho: &TwoQubitDensity) -> Result<f64> {
    require_sector(rho)?;
    let el = rho.elements();
    let mean = 0.5 * (el.b + el.c);
    let split = (0.25 * (el.b - el.c).powi(2) + el.h.norm_sqr()).sqrt();
    let probs = [el.a, el.d, mean + split, mean - split]
        .iter()
        .map(|&x| clamp_eigenvalue(x))
        .collect::<Result<Vec<_>>>()?;
    Ok(shannon_bits(probs))
}

/// Spin-flipped matrix `(sigma_y (x) sigma_y) rho* (sigma_y (x) sigma_y)`.
pub fn spin_flip(rho: &TwoQubitDensity) -> Matrix4<C64> {
    let yy = kron(&sigma_y(), &sigma_y());
    yy * rho.matrix().conjugate() * yy
}

/// Wootters concurrence from the spectrum of `rho rho~`.
///
/// `sqrt(rho) rho~ sqrt(rho) = M M^dagger` with `M = sqrt(rho) YY sqrt(rho)*`,
/// so the square roots of its eigenvalues are the singular values of `M`.
/// Taking them directly avoids square roots of noise-level eigenvalues when
/// `rho` is rank deficient.
pub fn concurrence(rho: &TwoQubitDensity) -> Result<f64> {
    let eig = hermitian_eigen(rho.hermitian_part())?;
    let mut root = Matrix4::<C64>::zeros();
    for k in 0..4 {
        let lam = clamp_eigenvalue(eig.eigenvalues[k])?;
        let v = eig.eigenvectors.column(k);
        root += v * v.adjoint() * c(lam.sqrt());
    }
    let yy = kron(&sigma_y(), &sigma_y());
    let m = root * yy * root.conjugate();
    let svd = SVD::try_new(m, false, false, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(Error::NoConvergence)?;
    let mut roots: Vec<f64> = svd.singular_values.iter().copied().collect();
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok((roots[0] - roots[1] - roots[2] - roots[3]).max(0.0))
}

/// `C = 2 max(0, |H| - sqrt(A D))` at fixed magnetization.
pub fn concurrence_sector(rho: &TwoQubitDensity) -> Result<f64> {
    require_sector(rho)?;
    let el = rho.elements();
    let ad = (el.a * el.d).max(0.0);
    Ok(2.0 * (el.h.norm() - ad.sqrt()).max(0.0))
}

/// Connected correlators and `s_+-` from expectation values `Tr(rho O)`.
pub fn correlators(rho: &TwoQubitDensity) -> Correlators {
    let id = Matrix2::identity();
    let (x, y, z) = (sigma_x(), sigma_y(), sigma_z());
    let ev = |a: &Matrix2<C64>, b: &Matrix2<C64>| expectation(rho, &kron(a, b));
    let connected = |p: &Matrix2<C64>| ev(p, p) - ev(p, &id) * ev(&id, p);
    let zz = ev(&z, &z);
    let zi = ev(&z, &id);
    let zj = ev(&id, &z);
    Correlators {
        qx: connected(&x),
        qy: connected(&y),
        qz: connected(&z),
        s_plus: ((1.0 + zz).powi(2) - (zi + zj).powi(2)).max(0.0),
        s_minus: ((1.0 - zz).powi(2) - (zi - zj).powi(2)).max(0.0),
    }
}

/// The same correlators written directly in the matrix elements.
pub fn correlators_from_elements(rho: &TwoQubitDensity) -> Correlators {
    let el = rho.elements();
    let (a, b, cc, d) = (el.a, el.b, el.c, el.d);
    Correlators {
        qx: 2.0 * (el.h + el.g).re - 4.0 * (el.e + el.j).re * (el.i + el.f).re,
        qy: 2.0 * (el.h - el.g).re - 4.0 * (el.e + el.j).im * (el.i + el.f).im,
        qz: 4.0 * (a * d - b * cc),
        s_plus: 16.0 * a * d,
        s_minus: 16.0 * b * cc,
    }
}

/// Trace-route correlators with s+ and s- taken from the diagonal products
/// 16 rho_00 rho_33 and 16 rho_11 rho_22. The difference-of-squares form
/// cancels to ~1e-16 when a population vanishes, which the square root in the
/// upper bound would amplify to ~1e-8.
fn stable_correlators(rho: &TwoQubitDensity) -> Correlators {
    let el = rho.elements();
    Correlators {
        s_plus: (16.0 * el.a * el.d).max(0.0),
        s_minus: (16.0 * el.b * el.c).max(0.0),
        ..correlators(rho)
    }
}

fn bounds_from(q: &Correlators) -> LeBounds {
    LeBounds {
        lower: q.qx.abs().max(q.qy.abs()).max(q.qz.abs()),
        upper: 0.5 * (q.s_plus.max(0.0).sqrt() + q.s_minus.max(0.0).sqrt()),
    }
}

pub fn le_bounds(rho: &TwoQubitDensity) -> LeBounds {
    bounds_from(&stable_correlators(rho))
}

pub fn sector_forms(rho: &TwoQubitDensity) -> Result<SectorForms> {
    require_sector(rho)?;
    let el = rho.elements();
    let ad = el.a * el.d;
    let bc = el.b * el.c;
    Ok(SectorForms {
        sum_of_roots: 2.0 * (ad.max(0.0).sqrt() + bc.max(0.0).sqrt()),
        max_form: (4.0 * (ad - bc).abs()).max(2.0 * el.h.re),
    })
}

pub fn measure_all(rho: &TwoQubitDensity) -> Result<MeasureSet> {
    let q = stable_correlators(rho);
    let le = bounds_from(&q);
    let (impurity, entropy, concurrence, forms) = if rho.is_sector() {
        (
            impurity_sector(rho)?,
            entropy_sector(rho)?,
            concurrence_sector(rho)?,
            Some(sector_forms(rho)?),
        )
    } else {
        (impurity(rho), entropy(rho)?, concurrence(rho)?, None)
    };
    Ok(MeasureSet {
        impurity,
        entropy,
        concurrence,
        qx: q.qx,
        qy: q.qy,
        qz: q.qz,
        s_plus: q.s_plus,
        s_minus: q.s_minus,
        le_lower: le.lower,
        le_upper: le.upper,
        sector_forms: forms,
    })
}

/// General 4x4 routes only, ignoring any sector structure.
pub fn measure_all_general(rho: &TwoQubitDensity) -> Result<MeasureSet> {
    let q = stable_correlators(rho);
    let le = bounds_from(&q);
    Ok(MeasureSet {
        impurity: impurity(rho),
        entropy: entropy(rho)?,
        concurrence: concurrence(rho)?,
        qx: q.qx,
        qy: q.qy,
        qz: q.qz,
        s_plus: q.s_plus,
        s_minus: q.s_minus,
        le_lower: le.lower,
        le_upper: le.upper,
        sector_forms: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magnon::{evolve_bell, evolve_unentangled, mode_table};
    use crate::rdm::rdm_from_magnon;
    use proptest::prelude::*;

    fn bell() -> TwoQubitDensity {
        TwoQubitDensity::from_sector(1, 2, 0.0, 0.5, 0.5, 0.0, c(0.5)).unwrap()
    }

    fn mixed() -> TwoQubitDensity {
        TwoQubitDensity::maximally_mixed(1, 2).unwrap()
    }

    #[test]
    fn pauli_convention() {
        let plus = (sigma_x() + sigma_y() * ci(1.0)) * c(0.5);
        // sigma_+ |0> = |1>, sigma_+ |1> = 0
        assert_eq!(plus, Matrix2::new(c(0.0), c(0.0), c(1.0), c(0.0)));
        assert_eq!(sigma_x() * sigma_y(), sigma_z() * ci(1.0));
    }

    #[test]
    fn impurity_examples() {
        assert!(impurity(&bell()).abs() < 1e-15);
        assert!((impurity(&mixed()) - 0.75).abs() < 1e-15);
        let rho = TwoQubitDensity::from_sector(1, 2, 0.0, 0.25, 0.25, 0.5, c(0.25)).unwrap();
        assert!((impurity_sector(&rho).unwrap() - 0.5).abs() < 1e-15);
        assert!((impurity(&rho) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn entropy_examples() {
        assert!(entropy(&bell()).unwrap().abs() < 1e-12);
        assert!((entropy(&mixed()).unwrap() - 2.0).abs() < 1e-12);
        let half = TwoQubitDensity::from_sector(1, 2, 0.5, 0.5, 0.0, 0.0, c(0.0)).unwrap();
        assert!((entropy(&half).unwrap() - 1.0).abs() < 1e-12);
        assert!((entropy_sector(&half).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn concurrence_examples() {
        assert!((concurrence(&bell()).unwrap() - 1.0).abs() < 1e-10);
        assert!((concurrence_sector(&bell()).unwrap() - 1.0).abs() < 1e-15);
        let product = TwoQubitDensity::pure(
            3,
            7,
            [c(0.6), C64::new(0.0, 0.8), c(0.0), c(0.0)],
        )
        .unwrap();
        assert!(concurrence(&product).unwrap() < 1e-7);
        let no_h = TwoQubitDensity::from_sector(1, 2, 0.0, 0.3, 0.3, 0.4, c(0.0)).unwrap();
        assert_eq!(concurrence_sector(&no_h).unwrap(), 0.0);
        assert!(concurrence(&mixed()).unwrap() < 1e-12);
    }

    #[test]
    fn concurrence_general_entangled_pure_state() {
        // a|00> + b|11> has concurrence 2|ab|
        let (a, b) = (0.8f64, 0.6f64);
        let rho = TwoQubitDensity::pure(1, 2, [c(a), c(0.0), c(0.0), c(b)]).unwrap();
        assert!((concurrence(&rho).unwrap() - 2.0 * a * b).abs() < 1e-7);
        assert!(matches!(concurrence_sector(&rho), Err(Error::NotInSector(_))));
    }

    #[test]
    fn one_magnon_concurrence_is_twice_abs_h() {
        let m = mode_table(8, 1.0).unwrap();
        let psi = evolve_unentangled(&m, 3.3).unwrap();
        let rho = rdm_from_magnon(&psi, 3, 5).unwrap();
        let el = rho.elements();
        let cc = concurrence_sector(&rho).unwrap();
        assert!((cc - 2.0 * (el.b * el.c).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn correlator_examples() {
        let q = correlators(&mixed());
        assert!(q.qx.abs() < 1e-15 && q.qy.abs() < 1e-15 && q.qz.abs() < 1e-15);
        assert!((q.s_plus - 1.0).abs() < 1e-15 && (q.s_minus - 1.0).abs() < 1e-15);

        let rho = TwoQubitDensity::from_sector(1, 2, 0.0, 0.2, 0.3, 0.5, C64::new(0.1, 0.2)).unwrap();
        let q = correlators(&rho);
        assert!((q.qz + 4.0 * 0.2 * 0.3).abs() < 1e-15);
        assert!(q.s_plus.abs() < 1e-15);
        assert!((q.s_minus - 16.0 * 0.2 * 0.3).abs() < 1e-14);
        assert!((q.qx - 0.2).abs() < 1e-15 && (q.qy - 0.2).abs() < 1e-15);
    }

    #[test]
    fn bound_examples() {
        let le = le_bounds(&bell());
        assert!((le.lower - 1.0).abs() < 1e-15 && (le.upper - 1.0).abs() < 1e-15);
        let product = TwoQubitDensity::pure(1, 2, [c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        assert!(le_bounds(&product).lower.abs() < 1e-15);
        let m = mode_table(20, 1.0).unwrap();
        let psi = evolve_bell(&m, 23.0).unwrap();
        let rho = rdm_from_magnon(&psi, 19, 20).unwrap();
        let el = rho.elements();
        let le = le_bounds(&rho);
        assert!((le.upper - 2.0 * (el.b * el.c).sqrt()).abs() < 1e-12);
        assert!((le.upper - concurrence_sector(&rho).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn measure_all_examples() {
        let m = measure_all(&bell()).unwrap();
        assert!(m.impurity.abs() < 1e-15);
        assert!(m.entropy.abs() < 1e-12);
        assert!((m.concurrence - 1.0).abs() < 1e-15);
        assert!((m.le_lower - 1.0).abs() < 1e-15 && (m.le_upper - 1.0).abs() < 1e-15);
        let m = measure_all(&mixed()).unwrap();
        assert!((m.impurity - 0.75).abs() < 1e-15);
        assert!((m.entropy - 2.0).abs() < 1e-12);
        assert!(m.concurrence.abs() < 1e-12);
        assert!(m.le_lower.abs() < 1e-15);
        assert!(m.sector_forms.is_some());
    }

    #[test]
    fn non_sector_uses_general_path() {
        let rho = TwoQubitDensity::pure(1, 2, [c(0.8), c(0.0), c(0.0), c(0.6)]).unwrap();
        let m = measure_all(&rho).unwrap();
        assert!(m.sector_forms.is_none());
        assert!((m.concurrence - 0.96).abs() < 1e-7);
    }

    /// Random fixed-magnetization density matrix: diagonal from a Dirichlet-like
    /// draw and a coherence inside the PSD disc `|H|^2 <= B C`.
    fn sector_rho() -> impl Strategy<Value = TwoQubitDensity> {
        (
            prop::array::uniform4(0.0f64..1.0),
            0.0f64..1.0,
            0.0f64..std::f64::consts::TAU,
        )
            .prop_filter_map("degenerate", |(w, r, phase)| {
                let total: f64 = w.iter().sum();
                if total < 1e-6 {
                    return None;
                }
                let [a, b, cc, d] = w.map(|x| x / total);
                let h = C64::from_polar(r * (b * cc).sqrt(), phase);
                TwoQubitDensity::from_sector(1, 2, a, b, cc, d, h).ok()
            })
    }

    fn general_rho() -> impl Strategy<Value = TwoQubitDensity> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16).prop_filter_map("rank", |raw| {
            let g = Matrix4::from_iterator(raw.iter().map(|&(a, b)| C64::new(a, b)));
            let m = g * g.adjoint();
            let tr = m.trace().re;
            (tr > 1e-6).then(|| TwoQubitDensity::new(1, 2, m / c(tr)).ok()).flatten()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn sector_concurrence_agrees(rho in sector_rho()) {
            let general = concurrence(&rho).unwrap();
            let sector = concurrence_sector(&rho).unwrap();
            prop_assert!((general - sector).abs() < 1e-10, "{} vs {}", general, sector);
        }

        #[test]
        fn sector_correlators_match_closed_forms(rho in sector_rho()) {
            let tr = correlators(&rho);
            let cf = correlators_from_elements(&rho);
            prop_assert!((tr.qz - cf.qz).abs() < 1e-12);
            prop_assert!((tr.s_plus - cf.s_plus).abs() < 1e-12);
            prop_assert!((tr.s_minus - cf.s_minus).abs() < 1e-12);
            let re_h = 2.0 * rho.elements().h.re;
            prop_assert!((tr.qx - re_h).abs() < 1e-12 && (tr.qy - re_h).abs() < 1e-12);
        }

        #[test]
        fn sector_fast_paths_agree(rho in sector_rho()) {
            let fast = measure_all(&rho).unwrap();
            let slow = measure_all_general(&rho).unwrap();
            prop_assert!((fast.impurity - slow.impurity).abs() < 1e-12);
            prop_assert!((fast.entropy - slow.entropy).abs() < 1e-10);
            prop_assert!((fast.concurrence - slow.concurrence).abs() < 1e-10);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(300))]

        #[test]
        fn general_correlators_match_element_forms(rho in general_rho()) {
            let tr = correlators(&rho);
            let cf = correlators_from_elements(&rho);
            prop_assert!((tr.qx - cf.qx).abs() < 1e-12);
            prop_assert!((tr.qy - cf.qy).abs() < 1e-12);
            prop_assert!((tr.qz - cf.qz).abs() < 1e-12);
            prop_assert!((tr.s_plus - cf.s_plus).abs() < 1e-12);
            prop_assert!((tr.s_minus - cf.s_minus).abs() < 1e-12);
        }

        #[test]
        fn measure_ranges(rho in general_rho()) {
            let m = measure_all(&rho).unwrap();
            prop_assert!(m.impurity >= -1e-12 && m.impurity <= 0.75 + 1e-12);
            prop_assert!(m.entropy >= 0.0 && m.entropy <= 2.0 + 1e-12);
            prop_assert!(m.concurrence >= 0.0 && m.concurrence <= 1.0 + 1e-10);
            prop_assert!(m.le_lower <= m.le_upper + 1e-10);
            prop_assert_eq!(m.entropy < 1e-8, m.impurity <= 1e-10);
        }
    }
}
