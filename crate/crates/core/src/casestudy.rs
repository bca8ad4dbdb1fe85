//! A qutrit channel whose minimum-entropy Q-factorization uses a mixed state.
//!
//! Dropping one element of the nine-outcome SIC-POVM in dimension three and
//! spreading its weight over the rest gives an eight-outcome measurement
//! under which a whole segment of states, from the maximally mixed state to
//! `|0⟩⟨0|`, has uniform statistics. Pairing that segment with `|2⟩⟨2|`
//! yields a one-parameter family of Q-factorizations of a single channel.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{Channel, Label};
use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, purity, ComplexMatrix};
use crate::qfactor::{average_state, von_neumann_entropy, DensityMatrix, Ensemble, Povm, PureState};

pub const T_MIN: f64 = -0.5;
pub const T_MAX: f64 = 1.0;
pub const DEFAULT_POINTS: usize = 151;
pub const CSV_HEADER: &str = "t,entropy_rho_t,purity_rho_t,entropy_rho_At";

const T_SLACK: f64 = 1e-12;
const HALF_SQRT_3: f64 = 0.866_025_403_784_438_6;
const INV_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Debug)]
pub struct SicFamily {
    /// The nine SIC vectors `r_0, ..., r_8`.
    pub states: Vec<PureState>,
    /// Eight-outcome measurement `E_i = r_i r_i†/3 + r_0 r_0†/24`, `i = 1..8`.
    pub povm: Povm,
    pub rho_b: DensityMatrix,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn sic_vectors() -> Vec<PureState> {
    let w = c(-0.5, HALF_SQRT_3) * INV_SQRT_2;
    let w_bar = w.conj();
    let s = c(INV_SQRT_2, 0.0);
    let raw = [
        [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        [c(0.5, 0.0), c(0.0, HALF_SQRT_3), c(0.0, 0.0)],
        [c(0.5, 0.0), c(0.0, -HALF_SQRT_3), c(0.0, 0.0)],
        [c(0.5, 0.0), c(0.5, 0.0), s],
        [c(0.5, 0.0), c(0.5, 0.0), w],
        [c(0.5, 0.0), c(0.5, 0.0), w_bar],
        [c(0.5, 0.0), c(-0.5, 0.0), s],
        [c(0.5, 0.0), c(-0.5, 0.0), w],
        [c(0.5, 0.0), c(-0.5, 0.0), w_bar],
    ];
    raw.iter()
        .map(|v| PureState::new(v.to_vec()).expect("SIC vectors are unit"))
        .collect()
}

pub fn build_sic_family() -> SicFamily {
    let states = sic_vectors();
    let shared = states[0].projector().scale(1.0 / 24.0);
    let elements = states[1..]
        .iter()
        .map(|r| &r.projector().scale(1.0 / 3.0) + &shared)
        .collect();
    SicFamily {
        povm: Povm::new(elements).expect("weights redistribute to a complete measurement"),
        rho_b: DensityMatrix::from_pure(&PureState::basis(3, 2)),
        states,
    }
}

fn check_t(t: f64) -> Result<f64> {
    if !(T_MIN - T_SLACK..=T_MAX + T_SLACK).contains(&t) {
        return Err(Error::TOutOfRange(t));
    }
    Ok(t.clamp(T_MIN, T_MAX))
}

/// `(1 - t) I/3 + t |0⟩⟨0|`.
pub fn rho_a(t: f64) -> Result<DensityMatrix> {
    let t = check_t(t)?;
    let rest = (1.0 - t) / 3.0;
    if t == T_MAX {
        return Ok(DensityMatrix::from_pure(&PureState::basis(3, 0)));
    }
    DensityMatrix::diagonal(&[rest + t, rest, rest])
}

/// `ρ_t = ρ_A(t)/2 + ρ_B/2`.
pub fn rho_t(f: &SicFamily, t: f64) -> Result<DensityMatrix> {
    let e = Ensemble::new(vec![0.5, 0.5], vec![rho_a(t)?, f.rho_b.clone()])?;
    Ok(average_state(&e))
}

/// Two-input, eight-output channel realised by `A → ρ_A(t)`, `B → ρ_B` and the POVM.
pub fn family_channel(f: &SicFamily, t: f64) -> Result<Channel> {
    let rows = [rho_a(t)?, f.rho_b.clone()]
        .iter()
        .map(|rho| {
            f.povm
                .probabilities(rho)
                .into_iter()
                .map(|p| p.clamp(0.0, 1.0))
                .collect()
        })
        .collect();
    Channel::new(
        vec![Label::from("A"), Label::from("B")],
        (0..f.povm.len()).map(Label::from).collect(),
        rows,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub entropy_rho_t: f64,
    pub purity_rho_t: f64,
    pub entropy_rho_at: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub increasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    pub global_min_t: f64,
    pub global_min_entropy: f64,
    /// Sample values of `t` where the entropy is below its sampled neighbours.
    pub local_min_t: Vec<f64>,
    pub segments: Vec<Segment>,
}

/// Uniform `t` grid on `[-0.5, 1]` with exact endpoints.
pub fn t_grid(n_points: usize) -> Vec<f64> {
    (0..n_points)
        .map(|k| match k {
            0 => T_MIN,
            k if k + 1 == n_points => T_MAX,
            k => T_MIN + (T_MAX - T_MIN) * k as f64 / (n_points - 1) as f64,
        })
        .collect()
}

pub fn entropy_purity_curve(f: &SicFamily, n_points: usize) -> Result<Curve> {
    if n_points < 3 {
        return Err(Error::InvalidState(format!(
            "curve needs at least 3 points, got {n_points}"
        )));
    }
    let points = t_grid(n_points)
        .into_par_iter()
        .map(|t| {
            let rho = rho_t(f, t)?;
            Ok(CurvePoint {
                t,
                entropy_rho_t: von_neumann_entropy(&rho),
                purity_rho_t: purity(rho.matrix()),
                entropy_rho_at: von_neumann_entropy(&rho_a(t)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let s: Vec<f64> = points.iter().map(|p| p.entropy_rho_t).collect();
    let last = s.len() - 1;
    let (imin, _) = s
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    let local_min_t = (0..=last)
        .filter(|&k| (k == 0 || s[k] < s[k - 1]) && (k == last || s[k] < s[k + 1]))
        .map(|k| points[k].t)
        .collect();

    let mut segments: Vec<Segment> = Vec::new();
    for k in 0..last {
        let increasing = s[k + 1] > s[k];
        match segments.last_mut() {
            Some(seg) if seg.increasing == increasing => seg.t_end = points[k + 1].t,
            _ => segments.push(Segment {
                t_start: points[k].t,
                t_end: points[k + 1].t,
                increasing,
            }),
        }
    }

    Ok(Curve {
        global_min_t: points[imin].t,
        global_min_entropy: s[imin],
        local_min_t,
        segments,
        points,
    })
}

/// Formats like C's `%.12g`.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn curve_csv(curve: &Curve) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_sig12(p.t),
            format_sig12(p.entropy_rho_t),
            format_sig12(p.purity_rho_t),
            format_sig12(p.entropy_rho_at)
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintRank {
    /// Rank of the outcome map on traceless Hermitian matrices.
    pub traceless_rank: usize,
    /// Rank on all Hermitian matrices.
    pub full_rank: usize,
    /// Largest `|tr(E_i (|0⟩⟨0| - I/3))|`; zero when the family direction is in the kernel.
    pub family_direction_residual: f64,
}

fn gell_mann() -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(8);
    for j in 0..3 {
        for k in j + 1..3 {
            let mut sym = ComplexMatrix::zeros(3);
            sym[(j, k)] = c(1.0, 0.0);
            sym[(k, j)] = c(1.0, 0.0);
            out.push(sym);
            let mut anti = ComplexMatrix::zeros(3);
            anti[(j, k)] = c(0.0, -1.0);
            anti[(k, j)] = c(0.0, 1.0);
            out.push(anti);
        }
    }
    out.push(ComplexMatrix::from_diag(&[1.0, -1.0, 0.0]));
    out.push(ComplexMatrix::from_diag(&[1.0, 1.0, -2.0]).scale(1.0 / 3f64.sqrt()));
    out
}

// Numerical rank of the real matrix with columns `tr(E_i B_k)`.
fn outcome_map_rank(povm: &Povm, basis: &[ComplexMatrix]) -> Result<usize> {
    let cols: Vec<Vec<f64>> = basis
        .iter()
        .map(|b| povm.elements().iter().map(|e| (e * b).trace().re).collect())
        .collect();
    let n = cols.len();
    let mut gram = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = c(cols[i].iter().zip(&cols[j]).map(|(x, y)| x * y).sum(), 0.0);
        }
    }
    let values = eig_hermitian(&gram)?.values;
    let cutoff = values[0].abs().max(f64::MIN_POSITIVE) * 1e-12;
    Ok(values.iter().filter(|&&v| v > cutoff).count())
}

pub fn constraint_rank(f: &SicFamily) -> Result<ConstraintRank> {
    let traceless = gell_mann();
    let mut full = traceless.clone();
    full.push(ComplexMatrix::identity(3).scale(1.0 / 3f64.sqrt()));
    let direction = ComplexMatrix::from_diag(&[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]);
    let residual = f
        .povm
        .elements()
        .iter()
        .map(|e| (e * &direction).trace().norm())
        .fold(0.0, f64::max);
    Ok(ConstraintRank {
        traceless_rank: outcome_map_rank(&f.povm, &traceless)?,
        full_rank: outcome_map_rank(&f.povm, &full)?,
        family_direction_residual: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfactor::{verify_qfactorization, QFactorization};
    use crate::channel::Partition;

    #[test]
    fn sic_overlaps() {
        let r = sic_vectors();
        assert!((r[0].inner(&r[0]).norm() - 1.0).abs() < 1e-15);
        for i in 0..9 {
            for j in 0..9 {
                if i != j {
                    assert!((r[i].inner(&r[j]).norm_sqr() - 0.25).abs() < 1e-12, "{i} {j}");
                }
            }
        }
    }

    #[test]
    fn m8_is_complete() {
        let f = build_sic_family();
        let mut sum = ComplexMatrix::zeros(3);
        for e in f.povm.elements() {
            sum = &sum + e;
        }
        assert!((&sum - &ComplexMatrix::identity(3)).max_abs() < 1e-12);
        assert_eq!(f.povm.len(), 8);
    }

    #[test]
    fn rho_a_examples() {
        let mm = rho_a(0.0).unwrap();
        assert!((mm.matrix() - DensityMatrix::maximally_mixed(3).matrix()).max_abs() < 1e-15);
        assert!(rho_a(1.0).unwrap().pure_witness().is_some());
        let edge = rho_a(-0.5).unwrap();
        assert!((edge.matrix() - &ComplexMatrix::from_diag(&[0.0, 0.5, 0.5])).max_abs() < 1e-15);
        assert!(edge.spectrum().last().unwrap().abs() < 1e-10);
        assert!(purity(edge.matrix()) < 1.0);
        assert_eq!(rho_a(-0.6).unwrap_err(), Error::TOutOfRange(-0.6));
        assert!(rho_a(1.01).is_err());
    }

    #[test]
    fn channel_rows_are_t_invariant() {
        let f = build_sic_family();
        let reference = family_channel(&f, 0.0).unwrap();
        for p in reference.row(0) {
            assert!((p - 0.125).abs() < 1e-12);
        }
        let b = [0.0, 0.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (p, q) in reference.row(1).iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
        for t in t_grid(31) {
            let ch = family_channel(&f, t).unwrap();
            for x in 0..2 {
                for (p, q) in ch.row(x).iter().zip(reference.row(x)) {
                    assert!((p - q).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn every_member_factorizes_the_channel() {
        let f = build_sic_family();
        let ch = family_channel(&f, 0.0).unwrap();
        for t in [-0.5, 0.25, 1.0] {
            let q = QFactorization {
                partition: Partition::singletons(2),
                states: vec![rho_a(t).unwrap(), f.rho_b.clone()],
                povm: f.povm.clone(),
            };
            assert!(verify_qfactorization(&ch, &q, 1e-12).valid);
        }
    }

    #[test]
    fn endpoint_states() {
        let f = build_sic_family();
        let low = rho_t(&f, -0.5).unwrap();
        assert!((low.matrix() - &ComplexMatrix::from_diag(&[0.0, 0.25, 0.75])).max_abs() < 1e-15);
        let high = rho_t(&f, 1.0).unwrap();
        assert!((high.matrix() - &ComplexMatrix::from_diag(&[0.5, 0.0, 0.5])).max_abs() < 1e-15);
        assert!((von_neumann_entropy(&high) - 1.0).abs() < 1e-12);
        assert!((von_neumann_entropy(&low) - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert!((purity(low.matrix()) - 0.625).abs() < 1e-12);
    }

    #[test]
    fn curve_minima() {
        let f = build_sic_family();
        let curve = entropy_purity_curve(&f, DEFAULT_POINTS).unwrap();
        assert_eq!(curve.points.len(), 151);
        assert_eq!(curve.points[0].t, -0.5);
        assert_eq!(curve.points[150].t, 1.0);
        assert_eq!(curve.global_min_t, -0.5);
        assert_eq!(curve.local_min_t, vec![-0.5, 1.0]);
        assert_eq!(curve.segments.len(), 2);
        assert!(curve.segments[0].increasing && !curve.segments[1].increasing);
        // Closed form from the diagonal of ρ_t.
        for p in &curve.points {
            let d = [(1.0 + 2.0 * p.t) / 6.0, (1.0 - p.t) / 6.0, (1.0 - p.t) / 6.0 + 0.5];
            let s: f64 = d.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
            assert!((p.entropy_rho_t - s).abs() < 1e-12);
        }
        assert!(entropy_purity_curve(&f, 2).is_err());
    }

    #[test]
    fn constraint_rank_is_seven() {
        let r = constraint_rank(&build_sic_family()).unwrap();
        assert_eq!(r.traceless_rank, 7);
        assert_eq!(r.full_rank, 8);
        assert!(r.family_direction_residual < 1e-15);
    }

    #[test]
    fn sig12_formatting() {
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(-0.5), "-0.5");
        assert_eq!(format_sig12(1.0), "1");
        assert_eq!(format_sig12(0.811_278_124_459_132_8), "0.811278124459");
        assert_eq!(format_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig12(1.5e-7), "1.5e-07");
        assert_eq!(format_sig12(123_456.789), "123456.789");
        assert_eq!(format_sig12(0.999_999_999_999_9), "1");
    }

    #[test]
    fn csv_layout() {
        let curve = entropy_purity_curve(&build_sic_family(), 3).unwrap();
        let csv = curve_csv(&curve);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "-0.5,0.811278124459,0.625,1");
    }
}
