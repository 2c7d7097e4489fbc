//! Explicit invariant-region-preserving limiter.
//!
//! Each cell polynomial is pulled towards its average,
//! `w̃ = θ w + (1 - θ) w̄`, with `θ = min(1, θ₁, θ₂)` where
//!
//! ```text
//! θ₁ = (r0 - r(w̄)) / (r_max - r(w̄))   if r_max > r0, else 1
//! θ₂ = (s(w̄) - s0) / (s(w̄) - s_min)   if s_min < s0, else 1
//! ```
//!
//! and `r_max`, `s_min` are taken over a finite test set of reference points.

use rayon::prelude::*;

use crate::discretization::{gauss_lobatto, CellPoly, DgField};
use crate::error::{Error, Result};
use crate::model::{InvariantRegion, State, SystemKind, MEMBERSHIP_SLACK};

/// Fraction of the average `c1` that test-point values are raised to before
/// invariants are evaluated, when a point is non-physical.
const FLOOR_FRACTION: f64 = 1e-3;

const MAX_SHRINK_STEPS: usize = 200;
const SHRINK_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub enum TestSetKind {
    GaussLobatto(usize),
    Interior(f64),
    Union(Vec<TestSetKind>),
    Custom,
}

/// Sorted, deduplicated reference abscissae in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestSet {
    abscissae: Vec<f64>,
    pub kind: TestSetKind,
}

impl TestSet {
    pub fn new(mut points: Vec<f64>, kind: TestSetKind) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidConfig("empty test set".into()));
        }
        if let Some(&bad) = points.iter().find(|x| !(x.abs() <= 1.0)) {
            return Err(Error::XiOutOfRange(bad));
        }
        points.sort_by(f64::total_cmp);
        points.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        Ok(Self {
            abscissae: points,
            kind,
        })
    }

    pub fn custom(points: Vec<f64>) -> Result<Self> {
        Self::new(points, TestSetKind::Custom)
    }

    pub fn gauss_lobatto(n: usize) -> Result<Self> {
        Self::new(gauss_lobatto(n)?.nodes, TestSetKind::GaussLobatto(n))
    }

    /// `{-1, γ_t, 1}`.
    pub fn interior(gamma_t: f64) -> Result<Self> {
        Self::new(vec![-1.0, gamma_t, 1.0], TestSetKind::Interior(gamma_t))
    }

    pub fn union(sets: &[TestSet]) -> Result<Self> {
        let points = sets.iter().flat_map(|s| s.abscissae.iter().copied()).collect();
        let kinds = sets.iter().map(|s| s.kind.clone()).collect();
        Self::new(points, TestSetKind::Union(kinds))
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn len(&self) -> usize {
        self.abscissae.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissae.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimiterReport {
    pub cell_index: usize,
    pub theta: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub r_max: f64,
    pub s_min: f64,
    pub activated: bool,
}

impl LimiterReport {
    pub const CSV_HEADER: &'static str = "cell_index,theta,theta1,theta2,activated";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:.11e},{:.11e},{:.11e},{}",
            self.cell_index, self.theta, self.theta1, self.theta2, self.activated
        )
    }
}

fn invariant_extrema(poly: &CellPoly, region: &InvariantRegion, test_set: &TestSet) -> Result<(f64, f64)> {
    let mut r_max = f64::NEG_INFINITY;
    let mut s_min = f64::INFINITY;
    for &xi in test_set.abscissae() {
        let (r, s) = region.law.riemann_invariants(poly.evaluate(xi))?;
        r_max = r_max.max(r);
        s_min = s_min.min(s);
    }
    Ok((r_max, s_min))
}

/// Largest scaling that keeps `c1` at the test points above a small fraction
/// of the average, so that the invariants can be evaluated.
fn physical_scaling(poly: &CellPoly, avg: State, law_kind: SystemKind, test_set: &TestSet) -> f64 {
    let floor = match law_kind {
        SystemKind::PSystem => FLOOR_FRACTION * avg.c1,
        _ => 0.0,
    };
    let c1_min = test_set
        .abscissae()
        .iter()
        .map(|&xi| poly.evaluate(xi).c1)
        .fold(f64::INFINITY, f64::min);
    let needs = match law_kind {
        SystemKind::PSystem => c1_min <= 0.0,
        _ => c1_min < 0.0,
    };
    if needs {
        ((avg.c1 - floor) / (avg.c1 - c1_min)).clamp(0.0, 1.0)
    } else {
        1.0
    }
}

fn limited(poly: &CellPoly, avg: State, theta: f64) -> CellPoly {
    let mut p = poly.scale_modes(theta);
    let a0 = poly.average();
    p.set_mode(0, a0 + (avg - a0) * (1.0 - theta));
    p
}

fn passes(poly: &CellPoly, region: &InvariantRegion, test_set: &TestSet) -> bool {
    test_set
        .abscissae()
        .iter()
        .all(|&xi| region.contains_with_slack(poly.evaluate(xi), MEMBERSHIP_SLACK))
}

/// Limiter parameter for one cell.
///
/// Test-point values with non-physical `c1` are first pulled in by a
/// positivity-type scaling; the reported `θ₁`, `θ₂` include that factor. For
/// systems whose invariants are not convex in the conserved variables the
/// result is further reduced until the test set passes.
pub fn compute_theta(
    poly: &CellPoly,
    avg: State,
    region: &InvariantRegion,
    test_set: &TestSet,
    cell_index: usize,
) -> Result<LimiterReport> {
    let (r_margin, s_margin) = region.margins(avg)?;
    if !(r_margin > 0.0 && s_margin > 0.0) {
        if region.contains_with_slack(avg, MEMBERSHIP_SLACK) {
            // Average on the boundary: only constant-like data can be kept.
            let (r_max, s_min) = invariant_extrema(poly, region, test_set).unwrap_or((f64::NAN, f64::NAN));
            let ok = passes(poly, region, test_set);
            let theta = if ok { 1.0 } else { 0.0 };
            return Ok(LimiterReport {
                cell_index,
                theta,
                theta1: theta,
                theta2: theta,
                r_max,
                s_min,
                activated: !ok,
            });
        }
        return Err(Error::AverageOutsideInterior {
            cell: cell_index,
            r_margin,
            s_margin,
        });
    }
    let (r_bar, s_bar) = region.law.riemann_invariants(avg)?;

    let theta_v = physical_scaling(poly, avg, region.law.kind, test_set);
    let scaled = if theta_v < 1.0 {
        limited(poly, avg, theta_v)
    } else {
        *poly
    };
    let (r_max, s_min) = invariant_extrema(&scaled, region, test_set)?;

    let theta1 = if r_max > region.r0 && r_max > r_bar {
        (region.r0 - r_bar) / (r_max - r_bar)
    } else {
        1.0
    };
    let theta2 = if s_min < region.s0 && s_min < s_bar {
        (s_bar - region.s0) / (s_bar - s_min)
    } else {
        1.0
    };
    let mut theta1 = theta_v * theta1;
    let theta2 = theta_v * theta2;
    let mut theta = 1f64.min(theta1).min(theta2);

    if theta < 1.0 || region.law.kind != SystemKind::PSystem {
        let mut steps = 0;
        while !passes(&limited(poly, avg, theta), region, test_set) {
            if steps == MAX_SHRINK_STEPS {
                theta = 0.0;
                break;
            }
            theta *= SHRINK_FACTOR;
            steps += 1;
        }
        if steps > 0 {
            theta1 = theta1.min(theta);
        }
    }

    Ok(LimiterReport {
        cell_index,
        theta,
        theta1,
        theta2,
        r_max,
        s_min,
        activated: theta < 1.0,
    })
}

/// `θ w + (1 - θ) w̄`; only the modes of order ≥ 1 are scaled.
pub fn apply_limiter(poly: &CellPoly, avg: State, theta: f64) -> Result<CellPoly> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::ThetaOutOfRange(theta));
    }
    if theta == 1.0 {
        return Ok(*poly);
    }
    Ok(limited(poly, avg, theta))
}

/// Limits every cell of `field` with the same test set. Reports are returned
/// in cell order.
pub fn limit_field(
    field: &DgField,
    region: &InvariantRegion,
    test_set: &TestSet,
) -> Result<(DgField, Vec<LimiterReport>)> {
    let results: Vec<(CellPoly, LimiterReport)> = field
        .cells
        .par_iter()
        .enumerate()
        .map(|(j, poly)| {
            let avg = poly.average();
            let report = compute_theta(poly, avg, region, test_set, j)?;
            Ok((apply_limiter(poly, avg, report.theta)?, report))
        })
        .collect::<Result<_>>()?;
    let (cells, reports) = results.into_iter().unzip();
    Ok((
        DgField {
            mesh: field.mesh,
            degree: field.degree,
            cells,
        },
        reports,
    ))
}

/// `2 max{1, (s(w̄) - s0)/(r0 - r(w̄)), (r0 - r(w̄))/(s(w̄) - s0)}`.
pub fn c4_diagnostic(avg: State, region: &InvariantRegion) -> Result<f64> {
    let (a, b) = region.margins(avg)?;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::AverageOutsideInterior {
            cell: 0,
            r_margin: a,
            s_margin: b,
        });
    }
    Ok(2.0 * 1f64.max(b / a).max(a / b))
}

/// Number of test-set points of `field` outside the closed region.
pub fn test_set_violations(field: &DgField, region: &InvariantRegion, test_set: &TestSet) -> usize {
    field
        .cells
        .par_iter()
        .map(|p| {
            test_set
                .abscissae()
                .iter()
                .filter(|&&xi| !region.contains(p.evaluate(xi)))
                .count()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{project_initial, Mesh};
    use crate::model::PressureLaw;

    /// Linear data on `[0, 1]` from interpolation at `x = 1/4` and `x = 1/2`
    /// of a smooth state whose `s` crosses the region boundary.
    fn steep_cell(h: f64) -> (CellPoly, InvariantRegion) {
        let law = PressureLaw::p_system(1.0, 3.0, 1.0).unwrap();
        let sq = 2.0 * 3f64.sqrt();
        let w = |x: f64| {
            State::new(
                sq / (sq + (1.0 + h * h) * 2.0 * (x - 1.0)),
                (1.0 - h * h) * x + (h * h - 1.0) / 2.0,
            )
        };
        let mid = w(0.5);
        let quarter = w(0.25);
        let poly = CellPoly::from_modes(&[mid, (mid - quarter) * 2.0]);
        let b = (1.0 - h * h) / 2.0;
        (poly, InvariantRegion::new(law, b, b))
    }

    #[test]
    fn steep_cell_theta_values() {
        let ends = TestSet::gauss_lobatto(2).unwrap();
        let cases = [
            (0.5, 0.224_425_455_5, 0.067_461_406_6),
            (0.1, 0.551_058_855_5, 0.012_125_795_0),
            (0.01, 0.562_339_966_5, 0.000_128_471_342_8),
        ];
        for (h, t1, t2) in cases {
            let (poly, region) = steep_cell(h);
            let rep = compute_theta(&poly, poly.average(), &region, &ends, 0).unwrap();
            assert!((rep.theta1 - t1).abs() < 1e-9, "h={h}: {}", rep.theta1);
            assert!((rep.theta2 - t2).abs() / t2 < 1e-8, "h={h}: {}", rep.theta2);
            assert_eq!(rep.theta, rep.theta1.min(rep.theta2));
        }
        let (poly, region) = steep_cell(0.5);
        let rep = compute_theta(&poly, poly.average(), &region, &ends, 0).unwrap();
        assert!((rep.r_max - 3.8308).abs() < 1e-4);
        assert!((rep.s_min + 3.0808).abs() < 1e-4);
        let (rb, sb) = region.law.riemann_invariants(poly.average()).unwrap();
        assert!((rb + 0.625).abs() < 1e-12 && (sb - 0.625).abs() < 1e-12);
    }

    #[test]
    fn limited_steep_cell_passes() {
        let ends = TestSet::gauss_lobatto(2).unwrap();
        let (poly, region) = steep_cell(0.5);
        let avg = poly.average();
        let rep = compute_theta(&poly, avg, &region, &ends, 0).unwrap();
        let lim = apply_limiter(&poly, avg, rep.theta).unwrap();
        for &xi in ends.abscissae() {
            let (r, s) = region.law.riemann_invariants(lim.evaluate(xi)).unwrap();
            assert!(r <= region.r0 + 1e-12 && s >= region.s0 - 1e-12);
        }
        assert!(passes(&poly.scale_modes(rep.theta * 0.3), &region, &ends));
    }

    #[test]
    fn constant_cell_untouched() {
        let law = PressureLaw::p_system(1.0, 1.4, 1.0).unwrap();
        let region = InvariantRegion::new(law, 1.0, -1.0);
        let poly = CellPoly::constant(State::new(1.0, 0.0), 2);
        let rep = compute_theta(&poly, poly.average(), &region, &TestSet::interior(0.0).unwrap(), 3).unwrap();
        assert_eq!(rep.theta, 1.0);
        assert!(!rep.activated);
        assert_eq!(rep.cell_index, 3);
    }

    #[test]
    fn average_outside_is_rejected() {
        let law = PressureLaw::p_system(1.0, 1.4, 1.0).unwrap();
        let region = InvariantRegion::new(law, 0.0, 0.0);
        let poly = CellPoly::constant(State::new(1.0, 1.0), 1);
        let err = compute_theta(&poly, poly.average(), &region, &TestSet::gauss_lobatto(2).unwrap(), 7);
        assert!(matches!(err, Err(Error::AverageOutsideInterior { cell: 7, .. })));
    }

    #[test]
    fn average_on_boundary() {
        let law = PressureLaw::p_system(1.0, 1.4, 1.0).unwrap();
        let region = InvariantRegion::new(law, 0.0, 0.0);
        let ts = TestSet::gauss_lobatto(2).unwrap();
        let flat = CellPoly::constant(State::new(1.0, 0.0), 1);
        let rep = compute_theta(&flat, flat.average(), &region, &ts, 0).unwrap();
        assert_eq!((rep.theta, rep.activated), (1.0, false));
        let tilted = CellPoly::from_modes(&[State::new(1.0, 0.0), State::new(0.1, 0.0)]);
        let rep = compute_theta(&tilted, tilted.average(), &region, &ts, 0).unwrap();
        assert_eq!((rep.theta, rep.activated), (0.0, true));
    }

    #[test]
    fn apply_limiter_cases() {
        let poly = CellPoly::from_modes(&[State::new(1.0, 2.0), State::new(0.3, 0.1), State::new(0.05, -0.2)]);
        let avg = poly.average();
        assert_eq!(apply_limiter(&poly, avg, 1.0).unwrap(), poly);
        let half = apply_limiter(&poly, avg, 0.5).unwrap();
        assert!((half.average() - avg).max_abs() < 1e-14);
        assert_eq!(half.mode(2), poly.mode(2) * 0.5);
        assert_eq!(apply_limiter(&poly, avg, 1.5), Err(Error::ThetaOutOfRange(1.5)));
        assert!(apply_limiter(&poly, avg, f64::NAN).is_err());
    }

    #[test]
    fn near_boundary_average_is_finite() {
        let law = PressureLaw::p_system(1.0, 1.4, 1.0).unwrap();
        let avg = State::new(1.0, 0.0);
        let region = InvariantRegion::new(law, 1e-9, -1e-9);
        let poly = CellPoly::from_modes(&[avg, State::new(0.2, 0.3)]);
        let rep = compute_theta(&poly, avg, &region, &TestSet::gauss_lobatto(2).unwrap(), 0).unwrap();
        assert!(rep.theta.is_finite() && rep.theta >= 0.0 && rep.theta < 1e-6);
    }

    #[test]
    fn nonphysical_points_are_handled() {
        let law = PressureLaw::p_system(1.0, 1.4, 0.5).unwrap();
        let avg = State::new(0.6, 0.0);
        let region = InvariantRegion::new(law, 0.3, -0.3);
        let poly = CellPoly::from_modes(&[avg, State::new(0.9, 0.0)]);
        let ends = TestSet::gauss_lobatto(2).unwrap();
        let rep = compute_theta(&poly, avg, &region, &ends, 0).unwrap();
        let lim = apply_limiter(&poly, avg, rep.theta).unwrap();
        assert!(passes(&lim, &region, &ends));
    }

    #[test]
    fn shallow_water_limiting() {
        let law = PressureLaw::shallow_water(1.0).unwrap();
        let region = InvariantRegion::new(law, 2.5, -2.5);
        let avg = State::new(1.0, 0.2);
        let poly = CellPoly::from_modes(&[avg, State::new(0.6, 0.9), State::new(0.1, -0.3)]);
        let ts = TestSet::gauss_lobatto(3).unwrap();
        let rep = compute_theta(&poly, avg, &region, &ts, 0).unwrap();
        assert!(rep.activated);
        assert!(passes(&apply_limiter(&poly, avg, rep.theta).unwrap(), &region, &ts));
    }

    #[test]
    fn c4_values() {
        let law = PressureLaw::p_system(1.0, 3.0, 1.0).unwrap();
        let h: f64 = 0.3;
        let avg = State::new(1.0 + h * h / 4.0, 1.0);
        let region = InvariantRegion::new(law, 1.0, 1.0);
        assert!((c4_diagnostic(avg, &region).unwrap() - 2.0).abs() < 1e-12);

        let region = InvariantRegion::new(law, 0.5, -0.5);
        assert_eq!(c4_diagnostic(State::new(1.0, 0.0), &region).unwrap(), 2.0);

        // r0 - r̄ = 1, s̄ - s0 = h²
        let h: f64 = 0.1;
        let region = InvariantRegion::new(law, 1.0, -h * h);
        let c4 = c4_diagnostic(State::new(1.0, 0.0), &region).unwrap();
        assert!((c4 - 200.0).abs() < 1e-9);
    }

    #[test]
    fn test_set_construction() {
        let t = TestSet::union(&[TestSet::gauss_lobatto(2).unwrap(), TestSet::interior(0.2).unwrap()]).unwrap();
        assert_eq!(t.abscissae(), &[-1.0, 0.2, 1.0]);
        assert!(TestSet::custom(vec![0.0, 1.5]).is_err());
        assert!(TestSet::custom(vec![]).is_err());
    }

    fn smooth_field(n: usize, k: usize) -> (DgField, InvariantRegion) {
        let law = PressureLaw::p_system(1.0, 1.4, 1.0).unwrap();
        let mesh = Mesh::new(0.0, 2.0 * std::f64::consts::PI, n).unwrap();
        let f = project_initial(mesh, k, |x| State::new(2.0 - x.sin(), 1.0)).unwrap();
        (f, InvariantRegion::new(law, 1.0, 1.0))
    }

    #[test]
    fn smooth_field_limiting() {
        for k in 1..=2 {
            let (f, region) = smooth_field(32, k);
            let ts = TestSet::gauss_lobatto(k + 1).unwrap();
            let (lim, reports) = limit_field(&f, &region, &ts).unwrap();
            assert!(reports.iter().any(|r| r.activated));
            assert_eq!(test_set_violations(&lim, &region, &ts), 0);
            assert!(reports.iter().enumerate().all(|(j, r)| r.cell_index == j));
            for (a, b) in lim.cells.iter().zip(&f.cells) {
                assert!((a.average() - b.average()).max_abs() <= 1e-13);
            }
            let (_, again) = limit_field(&lim, &region, &ts).unwrap();
            assert!(again.iter().all(|r| r.theta > 1.0 - 1e-10));
        }
    }

    #[test]
    fn field_inside_is_bit_identical() {
        let (f, region) = smooth_field(16, 2);
        let wide = InvariantRegion::unbounded(region.law);
        let ts = TestSet::gauss_lobatto(3).unwrap();
        let (lim, reports) = limit_field(&f, &wide, &ts).unwrap();
        assert_eq!(lim, f);
        assert!(reports.iter().all(|r| !r.activated));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn cell() -> impl Strategy<Value = (CellPoly, InvariantRegion)> {
            (
                0.3f64..3.0,
                -1.0f64..1.0,
                prop::array::uniform4(-0.5f64..0.5),
                0.01f64..1.0,
                0.01f64..1.0,
                1..=2usize,
            )
                .prop_map(|(v, u, m, dr, ds, k)| {
                    let law = PressureLaw::p_system(1.0, 1.4, 1.0).unwrap();
                    let avg = State::new(v, u);
                    let (r, s) = law.riemann_invariants(avg).unwrap();
                    let mut modes = vec![avg, State::new(m[0] * v, m[1])];
                    if k == 2 {
                        modes.push(State::new(m[2] * v * 0.5, m[3]));
                    }
                    (CellPoly::from_modes(&modes), InvariantRegion::new(law, r + dr, s - ds))
                })
        }

        proptest! {
            #[test]
            fn limited_cell_is_admissible((poly, region) in cell(), frac in 0.0f64..=1.0) {
                let ts = TestSet::gauss_lobatto(poly.degree + 1).unwrap();
                let avg = poly.average();
                let rep = compute_theta(&poly, avg, &region, &ts, 0).unwrap();
                prop_assert!(rep.theta > 0.0 && rep.theta <= 1.0);
                prop_assert_eq!(rep.theta, 1f64.min(rep.theta1).min(rep.theta2));
                prop_assert_eq!(rep.activated, rep.theta < 1.0);
                let lim = apply_limiter(&poly, avg, rep.theta).unwrap();
                prop_assert!((lim.average() - avg).max_abs() <= 1e-13);
                prop_assert!(passes(&lim, &region, &ts));
                let smaller = apply_limiter(&poly, avg, rep.theta * frac).unwrap();
                prop_assert!(passes(&smaller, &region, &ts));
                let again = compute_theta(&lim, avg, &region, &ts, 0).unwrap();
                prop_assert!(again.theta > 1.0 - 1e-9);
            }
        }
    }
}
