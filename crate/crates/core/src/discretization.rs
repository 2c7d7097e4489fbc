//! Periodic uniform mesh, Legendre modal basis, quadrature and projection.
//!
//! Cell polynomials are stored in the unnormalized Legendre basis
//! `P_0 = 1, P_1 = ξ, P_2 = (3ξ² - 1)/2` on the reference cell `ξ ∈ [-1, 1]`,
//! so coefficient 0 is the cell mean and the mass matrix is diagonal with
//! entries `Δx/(2l+1)`.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::State;

pub const MAX_DEGREE: usize = 2;

const XI_SLACK: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh {
    pub x_min: f64,
    pub x_max: f64,
    pub n_cells: usize,
}

impl Mesh {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidMesh(format!(
                "need x_max > x_min (got [{x_min}, {x_max}])"
            )));
        }
        if n_cells == 0 {
            return Err(Error::InvalidMesh("need at least one cell".into()));
        }
        Ok(Self { x_min, x_max, n_cells })
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n_cells as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.dx()
    }

    pub fn left_edge(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    /// Physical coordinate of reference point `xi` in cell `j`.
    pub fn x_of(&self, j: usize, xi: f64) -> f64 {
        self.center(j) + 0.5 * self.dx() * xi
    }

    /// Periodic neighbour index `j + offset`.
    pub fn wrap(&self, j: usize, offset: isize) -> usize {
        let n = self.n_cells as isize;
        (j as isize + offset).rem_euclid(n) as usize
    }

    /// Cell index and reference coordinate of a physical point, wrapped
    /// periodically into `[x_min, x_max)`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let len = self.length();
        let s = (x - self.x_min).rem_euclid(len) / self.dx();
        let j = (s.floor() as usize).min(self.n_cells - 1);
        let xi = (2.0 * (s - j as f64) - 1.0).clamp(-1.0, 1.0);
        (j, xi)
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p_prev, mut p) = (1.0, x);
    for m in 1..n {
        let m = m as f64;
        let next = ((2.0 * m + 1.0) * x * p - m * p_prev) / (m + 1.0);
        p_prev = p;
        p = next;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        let sign = if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 };
        sign * 0.5 * nf * (nf + 1.0)
    } else {
        nf * (p_prev - x * p) / (1.0 - x * x)
    };
    (p, dp)
}

/// Basis value `P_l(ξ)` for `l ≤ 2`.
#[inline]
pub fn basis(l: usize, xi: f64) -> f64 {
    match l {
        0 => 1.0,
        1 => xi,
        2 => 1.5 * xi * xi - 0.5,
        _ => legendre(l, xi).0,
    }
}

/// `dP_l/dξ`.
#[inline]
pub fn basis_derivative(l: usize, xi: f64) -> f64 {
    match l {
        0 => 0.0,
        1 => 1.0,
        2 => 3.0 * xi,
        _ => legendre(l, xi).1,
    }
}

/// `d²P_l/dξ²`.
#[inline]
pub fn basis_second_derivative(l: usize, _xi: f64) -> f64 {
    match l {
        2 => 3.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureKind {
    GaussLegendre(usize),
    GaussLobatto(usize),
}

/// Quadrature rule on `[-1, 1]`. Gauss–Legendre weights sum to 2,
/// Gauss–Lobatto weights are normalized to sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub kind: QuadratureKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `∫_{-1}^{1} f(ξ) dξ`, independent of the weight normalization.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let scale = 2.0 / self.total_weight();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum::<f64>()
            * scale
    }

    /// Same rule with weights summing to 1.
    pub fn normalized(mut self) -> Self {
        let t = self.total_weight();
        self.weights.iter_mut().for_each(|w| *w /= t);
        self
    }

    /// Exactness degree of the rule.
    pub fn exactness(&self) -> usize {
        match self.kind {
            QuadratureKind::GaussLegendre(n) => 2 * n - 1,
            QuadratureKind::GaussLobatto(n) => 2 * n - 3,
        }
    }
}

pub fn gauss_legendre(n: usize) -> Result<Quadrature> {
    if n == 0 {
        return Err(Error::InvalidOrder(n));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = -(std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    Ok(Quadrature {
        kind: QuadratureKind::GaussLegendre(n),
        nodes,
        weights,
    })
}

/// `N`-point Gauss–Lobatto rule with weights summing to 1; end weights are
/// `1/(N(N-1))`.
pub fn gauss_lobatto(n: usize) -> Result<Quadrature> {
    if n < 2 {
        return Err(Error::InvalidOrder(n));
    }
    let m = n - 1;
    let mf = m as f64;
    let mut nodes = vec![0.0; n];
    nodes[0] = -1.0;
    nodes[m] = 1.0;
    for (i, node) in nodes.iter_mut().enumerate().take(m).skip(1) {
        let mut x = -(std::f64::consts::PI * i as f64 / mf).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, x);
            let d2p = (2.0 * x * dp - mf * (mf + 1.0) * p) / (1.0 - x * x);
            let dx = dp / d2p;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        *node = x;
    }
    let nf = n as f64;
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = legendre(m, x);
            1.0 / (nf * (nf - 1.0) * p * p)
        })
        .collect();
    Ok(Quadrature {
        kind: QuadratureKind::GaussLobatto(n),
        nodes,
        weights,
    })
}

/// One cell's polynomial, both components, in the Legendre basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPoly {
    pub degree: usize,
    pub c1: [f64; MAX_DEGREE + 1],
    pub c2: [f64; MAX_DEGREE + 1],
}

impl CellPoly {
    pub fn constant(w: State, degree: usize) -> Self {
        let mut p = Self {
            degree,
            c1: [0.0; MAX_DEGREE + 1],
            c2: [0.0; MAX_DEGREE + 1],
        };
        p.c1[0] = w.c1;
        p.c2[0] = w.c2;
        p
    }

    pub fn from_modes(modes: &[State]) -> Self {
        assert!(
            !modes.is_empty() && modes.len() <= MAX_DEGREE + 1,
            "polynomial degree out of range"
        );
        let mut p = Self::constant(State::ZERO, modes.len() - 1);
        for (l, m) in modes.iter().enumerate() {
            p.set_mode(l, *m);
        }
        p
    }

    pub fn mode(&self, l: usize) -> State {
        State::new(self.c1[l], self.c2[l])
    }

    pub fn set_mode(&mut self, l: usize, w: State) {
        self.c1[l] = w.c1;
        self.c2[l] = w.c2;
    }

    pub fn average(&self) -> State {
        self.mode(0)
    }

    pub fn evaluate(&self, xi: f64) -> State {
        let mut w = State::ZERO;
        for l in 0..=self.degree {
            w += self.mode(l) * basis(l, xi);
        }
        w
    }

    /// `dw/dξ`.
    pub fn derivative(&self, xi: f64) -> State {
        let mut w = State::ZERO;
        for l in 1..=self.degree {
            w += self.mode(l) * basis_derivative(l, xi);
        }
        w
    }

    /// `d²w/dξ²`.
    pub fn second_derivative(&self, xi: f64) -> State {
        let mut w = State::ZERO;
        for l in 2..=self.degree {
            w += self.mode(l) * basis_second_derivative(l, xi);
        }
        w
    }

    /// Scales every mode of order ≥ 1 by `theta`.
    pub fn scale_modes(&self, theta: f64) -> Self {
        let mut p = *self;
        for l in 1..=self.degree {
            p.c1[l] *= theta;
            p.c2[l] *= theta;
        }
        p
    }

    pub fn axpy(&mut self, a: f64, other: &CellPoly) {
        for l in 0..=self.degree {
            self.c1[l] += a * other.c1[l];
            self.c2[l] += a * other.c2[l];
        }
    }
}

/// Piecewise polynomial solution on a periodic mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct DgField {
    pub mesh: Mesh,
    pub degree: usize,
    pub cells: Vec<CellPoly>,
}

impl DgField {
    pub fn zeros(mesh: Mesh, degree: usize) -> Result<Self> {
        Self::constant(mesh, degree, State::ZERO)
    }

    pub fn constant(mesh: Mesh, degree: usize, w: State) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::InvalidConfig(format!(
                "polynomial degree {degree} exceeds {MAX_DEGREE}"
            )));
        }
        Ok(Self {
            mesh,
            degree,
            cells: vec![CellPoly::constant(w, degree); mesh.n_cells],
        })
    }

    pub fn from_cells(mesh: Mesh, cells: Vec<CellPoly>) -> Result<Self> {
        if cells.len() != mesh.n_cells {
            return Err(Error::InvalidMesh(format!(
                "{} cell polynomials for {} cells",
                cells.len(),
                mesh.n_cells
            )));
        }
        let degree = cells.first().map_or(0, |c| c.degree);
        if degree > MAX_DEGREE || cells.iter().any(|c| c.degree != degree) {
            return Err(Error::InvalidConfig("cell polynomials must share a degree ≤ 2".into()));
        }
        Ok(Self { mesh, degree, cells })
    }

    pub fn n_cells(&self) -> usize {
        self.mesh.n_cells
    }

    pub fn cell(&self, j: usize) -> &CellPoly {
        &self.cells[j]
    }

    pub fn evaluate(&self, j: usize, xi: f64) -> Result<State> {
        if !(xi.abs() <= 1.0 + XI_SLACK) {
            return Err(Error::XiOutOfRange(xi));
        }
        Ok(self.cells[j].evaluate(xi))
    }

    /// Value at a physical point, wrapped periodically.
    pub fn evaluate_at(&self, x: f64) -> State {
        let (j, xi) = self.mesh.locate(x);
        self.cells[j].evaluate(xi)
    }

    /// `w⁺_{j-1/2}`, the trace of cell `j` at its left edge.
    pub fn trace_left(&self, j: usize) -> State {
        self.cells[j].evaluate(-1.0)
    }

    /// `w⁻_{j+1/2}`, the trace of cell `j` at its right edge.
    pub fn trace_right(&self, j: usize) -> State {
        self.cells[j].evaluate(1.0)
    }

    /// Physical derivative `w_x`.
    pub fn derivative_x(&self, j: usize, xi: f64) -> State {
        self.cells[j].derivative(xi) * (2.0 / self.mesh.dx())
    }

    /// Physical second derivative `w_xx`.
    pub fn second_derivative_x(&self, j: usize, xi: f64) -> State {
        let s = 2.0 / self.mesh.dx();
        self.cells[j].second_derivative(xi) * (s * s)
    }

    pub fn cell_average(&self, j: usize) -> State {
        self.cells[j].average()
    }

    pub fn cell_averages(&self) -> Vec<State> {
        self.cells.iter().map(CellPoly::average).collect()
    }

    /// `∫ w dx` over the whole domain.
    pub fn totals(&self) -> State {
        let mut t = State::ZERO;
        for c in &self.cells {
            t += c.average();
        }
        t * self.mesh.dx()
    }

    /// Serialize as text: a header `n_cells degree x_min x_max`, then one line
    /// per cell with the `c1` modes followed by the `c2` modes.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} {} {:.16e} {:.16e}",
            self.mesh.n_cells, self.degree, self.mesh.x_min, self.mesh.x_max
        );
        for c in &self.cells {
            let coeffs = c.c1[..=self.degree]
                .iter()
                .chain(&c.c2[..=self.degree])
                .map(|v| format!("{v:.16e}"))
                .collect::<Vec<_>>();
            let _ = writeln!(out, "{}", coeffs.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let n_cells: usize = parse_token(parts[0])?;
        let degree: usize = parse_token(parts[1])?;
        let x_min: f64 = parse_token(parts[2])?;
        let x_max: f64 = parse_token(parts[3])?;
        if degree > MAX_DEGREE {
            return Err(Error::Parse(format!("degree {degree} exceeds {MAX_DEGREE}")));
        }
        let mesh = Mesh::new(x_min, x_max, n_cells).map_err(|e| Error::Parse(e.to_string()))?;
        let mut cells = Vec::with_capacity(n_cells);
        for (j, line) in lines.enumerate() {
            let vals = line
                .split_whitespace()
                .map(parse_token::<f64>)
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != 2 * (degree + 1) {
                return Err(Error::Parse(format!(
                    "cell {j}: expected {} coefficients, found {}",
                    2 * (degree + 1),
                    vals.len()
                )));
            }
            let mut p = CellPoly::constant(State::ZERO, degree);
            p.c1[..=degree].copy_from_slice(&vals[..=degree]);
            p.c2[..=degree].copy_from_slice(&vals[degree + 1..]);
            cells.push(p);
        }
        if cells.len() != n_cells {
            return Err(Error::Parse(format!(
                "expected {n_cells} cell lines, found {}",
                cells.len()
            )));
        }
        Self::from_cells(mesh, cells)
    }
}

fn parse_token<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("cannot parse `{s}`")))
}

/// L² projection onto piecewise polynomials of degree `degree`, using
/// `degree + 3` Gauss points per cell.
pub fn project_initial<F>(mesh: Mesh, degree: usize, w0: F) -> Result<DgField>
where
    F: Fn(f64) -> State + Sync,
{
    project_with_points(mesh, degree, degree + 3, w0)
}

pub fn project_with_points<F>(mesh: Mesh, degree: usize, n_points: usize, w0: F) -> Result<DgField>
where
    F: Fn(f64) -> State + Sync,
{
    if degree > MAX_DEGREE {
        return Err(Error::InvalidConfig(format!(
            "polynomial degree {degree} exceeds {MAX_DEGREE}"
        )));
    }
    let q = gauss_legendre(n_points)?;
    let cells = (0..mesh.n_cells)
        .into_par_iter()
        .map(|j| {
            let vals: Vec<State> = q.nodes.iter().map(|&xi| w0(mesh.x_of(j, xi))).collect();
            let mut p = CellPoly::constant(State::ZERO, degree);
            for l in 0..=degree {
                let mut m = State::ZERO;
                for ((&xi, &wt), v) in q.nodes.iter().zip(&q.weights).zip(&vals) {
                    m += *v * (wt * basis(l, xi));
                }
                p.set_mode(l, m * (0.5 * (2 * l + 1) as f64));
            }
            p
        })
        .collect();
    DgField::from_cells(mesh, cells)
}

/// Positive-weight decompositions of the cell average into point values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AverageRule {
    /// `N`-point Gauss–Lobatto rule.
    Lobatto(usize),
    /// Three points `{-1, γ_t, 1}` with `|γ_t| ≤ 1/3`.
    Interior3(f64),
}

/// Abscissae and weights of an average rule, checked for exactness on
/// polynomials of degree `degree`.
pub fn average_rule_weights(rule: AverageRule, degree: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    match rule {
        AverageRule::Lobatto(n) => {
            if n < 2 || 2 * n < degree + 3 {
                return Err(Error::InvalidDecomposition(format!(
                    "{n}-point Lobatto rule is not exact for degree {degree}"
                )));
            }
            let q = gauss_lobatto(n)?;
            Ok((q.nodes, q.weights))
        }
        AverageRule::Interior3(g) => {
            if degree > 2 {
                return Err(Error::InvalidDecomposition(format!(
                    "three-point rule is not exact for degree {degree}"
                )));
            }
            if !(g.abs() <= 1.0 / 3.0 + 1e-15) {
                return Err(Error::InvalidDecomposition(format!(
                    "interior abscissa {g} gives a negative weight"
                )));
            }
            let w = vec![
                (1.0 + 3.0 * g) / (6.0 * (1.0 + g)),
                2.0 / (3.0 * (1.0 - g * g)),
                (1.0 - 3.0 * g) / (6.0 * (1.0 - g)),
            ];
            if w.iter().any(|&x| x < 0.0) {
                return Err(Error::InvalidDecomposition(format!(
                    "interior abscissa {g} gives a negative weight"
                )));
            }
            Ok((vec![-1.0, g, 1.0], w))
        }
    }
}

/// Cell average of cell `j` written as a convex combination of point values.
pub fn cell_average_decomposition(field: &DgField, j: usize, rule: AverageRule) -> Result<Vec<(f64, State)>> {
    let (nodes, weights) = average_rule_weights(rule, field.degree)?;
    Ok(weights
        .into_iter()
        .zip(nodes)
        .map(|(w, xi)| (w, field.cells[j].evaluate(xi)))
        .collect())
}
