//! Discrete-time LQR that returns the arm to a fixed target posture.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plant and cost description, matrices stored row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LqrSpec {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    /// Per-input magnitude bound applied to every command.
    pub u_max: Vec<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

fn diag(n: usize, v: f64) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { v } else { 0.0 }).collect()).collect()
}

impl LqrSpec {
    /// Per-joint integrator `x' = x + u` with `Q = I`, `R = r I`.
    pub fn integrator(joints: usize, r: f64, u_max: f64) -> Self {
        Self {
            a: diag(joints, 1.0),
            b: diag(joints, 1.0),
            q: diag(joints, 1.0),
            r: diag(joints, r),
            u_max: vec![u_max; joints],
            tol: 1e-12,
            max_iter: 10_000,
        }
    }

    pub fn states(&self) -> usize {
        self.a.len()
    }

    pub fn inputs(&self) -> usize {
        self.b.first().map_or(0, Vec::len)
    }
}

impl Default for LqrSpec {
    fn default() -> Self {
        Self::integrator(3, 10.0, 0.25)
    }
}

pub fn to_dmatrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Err(Error::Invalid(format!("matrix `{name}` is empty")));
    }
    if let Some(bad) = rows.iter().find(|row| row.len() != c) {
        return Err(Error::shape(format!("matrix `{name}` row"), c, bad.len()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn riccati_map(p: &DMatrix<f64>, a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let bt_p = b.transpose() * p;
    let s = r + &bt_p * b;
    let s_inv = s
        .try_inverse()
        .ok_or_else(|| Error::Invalid("R + BᵀPB is singular".into()))?;
    let k = s_inv * (&bt_p * a);
    let next = q + a.transpose() * p * a - a.transpose() * p * b * &k;
    Ok((next, k))
}

/// Solves `P = Q + AᵀPA − AᵀPB (R + BᵀPB)⁻¹ BᵀPA` by fixed-point iteration
/// from `P = Q`; returns `(P, K)` with `K = (R + BᵀPB)⁻¹ BᵀPA`.
pub fn solve_dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n {
        return Err(Error::shape("A", format!("{n}x{n}"), format!("{}x{}", n, a.ncols())));
    }
    if b.nrows() != n {
        return Err(Error::shape("B rows", n, b.nrows()));
    }
    if q.shape() != (n, n) {
        return Err(Error::shape("Q", format!("{n}x{n}"), format!("{:?}", q.shape())));
    }
    if r.shape() != (m, m) {
        return Err(Error::shape("R", format!("{m}x{m}"), format!("{:?}", r.shape())));
    }
    if r.clone().cholesky().is_none() {
        return Err(Error::Invalid("R must be symmetric positive definite".into()));
    }
    let mut p = q.clone();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let (next, _) = riccati_map(&p, a, b, q, r)?;
        residual = (&next - &p).norm();
        p = next;
        if !residual.is_finite() {
            break;
        }
        if residual < tol {
            let (_, k) = riccati_map(&p, a, b, q, r)?;
            return Ok((p, k));
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqrPlant {
    pub spec: LqrSpec,
    /// Convergence target in scaled joint units.
    pub target: Vec<f64>,
    solution: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl LqrPlant {
    pub fn new(spec: LqrSpec, target: Vec<f64>) -> Result<Self> {
        if target.len() != spec.states() {
            return Err(Error::shape("LQR target", spec.states(), target.len()));
        }
        if spec.u_max.len() != spec.inputs() {
            return Err(Error::shape("LQR u_max", spec.inputs(), spec.u_max.len()));
        }
        if spec.u_max.iter().any(|u| !(*u > 0.0)) {
            return Err(Error::Invalid("u_max entries must be > 0".into()));
        }
        Ok(Self {
            spec,
            target,
            solution: None,
        })
    }

    pub fn solve(&mut self) -> Result<()> {
        let s = &self.spec;
        let sol = solve_dare(
            &to_dmatrix(&s.a, "A")?,
            &to_dmatrix(&s.b, "B")?,
            &to_dmatrix(&s.q, "Q")?,
            &to_dmatrix(&s.r, "R")?,
            s.tol,
            s.max_iter,
        )?;
        self.solution = Some(sol);
        Ok(())
    }

    pub fn solved(spec: LqrSpec, target: Vec<f64>) -> Result<Self> {
        let mut p = Self::new(spec, target)?;
        p.solve()?;
        Ok(p)
    }

    pub fn is_solved(&self) -> bool {
        self.solution.is_some()
    }

    pub fn cost_to_go(&self) -> Result<&DMatrix<f64>> {
        self.solution.as_ref().map(|s| &s.0).ok_or(Error::UnsolvedPlant)
    }

    pub fn gain(&self) -> Result<&DMatrix<f64>> {
        self.solution.as_ref().map(|s| &s.1).ok_or(Error::UnsolvedPlant)
    }

    /// `clamp(−K (m − m*), ±u_max)` per input.
    pub fn command(&self, m: &[f64]) -> Result<Vec<f64>> {
        let k = self.gain()?;
        if m.len() != self.target.len() {
            return Err(Error::shape("lqr_command: posture", self.target.len(), m.len()));
        }
        let err: Vec<f64> = m.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        Ok((0..k.nrows())
            .map(|i| {
                let u: f64 = 0.0 - (0..k.ncols()).map(|j| k[(i, j)] * err[j]).sum::<f64>();
                u.clamp(-self.spec.u_max[i], self.spec.u_max[i])
            })
            .collect())
    }

    /// `(m − m*)ᵀ P (m − m*)`.
    pub fn lyapunov(&self, m: &[f64]) -> Result<f64> {
        let p = self.cost_to_go()?;
        let e: Vec<f64> = m.iter().zip(&self.target).map(|(a, b)| a - b).collect();
        let mut v = 0.0;
        for i in 0..e.len() {
            for j in 0..e.len() {
                v += e[i] * p[(i, j)] * e[j];
            }
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(a: f64, b: f64, q: f64, r: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let m = |v| DMatrix::from_element(1, 1, v);
        solve_dare(&m(a), &m(b), &m(q), &m(r), 1e-13, 10_000).unwrap()
    }

    #[test]
    fn golden_ratio_plant() {
        let (p, k) = scalar(1.0, 1.0, 1.0, 1.0);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p[(0, 0)] - phi).abs() < 1e-9);
        assert!((k[(0, 0)] - (phi - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn dead_state_plant() {
        let (p, k) = scalar(0.0, 1.0, 1.0, 1.0);
        assert!((p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(k[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn non_convergence_reports_residual() {
        let m = |v| DMatrix::from_element(1, 1, v);
        let err = solve_dare(&m(1.0), &m(1.0), &m(1.0), &m(1.0), 1e-12, 2).unwrap_err();
        assert!(matches!(err, Error::NotConverged { iterations: 2, residual } if residual > 0.0));
    }

    #[test]
    fn command_semantics() {
        let mut spec = LqrSpec::integrator(1, 1.0, f64::MAX);
        let plant = LqrPlant::solved(spec.clone(), vec![0.0]).unwrap();
        assert_eq!(plant.command(&[0.0]).unwrap(), vec![0.0]);
        assert!((plant.command(&[1.0]).unwrap()[0] + 0.618_033_988_7).abs() < 1e-9);
        spec.u_max = vec![0.1];
        let clamped = LqrPlant::solved(spec, vec![0.0]).unwrap();
        assert_eq!(clamped.command(&[10.0]).unwrap(), vec![-0.1]);
    }

    #[test]
    fn unsolved_plant_errors() {
        let plant = LqrPlant::new(LqrSpec::default(), vec![0.0; 3]).unwrap();
        assert!(matches!(plant.command(&[0.0; 3]), Err(Error::UnsolvedPlant)));
    }

    #[test]
    fn lyapunov_decreases_along_rollout() {
        let plant = LqrPlant::solved(LqrSpec::default(), vec![0.1, -0.2, 0.3]).unwrap();
        let mut m = vec![0.9, 0.9, -0.9];
        let mut v = plant.lyapunov(&m).unwrap();
        for _ in 0..60 {
            let u = plant.command(&m).unwrap();
            for (x, du) in m.iter_mut().zip(&u) {
                *x += du;
            }
            let next = plant.lyapunov(&m).unwrap();
            assert!(next <= v);
            v = next;
        }
        assert!(v < 1e-6);
    }
}
