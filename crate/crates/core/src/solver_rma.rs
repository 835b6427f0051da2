//! Dirichlet problem `det D²ψ = ρ`, `ψ = 0` on the boundary, on an
//! interval or a Euclidean disk, together with the ABP and interior
//! gradient bounds for convex solutions.
//!
//! On an interval the equation is linear and is solved by the three-point
//! scheme, which is exact for quadratics. On a disk the unknown is
//! collocated on a polar grid: Chebyshev points on the full diameter
//! `[-R, R]` (odd order, so the centre is not a node) times equispaced
//! angles, with the parity `ψ(-r, θ) = ψ(r, θ + π)` folding the diameter
//! onto `r > 0`. Newton's method with dense LU solves the collocated
//! equations; convexity is kept by damping.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Volume of the unit ball in `R^m`.
pub fn ball_volume(m: usize) -> f64 {
    if m.is_multiple_of(2) {
        let k = m / 2;
        PI.powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>()
    } else {
        let k = (m - 1) / 2;
        let odd_fact: f64 = (0..=k).map(|i| (2 * i + 1) as f64).product();
        2f64.powi(k as i32 + 1) * PI.powi(k as i32) / odd_fact
    }
}

/// Gauss-Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(count: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let jac = DMatrix::from_fn(count, count, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..count)
        .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let half = 0.5 * (b - a);
    let nodes = pairs.iter().map(|p| a + half * (p.0 + 1.0)).collect();
    let weights = pairs.iter().map(|p| half * p.1).collect();
    (nodes, weights)
}

fn chebyshev_points(order: usize) -> Vec<f64> {
    (0..=order).map(|j| (PI * j as f64 / order as f64).cos()).collect()
}

fn chebyshev_matrix(order: usize) -> DMatrix<f64> {
    let x = chebyshev_points(order);
    let c = |j: usize| if j == 0 || j == order { 2.0 } else { 1.0 };
    let mut d = DMatrix::zeros(order + 1, order + 1);
    for i in 0..=order {
        for j in 0..=order {
            if i != j {
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[(i, j)] = c(i) / c(j) * sign / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=order {
        let s: f64 = (0..=order).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    d
}

fn fourier_matrices(m: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let h = 2.0 * PI / m as f64;
    let mut d1 = DMatrix::zeros(m, m);
    let mut d2 = DMatrix::zeros(m, m);
    for k in 0..m {
        for l in 0..m {
            let sign = if (k + m - l).is_multiple_of(2) { 1.0 } else { -1.0 };
            if k == l {
                d2[(k, l)] = -PI * PI / (3.0 * h * h) - 1.0 / 6.0;
            } else {
                let t = 0.5 * (k as f64 - l as f64) * h;
                d1[(k, l)] = 0.5 * sign / t.tan();
                d2[(k, l)] = -0.5 * sign / t.sin().powi(2);
            }
        }
    }
    (d1, d2)
}

/// Barycentric interpolation weights for `chebyshev_points(order)`.
fn chebyshev_barycentric(order: usize, x: &[f64], at: f64) -> Vec<f64> {
    let w = |j: usize| {
        let s = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        if j == 0 || j == order {
            0.5 * s
        } else {
            s
        }
    };
    if let Some(j) = x.iter().position(|&xj| xj == at) {
        let mut out = vec![0.0; x.len()];
        out[j] = 1.0;
        return out;
    }
    let terms: Vec<f64> = (0..=order).map(|j| w(j) / (at - x[j])).collect();
    let total: f64 = terms.iter().sum();
    terms.into_iter().map(|t| t / total).collect()
}

/// Node set on the closed ball `B(0, R)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BallMesh {
    /// `intervals + 1` equispaced nodes on `[-R, R]`.
    Interval { radius: f64, intervals: usize },
    /// Polar collocation grid. `radial_order` is odd; nodes are the
    /// `(radial_order + 1) / 2` Chebyshev radii in `(0, R]` times
    /// `angular` equispaced angles.
    Disk { radius: f64, radial_order: usize, angular: usize },
}

impl BallMesh {
    pub fn interval(radius: f64, intervals: usize) -> Result<Self> {
        if !(radius > 0.0) || intervals < 2 {
            return Err(Error::InvalidGrid("interval mesh needs R > 0 and at least 2 cells".into()));
        }
        Ok(Self::Interval { radius, intervals })
    }

    pub fn disk(radius: f64, radial_order: usize, angular: usize) -> Result<Self> {
        if !(radius > 0.0) || radial_order < 5 || radial_order.is_multiple_of(2) || angular < 4 || angular % 2 == 1 {
            return Err(Error::InvalidGrid(
                "disk mesh needs R > 0, odd radial order >= 5 and an even angular count >= 4".into(),
            ));
        }
        Ok(Self::Disk { radius, radial_order, angular })
    }

    pub fn real_dim(&self) -> usize {
        match self {
            Self::Interval { .. } => 1,
            Self::Disk { .. } => 2,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            Self::Interval { radius, .. } | Self::Disk { radius, .. } => radius,
        }
    }

    /// Number of rings including the boundary ring (disk only).
    fn rings(&self) -> usize {
        match *self {
            Self::Disk { radial_order, .. } => radial_order.div_ceil(2),
            Self::Interval { .. } => 0,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Self::Interval { intervals, .. } => intervals + 1,
            Self::Disk { angular, .. } => self.rings() * angular,
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Radii of the disk rings, outermost first.
    pub fn ring_radii(&self) -> Vec<f64> {
        match *self {
            Self::Disk { radius, radial_order, .. } => {
                chebyshev_points(radial_order)[..self.rings()].iter().map(|x| radius * x).collect()
            }
            Self::Interval { .. } => Vec::new(),
        }
    }

    /// Cartesian coordinates of every node.
    pub fn points(&self) -> Vec<Vec<f64>> {
        match *self {
            Self::Interval { radius, intervals } => {
                (0..=intervals).map(|i| vec![-radius + 2.0 * radius * i as f64 / intervals as f64]).collect()
            }
            Self::Disk { angular, .. } => {
                let radii = self.ring_radii();
                let mut out = Vec::with_capacity(self.len());
                for r in radii {
                    for k in 0..angular {
                        let t = 2.0 * PI * k as f64 / angular as f64;
                        out.push(vec![r * t.cos(), r * t.sin()]);
                    }
                }
                out
            }
        }
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        match *self {
            Self::Interval { intervals, .. } => node == 0 || node == intervals,
            Self::Disk { angular, .. } => node < angular,
        }
    }

    /// `∫ f dx` over the ball for `f` sampled at every node: trapezoid
    /// rule on the interval, Gauss-Legendre in `r` on the spectral
    /// interpolant along each diameter and the trapezoid rule in `θ` on the
    /// disk.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        match *self {
            Self::Interval { radius, intervals } => {
                let h = 2.0 * radius / intervals as f64;
                h * (f[1..intervals].iter().sum::<f64>() + 0.5 * (f[0] + f[intervals]))
            }
            Self::Disk { radius, radial_order, angular } => {
                let rings = self.rings();
                let cheb = chebyshev_points(radial_order);
                let (qr, qw) = gauss_legendre(radial_order + 1, 0.0, radius);
                let rows: Vec<Vec<f64>> =
                    qr.iter().map(|r| chebyshev_barycentric(radial_order, &cheb, r / radius)).collect();
                let mut total = 0.0;
                for k in 0..angular {
                    for (q, row) in rows.iter().enumerate() {
                        let v: f64 = (0..=radial_order)
                            .map(|j| row[j] * diameter_value(f, rings, angular, j, radial_order, k))
                            .sum();
                        total += qr[q] * qw[q] * v;
                    }
                }
                total * 2.0 * PI / angular as f64
            }
        }
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.points().iter().map(|p| f(p)).collect()
    }
}

/// Values on a [`BallMesh`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallField {
    pub mesh: BallMesh,
    pub values: Vec<f64>,
}

impl BallField {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Value at an arbitrary point of the ball by the mesh's interpolant.
    pub fn value_at(&self, x: &[f64]) -> f64 {
        match self.mesh {
            BallMesh::Interval { radius, intervals } => {
                let h = 2.0 * radius / intervals as f64;
                let t = ((x[0] + radius) / h).clamp(0.0, intervals as f64);
                let i = (t.floor() as usize).min(intervals - 1);
                let f = t - i as f64;
                (1.0 - f) * self.values[i] + f * self.values[i + 1]
            }
            BallMesh::Disk { radius, radial_order, angular } => {
                let r = x[0].hypot(x[1]);
                let theta = x[1].atan2(x[0]);
                let cheb = chebyshev_points(radial_order);
                let weights = chebyshev_barycentric(radial_order, &cheb, r / radius);
                let rings = self.mesh.rings();
                let along: Vec<f64> = (0..angular)
                    .map(|k| {
                        (0..=radial_order)
                            .map(|j| weights[j] * diameter_value(&self.values, rings, angular, j, radial_order, k))
                            .sum()
                    })
                    .collect();
                trig_interpolate(&along, theta)
            }
        }
    }
}

/// Value at Chebyshev index `j` on the diameter through angle index `k`.
fn diameter_value(values: &[f64], rings: usize, angular: usize, j: usize, order: usize, k: usize) -> f64 {
    if j < rings {
        values[j * angular + k]
    } else {
        values[(order - j) * angular + (k + angular / 2) % angular]
    }
}

fn trig_interpolate(samples: &[f64], theta: f64) -> f64 {
    let m = samples.len();
    let h = 2.0 * PI / m as f64;
    let mut total = 0.0;
    for (k, &v) in samples.iter().enumerate() {
        let t = theta - k as f64 * h;
        let s = (0.5 * t).sin();
        let w = if s.abs() < 1e-14 {
            1.0
        } else {
            (0.5 * m as f64 * t).sin() * (0.5 * t).cos() / (m as f64 * s)
        };
        total += w * v;
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RmaOptions {
    /// Residual tolerance relative to `max(1, max ρ)`.
    pub tol: f64,
    pub max_newton: usize,
    pub continuation: Vec<f64>,
    pub max_halvings: usize,
    pub max_refinements: usize,
}

impl Default for RmaOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_newton: 40, continuation: vec![0.25, 0.5, 0.75, 1.0], max_halvings: 30, max_refinements: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexSolution {
    pub psi: BallField,
    pub rho: Vec<f64>,
    /// Smallest eigenvalue of `D²ψ` over interior nodes.
    pub convexity_margin: f64,
    pub boundary_residual: f64,
    /// `max |det D²ψ - ρ|` over interior nodes.
    pub residual: f64,
    /// `∫ ρ dx`.
    pub mass: f64,
    /// `∫ det D²ψ dx`.
    pub hessian_mass: f64,
    pub newton_iterations: usize,
    /// Newton steps shortened to keep the iterate convex.
    pub damped_steps: usize,
}

/// Solves `det D²ψ = ρ` with zero boundary values; `rho` is sampled at
/// every mesh node.
pub fn solve_rma(mesh: &BallMesh, rho: &[f64], opts: &RmaOptions) -> Result<ConvexSolution> {
    if rho.len() != mesh.len() {
        return Err(Error::InvalidArgument(format!("ρ has {} samples for {} nodes", rho.len(), mesh.len())));
    }
    if let Some(i) = rho.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::Domain(format!("ρ must be positive and finite, node {i} holds {}", rho[i])));
    }
    match *mesh {
        BallMesh::Interval { radius, intervals } => Ok(solve_interval(mesh, radius, intervals, rho)),
        BallMesh::Disk { .. } => DiskOperators::new(mesh).solve(mesh, rho, opts),
    }
}

fn solve_interval(mesh: &BallMesh, radius: f64, intervals: usize, rho: &[f64]) -> ConvexSolution {
    let h = 2.0 * radius / intervals as f64;
    let inner = intervals - 1;
    // Thomas algorithm for (ψ_{i-1} - 2ψ_i + ψ_{i+1}) / h² = ρ_i.
    let rhs: Vec<f64> = (1..intervals).map(|i| h * h * rho[i]).collect();
    let mut c = vec![0.0; inner];
    let mut d = vec![0.0; inner];
    for i in 0..inner {
        let denom = -2.0 - if i > 0 { c[i - 1] } else { 0.0 };
        c[i] = 1.0 / denom;
        d[i] = (rhs[i] - if i > 0 { d[i - 1] } else { 0.0 }) / denom;
    }
    let mut x = vec![0.0; inner];
    for i in (0..inner).rev() {
        x[i] = d[i] - if i + 1 < inner { c[i] * x[i + 1] } else { 0.0 };
    }
    let mut values = vec![0.0; intervals + 1];
    values[1..intervals].copy_from_slice(&x);
    let second: Vec<f64> =
        (1..intervals).map(|i| (values[i - 1] - 2.0 * values[i] + values[i + 1]) / (h * h)).collect();
    let residual = second.iter().zip(&rho[1..intervals]).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let margin = second.iter().copied().fold(f64::INFINITY, f64::min);
    let mass = h * rho[1..intervals].iter().sum::<f64>();
    let hessian_mass = h * second.iter().sum::<f64>();
    ConvexSolution {
        psi: BallField { mesh: mesh.clone(), values },
        rho: rho.to_vec(),
        convexity_margin: margin,
        boundary_residual: 0.0,
        residual,
        mass,
        hessian_mass,
        newton_iterations: 0,
        damped_steps: 0,
    }
}

/// Dense collocation operators on the polar grid.
struct DiskOperators {
    rings: usize,
    angular: usize,
    radius: f64,
    /// Ring radii, outermost (boundary) first.
    radii: Vec<f64>,
    /// Radial first and second derivatives: all rings x interior unknowns.
    dr: DMatrix<f64>,
    drr: DMatrix<f64>,
    /// Angular derivatives: interior x interior.
    dt: DMatrix<f64>,
    dtt: DMatrix<f64>,
}

struct DiskState {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    det: Vec<f64>,
    min_eig: f64,
}

impl DiskOperators {
    fn new(mesh: &BallMesh) -> Self {
        let BallMesh::Disk { radius, radial_order, angular } = *mesh else { unreachable!() };
        let rings = mesh.rings();
        let inner = rings - 1;
        let d = chebyshev_matrix(radial_order);
        let d2 = &d * &d;
        let scale = 1.0 / radius;
        let total = rings * angular;
        let unknowns = inner * angular;
        let mut dr = DMatrix::zeros(total, unknowns);
        let mut drr = DMatrix::zeros(total, unknowns);
        let half = angular / 2;
        for i in 0..rings {
            for l in 1..rings {
                // Same-direction column l, opposite-direction column order - l.
                let (e1, e2) = (d[(i, l)], d[(i, radial_order - l)]);
                let (f1, f2) = (d2[(i, l)], d2[(i, radial_order - l)]);
                for k in 0..angular {
                    let row = i * angular + k;
                    let same = (l - 1) * angular + k;
                    let opposite = (l - 1) * angular + (k + half) % angular;
                    dr[(row, same)] += e1 * scale;
                    dr[(row, opposite)] += e2 * scale;
                    drr[(row, same)] += f1 * scale * scale;
                    drr[(row, opposite)] += f2 * scale * scale;
                }
            }
        }
        let (f1, f2) = fourier_matrices(angular);
        let mut dt = DMatrix::zeros(unknowns, unknowns);
        let mut dtt = DMatrix::zeros(unknowns, unknowns);
        for j in 0..inner {
            let o = j * angular;
            dt.view_mut((o, o), (angular, angular)).copy_from(&f1);
            dtt.view_mut((o, o), (angular, angular)).copy_from(&f2);
        }
        Self { rings, angular, radius, radii: mesh.ring_radii(), dr, drr, dt, dtt }
    }

    fn full(&self, u: &DVector<f64>) -> Vec<f64> {
        let mut v = vec![0.0; self.rings * self.angular];
        v[self.angular..].copy_from_slice(u.as_slice());
        v
    }

    /// Cartesian Hessian pieces at every node of the grid.
    fn state(&self, u: &DVector<f64>) -> DiskState {
        let ur = &self.dr * u;
        let urr = &self.drr * u;
        let ut_in = &self.dt * u;
        let utt_in = &self.dtt * u;
        let urt = &self.dr * &ut_in;
        let total = self.rings * self.angular;
        let (mut a, mut b, mut c, mut det) = (vec![0.0; total], vec![0.0; total], vec![0.0; total], vec![0.0; total]);
        let mut min_eig = f64::INFINITY;
        for i in 0..total {
            let r = self.radii[i / self.angular];
            let (ut, utt) = if i < self.angular { (0.0, 0.0) } else { (ut_in[i - self.angular], utt_in[i - self.angular]) };
            a[i] = urr[i];
            b[i] = ur[i] / r + utt / (r * r);
            c[i] = urt[i] / r - ut / (r * r);
            det[i] = a[i] * b[i] - c[i] * c[i];
            let mid = 0.5 * (a[i] + b[i]);
            let rad = (0.5 * (a[i] - b[i])).hypot(c[i]);
            min_eig = min_eig.min(mid - rad);
        }
        DiskState { a, b, c, det, min_eig }
    }

    fn residual(&self, st: &DiskState, rho: &[f64]) -> f64 {
        (self.angular..st.det.len()).fold(0.0f64, |m, i| m.max((st.det[i] - rho[i]).abs()))
    }

    fn jacobian(&self, st: &DiskState) -> DMatrix<f64> {
        let unknowns = (self.rings - 1) * self.angular;
        let drt = self.dr.rows(self.angular, unknowns) * &self.dt;
        let mut jac = DMatrix::zeros(unknowns, unknowns);
        for row in 0..unknowns {
            let i = row + self.angular;
            let r = self.radii[i / self.angular];
            let (a, b, c) = (st.a[i], st.b[i], st.c[i]);
            for col in 0..unknowns {
                let v = b * self.drr[(i, col)] + a * (self.dr[(i, col)] / r + self.dtt[(row, col)] / (r * r))
                    - 2.0 * c * (drt[(row, col)] / r - self.dt[(row, col)] / (r * r));
                jac[(row, col)] = v;
            }
        }
        jac
    }

    fn solve(&self, mesh: &BallMesh, rho: &[f64], opts: &RmaOptions) -> Result<ConvexSolution> {
        let unknowns = (self.rings - 1) * self.angular;
        let mass = mesh.integrate(rho);
        let mean = mass / (PI * self.radius * self.radius);
        let start = mean.sqrt();
        let mut u = DVector::from_iterator(
            unknowns,
            (0..unknowns).map(|i| {
                let r = self.radii[i / self.angular + 1];
                0.5 * start * (r * r - self.radius * self.radius)
            }),
        );
        let scale = rho.iter().copied().fold(1.0f64, f64::max);
        let target = opts.tol * scale;
        let mut iterations = 0;
        let mut damped = 0;
        let mut last_t = 0.0;
        let mut refinements = 0;
        let mut queue: std::collections::VecDeque<f64> = opts.continuation.iter().copied().collect();
        if queue.back().copied() != Some(1.0) {
            queue.push_back(1.0);
        }
        while let Some(t) = queue.pop_front() {
            let rho_t: Vec<f64> = rho.iter().map(|v| (1.0 - t) * mean + t * v).collect();
            match self.newton(&mut u.clone(), &rho_t, target, opts) {
                Ok((next, its, d)) => {
                    u = next;
                    iterations += its;
                    damped += d;
                    last_t = t;
                }
                Err(e) => {
                    if refinements >= opts.max_refinements {
                        return Err(e);
                    }
                    refinements += 1;
                    queue.push_front(t);
                    queue.push_front(0.5 * (last_t + t));
                }
            }
        }
        let st = self.state(&u);
        let residual = self.residual(&st, rho);
        let interior_min = (self.angular..st.det.len())
            .map(|i| {
                let mid = 0.5 * (st.a[i] + st.b[i]);
                mid - (0.5 * (st.a[i] - st.b[i])).hypot(st.c[i])
            })
            .fold(f64::INFINITY, f64::min);
        let values = self.full(&u);
        Ok(ConvexSolution {
            psi: BallField { mesh: mesh.clone(), values },
            rho: rho.to_vec(),
            convexity_margin: interior_min,
            boundary_residual: 0.0,
            residual,
            mass,
            hessian_mass: mesh.integrate(&st.det),
            newton_iterations: iterations,
            damped_steps: damped,
        })
    }

    fn newton(
        &self,
        u: &mut DVector<f64>,
        rho: &[f64],
        target: f64,
        opts: &RmaOptions,
    ) -> Result<(DVector<f64>, usize, usize)> {
        let mut st = self.state(u);
        let mut res = self.residual(&st, rho);
        let mut damped = 0;
        for it in 0..opts.max_newton {
            if res <= target {
                return Ok((u.clone(), it, damped));
            }
            let jac = self.jacobian(&st);
            let f = DVector::from_iterator(
                u.len(),
                (self.angular..st.det.len()).map(|i| rho[i] - st.det[i]),
            );
            let du = jac
                .lu()
                .solve(&f)
                .ok_or_else(|| Error::NoConvergence("singular real Monge-Ampère Jacobian".into()))?;
            let mut step = 1.0;
            let mut accepted = false;
            for h in 0..=opts.max_halvings {
                let trial = &*u + &du * step;
                let ts = self.state(&trial);
                let tr = self.residual(&ts, rho);
                if ts.min_eig > 0.0 && tr < res {
                    if h > 0 {
                        damped += 1;
                    }
                    *u = trial;
                    st = ts;
                    res = tr;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                if res <= 10.0 * target {
                    return Ok((u.clone(), it, damped));
                }
                return Err(Error::NoConvergence(format!(
                    "real Monge-Ampère line search failed at residual {res:.3e}"
                )));
            }
        }
        if res <= target {
            return Ok((u.clone(), opts.max_newton, damped));
        }
        Err(Error::NoConvergence(format!("real Monge-Ampère Newton stopped at residual {res:.3e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbpReport {
    pub observed: f64,
    pub mass: f64,
    /// `4 r0 / β_m · M^{1/m}`.
    pub bound_printed: f64,
    /// `4 r0 / β_m^{1/m} · M^{1/m}`.
    pub bound_dimensional: f64,
    pub holds_printed: bool,
    pub holds_dimensional: bool,
    pub pass: bool,
}

/// `-inf ψ` against both forms of the ABP bound, with `r0 = R / 2`.
pub fn abp_check(sol: &ConvexSolution) -> AbpReport {
    let m = sol.psi.mesh.real_dim();
    let r0 = 0.5 * sol.psi.mesh.radius();
    let beta = ball_volume(m);
    let centre = sol.psi.value_at(&vec![0.0; m]);
    let observed = (-sol.psi.min().min(centre)).max(0.0);
    let root = sol.mass.max(0.0).powf(1.0 / m as f64);
    let bound_printed = 4.0 * r0 / beta * root;
    let bound_dimensional = 4.0 * r0 / beta.powf(1.0 / m as f64) * root;
    let holds_printed = observed <= bound_printed;
    let holds_dimensional = observed <= bound_dimensional;
    AbpReport {
        observed,
        mass: sol.mass,
        bound_printed,
        bound_dimensional,
        holds_printed,
        holds_dimensional,
        pass: holds_printed || holds_dimensional,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    /// `sup |∇ψ|` over nodes in `B(0, r0)`.
    pub observed: f64,
    /// `4 / β_m · M^{1/m}`.
    pub bound_printed: f64,
    pub bound_dimensional: f64,
    pub pass: bool,
}

pub fn interior_gradient_check(sol: &ConvexSolution) -> GradientReport {
    let mesh = &sol.psi.mesh;
    let m = mesh.real_dim();
    let r0 = 0.5 * mesh.radius();
    let v = &sol.psi.values;
    let observed = match *mesh {
        BallMesh::Interval { radius, intervals } => {
            let h = 2.0 * radius / intervals as f64;
            let pts = mesh.points();
            (1..intervals)
                .filter(|&i| pts[i][0].abs() <= r0)
                .map(|i| ((v[i + 1] - v[i - 1]) / (2.0 * h)).abs())
                .fold(0.0, f64::max)
        }
        BallMesh::Disk { angular, .. } => {
            let ops = DiskOperators::new(mesh);
            let u = DVector::from_column_slice(&v[angular..]);
            let ur = &ops.dr * &u;
            let ut = &ops.dt * &u;
            (angular..v.len())
                .filter(|&i| ops.radii[i / angular] <= r0)
                .map(|i| {
                    let r = ops.radii[i / angular];
                    ur[i].hypot(ut[i - angular] / r)
                })
                .fold(0.0, f64::max)
        }
    };
    let beta = ball_volume(m);
    let root = sol.mass.max(0.0).powf(1.0 / m as f64);
    let bound_printed = 4.0 / beta * root;
    let bound_dimensional = 4.0 / beta.powf(1.0 / m as f64) * root;
    GradientReport {
        observed,
        bound_printed,
        bound_dimensional,
        pass: observed <= bound_printed.max(bound_dimensional) + 1e-8,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_ball_volumes() {
        assert!((ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((ball_volume(2) - PI).abs() < 1e-15);
        assert!((ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((ball_volume(4) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6, 0.0, 2.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 2f64.powi(10) / 10.0).abs() < 1e-11);
    }

    #[test]
    fn quadratic_is_reproduced_on_the_disk() {
        let mesh = BallMesh::disk(0.4, 17, 16).unwrap();
        let rho = mesh.sample(|_| 2.0);
        let sol = solve_rma(&mesh, &rho, &RmaOptions::default()).unwrap();
        let c = 2f64.sqrt();
        for (p, v) in mesh.points().iter().zip(&sol.psi.values) {
            let exact = 0.5 * c * (p[0] * p[0] + p[1] * p[1] - 0.16);
            assert!((v - exact).abs() < 1e-12);
        }
        assert!((sol.mass - 2.0 * PI * 0.16).abs() < 1e-12);
    }
}
