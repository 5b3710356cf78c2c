//! Convex-concave payoffs `L(x, y)` (convex in `x`, concave in `y`) with value,
//! gradients and Lipschitz / strong-convexity metadata.
//!
//! Every built-in family shares one closed-form shape, [`Terms`]:
//!
//! ```text
//! x'My + qx(x) - qy(y) + sum_i y_i cx_i(x) + wx R(x) - wy R(y)
//! ```
//!
//! where `qx`, `qy`, `cx_i` are separable (diagonal) quadratics and `R` is the
//! offset negative entropy. Sums of such payoffs fold into a single `Terms` by
//! adding coefficients, which keeps running sums O(1) in the number of rounds.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::geometry::FeasibleSet;
use crate::linalg::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

impl Norm {
    /// Dual norm of a concatenated gradient `[gx; gy]`.
    pub fn dual(self, gx: &[f64], gy: &[f64]) -> f64 {
        match self {
            Norm::L2 => (dot(gx, gx) + dot(gy, gy)).sqrt(),
            Norm::L1 => crate::linalg::norm_inf(gx).max(crate::linalg::norm_inf(gy)),
        }
    }

    /// Primal norm of a concatenated difference.
    pub fn primal(self, dx: &[f64], dy: &[f64]) -> f64 {
        match self {
            Norm::L2 => (dot(dx, dx) + dot(dy, dy)).sqrt(),
            Norm::L1 => crate::linalg::norm1(dx) + crate::linalg::norm1(dy),
        }
    }
}

pub trait Payoff: Send + Sync + fmt::Debug {
    /// `(dim x, dim y)`
    fn dims(&self) -> (usize, usize);
    fn value(&self, x: &[f64], y: &[f64]) -> f64;
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    /// Lipschitz constant with respect to [`Payoff::norm`].
    fn lipschitz(&self) -> f64;
    /// Strong convexity-concavity modulus, 0 when merely convex-concave.
    fn strong_h(&self) -> f64;
    fn norm(&self) -> Norm;
    /// Closed-form structure, when the payoff has one.
    fn terms(&self) -> Option<&Terms> {
        None
    }
}

pub type PayoffFunction = Arc<dyn Payoff>;

/// `sum_k a_k z_k^2 + b_k z_k + c`
#[derive(Debug, Clone, PartialEq)]
pub struct DiagQuad {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl DiagQuad {
    pub fn zeros(d: usize) -> Self {
        Self {
            a: vec![0.0; d],
            b: vec![0.0; d],
            c: 0.0,
        }
    }

    pub fn new(a: Vec<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        check_dim(a.len(), b.len())?;
        Ok(Self { a, b, c })
    }

    /// One-dimensional `a z^2 + b z + c`.
    pub fn scalar(a: f64, b: f64, c: f64) -> Self {
        Self {
            a: vec![a],
            b: vec![b],
            c,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.b)
            .zip(z)
            .map(|((a, b), v)| a * v * v + b * v)
            .sum::<f64>()
            + self.c
    }

    pub fn grad(&self, z: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .zip(z)
            .map(|((a, b), v)| 2.0 * a * v + b)
            .collect()
    }

    pub fn add_scaled(&mut self, other: &DiagQuad, s: f64) {
        for (a, o) in self.a.iter_mut().zip(&other.a) {
            *a += s * o;
        }
        for (b, o) in self.b.iter_mut().zip(&other.b) {
            *b += s * o;
        }
        self.c += s * other.c;
    }

    pub fn is_convex(&self) -> bool {
        self.a.iter().all(|a| *a >= 0.0)
    }

    pub fn is_concave(&self) -> bool {
        self.a.iter().all(|a| *a <= 0.0)
    }

    /// Per-coordinate `max |d/dz_k|` over the box `[lower, upper]`.
    pub fn max_abs_grad(&self, lower: &[f64], upper: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|k| {
                let g = |v: f64| (2.0 * self.a[k] * v + self.b[k]).abs();
                g(lower[k]).max(g(upper[k]))
            })
            .collect()
    }

    /// `(min, max)` of the function over the box `[lower, upper]`.
    pub fn range(&self, lower: &[f64], upper: &[f64]) -> (f64, f64) {
        let mut lo = self.c;
        let mut hi = self.c;
        for k in 0..self.dim() {
            let f = |v: f64| self.a[k] * v * v + self.b[k] * v;
            let mut cands = vec![f(lower[k]), f(upper[k])];
            if self.a[k] != 0.0 {
                let v = -self.b[k] / (2.0 * self.a[k]);
                if v > lower[k] && v < upper[k] {
                    cands.push(f(v));
                }
            }
            lo += cands.iter().cloned().fold(f64::INFINITY, f64::min);
            hi += cands.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        }
        (lo, hi)
    }
}

/// Offset negative entropy `sum z_i ln z_i + ln d` (zero at the uniform point).
pub fn neg_entropy(z: &[f64]) -> f64 {
    z.iter()
        .map(|v| if *v > 0.0 { v * v.ln() } else { 0.0 })
        .sum::<f64>()
        + (z.len() as f64).ln()
}

pub fn neg_entropy_grad(z: &[f64]) -> Vec<f64> {
    z.iter().map(|v| 1.0 + v.ln()).collect()
}

/// Closed-form payoff structure; see the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct Terms {
    pub dx: usize,
    pub dy: usize,
    pub bilinear: Option<Matrix>,
    pub quad_x: DiagQuad,
    pub quad_y: DiagQuad,
    /// Empty, or one quadratic in `x` per coordinate of `y`.
    pub coupling: Vec<DiagQuad>,
    pub entropy_x: f64,
    pub entropy_y: f64,
}

impl Terms {
    pub fn zeros(dx: usize, dy: usize) -> Self {
        Self {
            dx,
            dy,
            bilinear: None,
            quad_x: DiagQuad::zeros(dx),
            quad_y: DiagQuad::zeros(dy),
            coupling: Vec::new(),
            entropy_x: 0.0,
            entropy_y: 0.0,
        }
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut v = self.quad_x.value(x) - self.quad_y.value(y);
        if let Some(m) = &self.bilinear {
            v += m.bilinear(x, y);
        }
        for (yi, c) in y.iter().zip(&self.coupling) {
            v += yi * c.value(x);
        }
        if self.entropy_x != 0.0 {
            v += self.entropy_x * neg_entropy(x);
        }
        if self.entropy_y != 0.0 {
            v -= self.entropy_y * neg_entropy(y);
        }
        v
    }

    pub fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let (a, b) = self.x_coefficients(y);
        let mut g: Vec<f64> = a
            .iter()
            .zip(&b)
            .zip(x)
            .map(|((a, b), v)| 2.0 * a * v + b)
            .collect();
        if self.entropy_x != 0.0 {
            for (gi, v) in g.iter_mut().zip(x) {
                *gi += self.entropy_x * (1.0 + v.ln());
            }
        }
        g
    }

    pub fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let (a, b) = self.y_coefficients(x);
        // Gradient of the maximized function is minus that of the minimized one.
        let mut g: Vec<f64> = a
            .iter()
            .zip(&b)
            .zip(y)
            .map(|((a, b), v)| -(2.0 * a * v + b))
            .collect();
        if self.entropy_y != 0.0 {
            for (gi, v) in g.iter_mut().zip(y) {
                *gi -= self.entropy_y * (1.0 + v.ln());
            }
        }
        g
    }

    /// Separable quadratic `sum a_k x_k^2 + b_k x_k` equal to `L(., y)` up to a
    /// constant, excluding the entropy term.
    pub fn x_coefficients(&self, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut a = self.quad_x.a.clone();
        let mut b = match &self.bilinear {
            Some(m) => crate::linalg::add(&m.mul_vec(y), &self.quad_x.b),
            None => self.quad_x.b.clone(),
        };
        for (yi, c) in y.iter().zip(&self.coupling) {
            if *yi == 0.0 {
                continue;
            }
            for k in 0..self.dx {
                a[k] += yi * c.a[k];
                b[k] += yi * c.b[k];
            }
        }
        (a, b)
    }

    /// Separable quadratic equal to `-L(x, .)` up to a constant, excluding the
    /// entropy term.
    pub fn y_coefficients(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let a = self.quad_y.a.clone();
        let mut b = self.quad_y.b.clone();
        if let Some(m) = &self.bilinear {
            for (bj, v) in b.iter_mut().zip(m.tmul_vec(x)) {
                *bj -= v;
            }
        }
        for (bj, c) in b.iter_mut().zip(&self.coupling) {
            *bj -= c.value(x);
        }
        (a, b)
    }

    /// `self += s * other`
    pub fn add_scaled(&mut self, other: &Terms, s: f64) -> Result<()> {
        check_dim(self.dx, other.dx)?;
        check_dim(self.dy, other.dy)?;
        if let Some(om) = &other.bilinear {
            match &mut self.bilinear {
                Some(m) => m.add_scaled(om, s),
                None => {
                    let mut m = Matrix::zeros(self.dx, self.dy);
                    m.add_scaled(om, s);
                    self.bilinear = Some(m);
                }
            }
        }
        self.quad_x.add_scaled(&other.quad_x, s);
        self.quad_y.add_scaled(&other.quad_y, s);
        if !other.coupling.is_empty() {
            if self.coupling.is_empty() {
                self.coupling = vec![DiagQuad::zeros(self.dx); self.dy];
            }
            for (c, o) in self.coupling.iter_mut().zip(&other.coupling) {
                c.add_scaled(o, s);
            }
        }
        self.entropy_x += s * other.entropy_x;
        self.entropy_y += s * other.entropy_y;
        Ok(())
    }

    /// True when the structure is `x'My + wx R(x) - wy R(y)` only.
    pub fn is_entropic_bilinear(&self) -> bool {
        let zero = |q: &DiagQuad| q.a.iter().chain(&q.b).all(|v| *v == 0.0);
        zero(&self.quad_x)
            && zero(&self.quad_y)
            && self.coupling.is_empty()
            && self.entropy_x > 0.0
            && self.entropy_y > 0.0
    }

    /// True when the structure is bilinear plus constants.
    pub fn is_pure_bilinear(&self) -> bool {
        let zero = |q: &DiagQuad| q.a.iter().chain(&q.b).all(|v| *v == 0.0);
        zero(&self.quad_x)
            && zero(&self.quad_y)
            && self.coupling.is_empty()
            && self.entropy_x == 0.0
            && self.entropy_y == 0.0
    }
}

/// A payoff defined by its closed-form [`Terms`].
#[derive(Debug, Clone)]
pub struct StructuredPayoff {
    pub label: &'static str,
    pub terms: Terms,
    pub lipschitz: f64,
    pub strong_h: f64,
    pub norm: Norm,
}

impl Payoff for StructuredPayoff {
    fn dims(&self) -> (usize, usize) {
        (self.terms.dx, self.terms.dy)
    }
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.terms.value(x, y)
    }
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.terms.grad_x(x, y)
    }
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.terms.grad_y(x, y)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn strong_h(&self) -> f64 {
        self.strong_h
    }
    fn norm(&self) -> Norm {
        self.norm
    }
    fn terms(&self) -> Option<&Terms> {
        Some(&self.terms)
    }
}

/// `a x y + (h/2)(x - p)^2 - (h/2)(y - q)^2` on scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticBilinearPayoff {
    pub a: f64,
    pub h: f64,
    pub p: f64,
    pub q: f64,
    terms: Terms,
    lipschitz: f64,
}

impl QuadraticBilinearPayoff {
    /// `x_box` and `y_box` are the intervals the Lipschitz bound is taken over.
    pub fn new(a: f64, h: f64, p: f64, q: f64, x_box: (f64, f64), y_box: (f64, f64)) -> Result<Self> {
        if !(h >= 0.0) {
            return Err(Error::InvalidParameter(format!("curvature h = {h} < 0")));
        }
        if ![a, p, q].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        let mut terms = Terms::zeros(1, 1);
        terms.bilinear = Some(Matrix::from_vec(1, 1, vec![a]));
        terms.quad_x = DiagQuad::scalar(h / 2.0, -h * p, h * p * p / 2.0);
        terms.quad_y = DiagQuad::scalar(h / 2.0, -h * q, h * q * q / 2.0);
        // The squared gradient norm is convex in (x, y): its max sits at a vertex.
        let mut g2: f64 = 0.0;
        for x in [x_box.0, x_box.1] {
            for y in [y_box.0, y_box.1] {
                let gx = a * y + h * (x - p);
                let gy = a * x - h * (y - q);
                g2 = g2.max(gx * gx + gy * gy);
            }
        }
        Ok(Self {
            a,
            h,
            p,
            q,
            terms,
            lipschitz: g2.sqrt(),
        })
    }
}

impl Payoff for QuadraticBilinearPayoff {
    fn dims(&self) -> (usize, usize) {
        (1, 1)
    }
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let (x, y) = (x[0], y[0]);
        self.a * x * y + 0.5 * self.h * (x - self.p).powi(2) - 0.5 * self.h * (y - self.q).powi(2)
    }
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![self.a * y[0] + self.h * (x[0] - self.p)]
    }
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![self.a * x[0] - self.h * (y[0] - self.q)]
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn strong_h(&self) -> f64 {
        self.h
    }
    fn norm(&self) -> Norm {
        Norm::L2
    }
    fn terms(&self) -> Option<&Terms> {
        Some(&self.terms)
    }
}

pub fn make_quadratic_bilinear(
    a: f64,
    h: f64,
    p: f64,
    q: f64,
    x_box: (f64, f64),
    y_box: (f64, f64),
) -> Result<PayoffFunction> {
    Ok(Arc::new(QuadraticBilinearPayoff::new(a, h, p, q, x_box, y_box)?))
}

/// `x' A y` on simplexes.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearPayoff {
    terms: Terms,
    c: f64,
    norm: Norm,
}

impl BilinearPayoff {
    pub fn new(a: Matrix, norm: Norm) -> Result<Self> {
        if a.rows() == 0 || a.cols() == 0 {
            return Err(Error::InvalidParameter("empty payoff matrix".into()));
        }
        if let Some(v) = a.data().iter().find(|v| !(v.abs() <= 1.0)) {
            return Err(Error::InvalidParameter(format!(
                "matrix entry {v} outside [-1, 1]"
            )));
        }
        let c = a.max_abs();
        let mut terms = Terms::zeros(a.rows(), a.cols());
        terms.bilinear = Some(a);
        Ok(Self { terms, c, norm })
    }

    pub fn matrix(&self) -> &Matrix {
        self.terms.bilinear.as_ref().expect("set in constructor")
    }

    /// Lipschitz constants over simplexes for entrywise bound `c`:
    /// `sqrt(c)(sqrt(d1) + sqrt(d2))` in l2 and `c` in l1.
    pub fn lipschitz_for(c: f64, d1: usize, d2: usize, norm: Norm) -> f64 {
        match norm {
            Norm::L2 => c.sqrt() * ((d1 as f64).sqrt() + (d2 as f64).sqrt()),
            Norm::L1 => c,
        }
    }
}

impl Payoff for BilinearPayoff {
    fn dims(&self) -> (usize, usize) {
        (self.terms.dx, self.terms.dy)
    }
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matrix().bilinear(x, y)
    }
    fn grad_x(&self, _x: &[f64], y: &[f64]) -> Vec<f64> {
        self.matrix().mul_vec(y)
    }
    fn grad_y(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        self.matrix().tmul_vec(x)
    }
    fn lipschitz(&self) -> f64 {
        Self::lipschitz_for(self.c, self.terms.dx, self.terms.dy, self.norm)
    }
    fn strong_h(&self) -> f64 {
        0.0
    }
    fn norm(&self) -> Norm {
        self.norm
    }
    fn terms(&self) -> Option<&Terms> {
        Some(&self.terms)
    }
}

pub fn make_bilinear(a: Matrix, norm: Norm) -> Result<PayoffFunction> {
    Ok(Arc::new(BilinearPayoff::new(a, norm)?))
}

/// `-r(x) - y'(b/T - c(x))` with separable quadratic reward and consumptions.
#[derive(Debug, Clone, PartialEq)]
pub struct KnapsackLagrangian {
    pub reward: DiagQuad,
    pub consumption: Vec<DiagQuad>,
    pub budget: Vec<f64>,
    pub horizon: usize,
    terms: Terms,
    lipschitz: f64,
}

impl KnapsackLagrangian {
    /// `x_set` must be a box; `y_upper` is the dual box `prod [0, y_max_i]`.
    pub fn new(
        reward: DiagQuad,
        consumption: Vec<DiagQuad>,
        budget: Vec<f64>,
        horizon: usize,
        x_set: &FeasibleSet,
        y_upper: &[f64],
    ) -> Result<Self> {
        let n = reward.dim();
        check_dim(consumption.len(), budget.len())?;
        check_dim(budget.len(), y_upper.len())?;
        check_dim(n, x_set.dim())?;
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        if budget.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::InvalidParameter("budgets must be nonnegative".into()));
        }
        if !reward.is_concave() || consumption.iter().any(|c| !c.is_convex()) {
            return Err(Error::InvalidParameter(
                "reward must be concave and consumptions convex".into(),
            ));
        }
        for c in &consumption {
            check_dim(n, c.dim())?;
        }
        let (lower, upper) = x_set
            .bounds()
            .ok_or_else(|| Error::InvalidParameter("knapsack actions need a box".into()))?;
        let t = horizon as f64;
        let mut terms = Terms::zeros(n, budget.len());
        terms.quad_x.add_scaled(&reward, -1.0);
        terms.coupling = consumption
            .iter()
            .zip(&budget)
            .map(|(c, b)| {
                let mut shifted = c.clone();
                shifted.c -= b / t;
                shifted
            })
            .collect();
        // Triangle-inequality bound over X x Y.
        let r_grad = reward.max_abs_grad(&lower, &upper);
        let mut gx = r_grad;
        for (c, ym) in consumption.iter().zip(y_upper) {
            for (g, cg) in gx.iter_mut().zip(c.max_abs_grad(&lower, &upper)) {
                *g += ym * cg;
            }
        }
        let mut g2 = dot(&gx, &gx);
        for c in &terms.coupling {
            let (lo, hi) = c.range(&lower, &upper);
            g2 += lo.abs().max(hi.abs()).powi(2);
        }
        Ok(Self {
            reward,
            consumption,
            budget,
            horizon,
            terms,
            lipschitz: g2.sqrt(),
        })
    }

    pub fn m(&self) -> usize {
        self.budget.len()
    }
}

impl Payoff for KnapsackLagrangian {
    fn dims(&self) -> (usize, usize) {
        (self.terms.dx, self.terms.dy)
    }
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let t = self.horizon as f64;
        let slack: f64 = y
            .iter()
            .zip(self.budget.iter().zip(&self.consumption))
            .map(|(yi, (b, c))| yi * (b / t - c.value(x)))
            .sum();
        -self.reward.value(x) - slack
    }
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.terms.grad_x(x, y)
    }
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.terms.grad_y(x, y)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn strong_h(&self) -> f64 {
        0.0
    }
    fn norm(&self) -> Norm {
        Norm::L2
    }
    fn terms(&self) -> Option<&Terms> {
        Some(&self.terms)
    }
}

pub fn make_knapsack_lagrangian(
    reward: DiagQuad,
    consumption: Vec<DiagQuad>,
    budget: Vec<f64>,
    horizon: usize,
    x_set: &FeasibleSet,
    y_upper: &[f64],
) -> Result<PayoffFunction> {
    Ok(Arc::new(KnapsackLagrangian::new(
        reward,
        consumption,
        budget,
        horizon,
        x_set,
        y_upper,
    )?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularizerKind {
    Zero,
    /// `||z||_2^2`, 2-strongly convex in l2.
    SquaredNorm,
    /// `sum z_i ln z_i + ln d`, 1-strongly convex in l1 on the simplex.
    Entropy,
}

/// A nonnegative function of one player's action with its Lipschitz constant
/// over that player's set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularizer {
    pub kind: RegularizerKind,
    pub dim: usize,
    pub lipschitz: f64,
}

impl Regularizer {
    pub fn zero(dim: usize) -> Self {
        Self {
            kind: RegularizerKind::Zero,
            dim,
            lipschitz: 0.0,
        }
    }

    pub fn squared_norm(set: &FeasibleSet) -> Self {
        Self {
            kind: RegularizerKind::SquaredNorm,
            dim: set.dim(),
            lipschitz: 2.0 * set.radius(),
        }
    }

    /// Entropy over a restricted simplex: `||grad||_inf <= max(|ln theta|, 1)`.
    pub fn entropy(d: usize, theta: f64) -> Self {
        Self {
            kind: RegularizerKind::Entropy,
            dim: d,
            lipschitz: entropy_lipschitz(theta),
        }
    }

    pub fn value(&self, z: &[f64]) -> f64 {
        match self.kind {
            RegularizerKind::Zero => 0.0,
            RegularizerKind::SquaredNorm => dot(z, z),
            RegularizerKind::Entropy => neg_entropy(z),
        }
    }

    pub fn grad(&self, z: &[f64]) -> Vec<f64> {
        match self.kind {
            RegularizerKind::Zero => vec![0.0; z.len()],
            RegularizerKind::SquaredNorm => z.iter().map(|v| 2.0 * v).collect(),
            RegularizerKind::Entropy => neg_entropy_grad(z),
        }
    }

    pub fn modulus(&self) -> f64 {
        match self.kind {
            RegularizerKind::Zero => 0.0,
            RegularizerKind::SquaredNorm => 2.0,
            RegularizerKind::Entropy => 1.0,
        }
    }

    fn add_to_x(&self, terms: &mut Terms, w: f64) {
        match self.kind {
            RegularizerKind::Zero => {}
            RegularizerKind::SquaredNorm => terms.quad_x.a.iter_mut().for_each(|a| *a += w),
            RegularizerKind::Entropy => terms.entropy_x += w,
        }
    }

    fn add_to_y(&self, terms: &mut Terms, w: f64) {
        match self.kind {
            RegularizerKind::Zero => {}
            RegularizerKind::SquaredNorm => terms.quad_y.a.iter_mut().for_each(|a| *a += w),
            RegularizerKind::Entropy => terms.entropy_y += w,
        }
    }
}

/// `max(|ln theta|, 1)`
pub fn entropy_lipschitz(theta: f64) -> f64 {
    theta.ln().abs().max(1.0)
}

/// `base + weight R_x(x) - weight R_y(y)`
#[derive(Debug, Clone)]
pub struct RegularizedPayoff {
    pub base: PayoffFunction,
    pub reg_x: Regularizer,
    pub reg_y: Regularizer,
    pub weight: f64,
    terms: Option<Terms>,
}

impl RegularizedPayoff {
    pub fn new(base: PayoffFunction, reg_x: Regularizer, reg_y: Regularizer, weight: f64) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "regularization weight {weight} must be positive"
            )));
        }
        let (dx, dy) = base.dims();
        check_dim(dx, reg_x.dim)?;
        check_dim(dy, reg_y.dim)?;
        let terms = base.terms().map(|t| {
            let mut t = t.clone();
            reg_x.add_to_x(&mut t, weight);
            reg_y.add_to_y(&mut t, weight);
            t
        });
        Ok(Self {
            base,
            reg_x,
            reg_y,
            weight,
            terms,
        })
    }
}

impl Payoff for RegularizedPayoff {
    fn dims(&self) -> (usize, usize) {
        self.base.dims()
    }
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.base.value(x, y) + self.weight * (self.reg_x.value(x) - self.reg_y.value(y))
    }
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        crate::linalg::axpy(&self.base.grad_x(x, y), self.weight, &self.reg_x.grad(x))
    }
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        crate::linalg::axpy(&self.base.grad_y(x, y), -self.weight, &self.reg_y.grad(y))
    }
    fn lipschitz(&self) -> f64 {
        self.base.lipschitz() + self.weight * (self.reg_x.lipschitz + self.reg_y.lipschitz)
    }
    fn strong_h(&self) -> f64 {
        let m = match (self.reg_x.kind, self.reg_y.kind) {
            (RegularizerKind::Zero, _) | (_, RegularizerKind::Zero) => 0.0,
            _ => self.reg_x.modulus().min(self.reg_y.modulus()),
        };
        self.base.strong_h() + self.weight * m
    }
    fn norm(&self) -> Norm {
        self.base.norm()
    }
    fn terms(&self) -> Option<&Terms> {
        self.terms.as_ref()
    }
}

pub fn regularize(
    base: PayoffFunction,
    reg_x: Regularizer,
    reg_y: Regularizer,
    weight: f64,
) -> Result<PayoffFunction> {
    Ok(Arc::new(RegularizedPayoff::new(base, reg_x, reg_y, weight)?))
}

type ValueFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync;

/// A payoff given by closures, with no exploitable structure.
pub struct CustomPayoff {
    pub dims: (usize, usize),
    pub value: Box<ValueFn>,
    pub grad_x: Box<GradFn>,
    pub grad_y: Box<GradFn>,
    pub lipschitz: f64,
    pub strong_h: f64,
    pub norm: Norm,
}

impl fmt::Debug for CustomPayoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPayoff")
            .field("dims", &self.dims)
            .field("lipschitz", &self.lipschitz)
            .field("strong_h", &self.strong_h)
            .finish()
    }
}

impl Payoff for CustomPayoff {
    fn dims(&self) -> (usize, usize) {
        self.dims
    }
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.value)(x, y)
    }
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (self.grad_x)(x, y)
    }
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (self.grad_y)(x, y)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn strong_h(&self) -> f64 {
        self.strong_h
    }
    fn norm(&self) -> Norm {
        self.norm
    }
}

/// Running sum of payoffs. Structured summands are folded into one [`Terms`];
/// anything else is kept in a list.
#[derive(Debug, Clone)]
pub struct PayoffSum {
    folded: Terms,
    opaque: Vec<PayoffFunction>,
    count: usize,
    lipschitz: f64,
    strong_h: f64,
    norm: Norm,
}

impl PayoffSum {
    pub fn new(dx: usize, dy: usize) -> Self {
        Self {
            folded: Terms::zeros(dx, dy),
            opaque: Vec::new(),
            count: 0,
            lipschitz: 0.0,
            strong_h: 0.0,
            norm: Norm::L2,
        }
    }

    pub fn from_payoffs<'a, I>(dx: usize, dy: usize, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a PayoffFunction>,
    {
        let mut s = Self::new(dx, dy);
        for f in items {
            s.push(f)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, f: &PayoffFunction) -> Result<()> {
        let (dx, dy) = f.dims();
        check_dim(self.folded.dx, dx)?;
        check_dim(self.folded.dy, dy)?;
        match f.terms() {
            Some(t) => self.folded.add_scaled(t, 1.0)?,
            None => self.opaque.push(Arc::clone(f)),
        }
        if self.count == 0 {
            self.norm = f.norm();
        }
        self.count += 1;
        self.lipschitz += f.lipschitz();
        self.strong_h += f.strong_h();
        Ok(())
    }

    /// Adds closed-form terms directly, with the metadata they carry.
    pub fn push_terms(&mut self, t: &Terms, lipschitz: f64, strong_h: f64) -> Result<()> {
        self.folded.add_scaled(t, 1.0)?;
        self.count += 1;
        self.lipschitz += lipschitz;
        self.strong_h += strong_h;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn folded(&self) -> &Terms {
        &self.folded
    }

    pub fn is_structured(&self) -> bool {
        self.opaque.is_empty()
    }
}

impl Payoff for PayoffSum {
    fn dims(&self) -> (usize, usize) {
        (self.folded.dx, self.folded.dy)
    }
    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.folded.value(x, y) + self.opaque.iter().map(|f| f.value(x, y)).sum::<f64>()
    }
    fn grad_x(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut g = self.folded.grad_x(x, y);
        for f in &self.opaque {
            for (gi, v) in g.iter_mut().zip(f.grad_x(x, y)) {
                *gi += v;
            }
        }
        g
    }
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut g = self.folded.grad_y(x, y);
        for f in &self.opaque {
            for (gi, v) in g.iter_mut().zip(f.grad_y(x, y)) {
                *gi += v;
            }
        }
        g
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn strong_h(&self) -> f64 {
        self.strong_h
    }
    fn norm(&self) -> Norm {
        self.norm
    }
    fn terms(&self) -> Option<&Terms> {
        if self.opaque.is_empty() {
            Some(&self.folded)
        } else {
            None
        }
    }
}

/// Sampled dual norm of the gradient, for certificate checks.
pub fn gradient_dual_norm(f: &dyn Payoff, x: &[f64], y: &[f64]) -> f64 {
    f.norm().dual(&f.grad_x(x, y), &f.grad_y(x, y))
}
