//! Convex compact feasible sets: boxes, (restricted) probability simplexes and
//! products of nonnegative intervals.

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::dot;

/// Default membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum FeasibleSet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Simplex { d: usize },
    /// `{z in simplex : z_i >= theta}`.
    RestrictedSimplex { d: usize, theta: f64 },
    /// `prod_i [0, upper_i]`.
    IntervalProduct { upper: Vec<f64> },
}

impl FeasibleSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.is_empty() {
            return Err(Error::InvalidParameter("box of dimension 0".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidParameter("box requires lower <= upper".into()));
        }
        Ok(Self::Box { lower, upper })
    }

    /// `[lo, hi]^d`
    pub fn cube(d: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::boxed(vec![lo; d], vec![hi; d])
    }

    pub fn simplex(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("simplex of dimension 0".into()));
        }
        Ok(Self::Simplex { d })
    }

    pub fn restricted_simplex(d: usize, theta: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("simplex of dimension 0".into()));
        }
        if !(0.0..=1.0 / d as f64).contains(&theta) {
            return Err(Error::InvalidParameter(format!(
                "theta = {theta} outside [0, 1/{d}]"
            )));
        }
        Ok(Self::RestrictedSimplex { d, theta })
    }

    pub fn interval_product(upper: Vec<f64>) -> Result<Self> {
        if upper.is_empty() {
            return Err(Error::InvalidParameter("empty interval product".into()));
        }
        if upper.iter().any(|u| !(*u >= 0.0)) {
            return Err(Error::InvalidParameter(
                "interval product requires nonnegative upper bounds".into(),
            ));
        }
        Ok(Self::IntervalProduct { upper })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Box { lower, .. } => lower.len(),
            Self::Simplex { d } | Self::RestrictedSimplex { d, .. } => *d,
            Self::IntervalProduct { upper } => upper.len(),
        }
    }

    /// Lower bound theta for simplex kinds (0 for the plain simplex), `None` otherwise.
    pub fn simplex_theta(&self) -> Option<f64> {
        match self {
            Self::Simplex { .. } => Some(0.0),
            Self::RestrictedSimplex { theta, .. } => Some(*theta),
            _ => None,
        }
    }

    /// Componentwise bounds for box kinds.
    pub fn bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::Box { lower, upper } => Some((lower.clone(), upper.clone())),
            Self::IntervalProduct { upper } => Some((vec![0.0; upper.len()], upper.clone())),
            _ => None,
        }
    }

    pub fn contains(&self, z: &[f64], tol: f64) -> Result<bool> {
        check_dim(self.dim(), z.len())?;
        if !z.iter().all(|v| v.is_finite()) {
            return Ok(false);
        }
        Ok(match self {
            Self::Simplex { .. } | Self::RestrictedSimplex { .. } => {
                let theta = self.simplex_theta().unwrap_or(0.0);
                let sum: f64 = z.iter().sum();
                (sum - 1.0).abs() <= tol && z.iter().all(|v| *v >= theta - tol)
            }
            _ => {
                let (lower, upper) = self.bounds().expect("box kind");
                z.iter()
                    .zip(lower.iter().zip(&upper))
                    .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
            }
        })
    }

    /// Euclidean projection.
    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), z.len())?;
        Ok(match self {
            Self::Box { lower, upper } => z
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect(),
            Self::IntervalProduct { upper } => z
                .iter()
                .zip(upper)
                .map(|(v, u)| v.clamp(0.0, *u))
                .collect(),
            Self::Simplex { .. } => project_simplex(z),
            Self::RestrictedSimplex { d, theta } => {
                let s = 1.0 - *d as f64 * theta;
                if s <= 0.0 {
                    return Ok(vec![1.0 / *d as f64; *d]);
                }
                let w: Vec<f64> = z.iter().map(|v| (v - theta) / s).collect();
                self.embed(&project_simplex(&w))?
            }
        })
    }

    /// Maps a point of the standard simplex into the restricted one:
    /// `w -> theta 1 + (1 - d theta) w`. Identity for other kinds.
    pub fn embed(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), w.len())?;
        Ok(match self {
            Self::RestrictedSimplex { d, theta } => {
                let s = 1.0 - *d as f64 * theta;
                w.iter().map(|v| theta + s * v).collect()
            }
            _ => w.to_vec(),
        })
    }

    /// Inverse of [`FeasibleSet::embed`]. Fails on the degenerate singleton.
    pub fn unembed(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), z.len())?;
        Ok(match self {
            Self::RestrictedSimplex { d, theta } => {
                let s = 1.0 - *d as f64 * theta;
                if s <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "restricted simplex is a single point".into(),
                    ));
                }
                z.iter().map(|v| (v - theta) / s).collect()
            }
            _ => z.to_vec(),
        })
    }

    /// Euclidean diameter, closed form.
    pub fn diameter(&self) -> f64 {
        match self {
            Self::Box { lower, upper } => crate::linalg::dist2(upper, lower),
            Self::IntervalProduct { upper } => crate::linalg::norm2(upper),
            Self::Simplex { d } | Self::RestrictedSimplex { d, .. } => {
                if *d == 1 {
                    return 0.0;
                }
                let theta = self.simplex_theta().unwrap_or(0.0);
                std::f64::consts::SQRT_2 * (1.0 - *d as f64 * theta).max(0.0)
            }
        }
    }

    /// Largest Euclidean norm of a feasible point.
    pub fn radius(&self) -> f64 {
        match self {
            Self::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            Self::IntervalProduct { upper } => crate::linalg::norm2(upper),
            Self::Simplex { d } | Self::RestrictedSimplex { d, .. } => {
                let theta = self.simplex_theta().unwrap_or(0.0);
                let top = 1.0 - (*d as f64 - 1.0) * theta;
                (top * top + (*d as f64 - 1.0) * theta * theta).sqrt()
            }
        }
    }

    /// A deterministic interior-ish reference point: projection of the origin.
    pub fn center(&self) -> Vec<f64> {
        self.project(&vec![0.0; self.dim()])
            .expect("dimension matches by construction")
    }

    /// Minimizer of a linear function `g . z` over the set (a vertex).
    pub fn argmin_linear(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), g.len())?;
        Ok(match self {
            Self::Simplex { .. } | Self::RestrictedSimplex { .. } => {
                let d = g.len();
                let theta = self.simplex_theta().unwrap_or(0.0);
                let k = argmin_index(g);
                let mut z = vec![theta; d];
                z[k] = 1.0 - (d as f64 - 1.0) * theta;
                z
            }
            _ => {
                let (lower, upper) = self.bounds().expect("box kind");
                g.iter()
                    .zip(lower.iter().zip(&upper))
                    .map(|(gi, (l, u))| if *gi > 0.0 { *l } else { *u })
                    .collect()
            }
        })
    }

    /// Minimum of `g . z` over the set.
    pub fn min_linear(&self, g: &[f64]) -> Result<f64> {
        Ok(dot(g, &self.argmin_linear(g)?))
    }

    /// Uniform sample (boxes) or flat-Dirichlet sample mapped into the set.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Self::Simplex { d } | Self::RestrictedSimplex { d, .. } => {
                let e: Vec<f64> = (0..*d).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let s: f64 = e.iter().sum();
                let w: Vec<f64> = e.iter().map(|v| v / s).collect();
                self.embed(&w).expect("dimension matches")
            }
            _ => {
                let (lower, upper) = self.bounds().expect("box kind");
                lower
                    .iter()
                    .zip(&upper)
                    .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
                    .collect()
            }
        }
    }
}

fn argmin_index(g: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in g.iter().enumerate() {
        if *v < g[best] {
            best = i;
        }
    }
    best
}

/// Euclidean projection onto the probability simplex by the sorted-threshold rule.
pub fn project_simplex(z: &[f64]) -> Vec<f64> {
    let mut u = z.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k as f64 + 1.0);
        if uk - t > 0.0 {
            tau = t;
        }
    }
    let mut out: Vec<f64> = z.iter().map(|v| (v - tau).max(0.0)).collect();
    // Renormalize away accumulated rounding.
    let s: f64 = out.iter().sum();
    if s > 0.0 && (s - 1.0).abs() > 0.0 {
        let err = s - 1.0;
        let support = out.iter().filter(|v| **v > 0.0).count() as f64;
        for v in out.iter_mut().filter(|v| **v > 0.0) {
            *v = (*v - err / support).max(0.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand::Rng;

    #[test]
    fn membership_examples() {
        let s = FeasibleSet::simplex(2).unwrap();
        assert!(s.contains(&[0.5, 0.5], 0.0).unwrap());
        let r = FeasibleSet::restricted_simplex(3, 0.1).unwrap();
        assert!(!r.contains(&[0.05, 0.45, 0.5], MEMBERSHIP_TOL).unwrap());
        let b = FeasibleSet::boxed(vec![-10.0], vec![10.0]).unwrap();
        assert!(b.contains(&[10.0], 0.0).unwrap());
        assert!(b.contains(&[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let s = FeasibleSet::simplex(2).unwrap();
        assert_eq!(s.project(&[0.5, 0.5]).unwrap(), vec![0.5, 0.5]);
        let b = FeasibleSet::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        assert_eq!(b.project(&[2.0, -1.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn restricted_projection_of_unit_vector() {
        for (d, theta) in [(2usize, 0.1), (3, 0.05), (5, 0.2), (10, 0.01)] {
            let set = FeasibleSet::restricted_simplex(d, theta).unwrap();
            let mut e1 = vec![0.0; d];
            e1[0] = 1.0;
            let p = set.project(&e1).unwrap();
            let mut expected = vec![theta; d];
            expected[0] = 1.0 - theta * (d as f64 - 1.0);
            for (a, b) in p.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-12, "d={d} theta={theta}: {p:?}");
            }
            let l1 = crate::linalg::dist1(&p, &e1);
            assert!((l1 - 2.0 * theta * (d as f64 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_restricted_simplex_is_uniform_point() {
        let set = FeasibleSet::restricted_simplex(4, 0.25).unwrap();
        assert_eq!(set.project(&[3.0, -1.0, 0.0, 9.0]).unwrap(), vec![0.25; 4]);
        assert_eq!(set.diameter(), 0.0);
    }

    #[test]
    fn diameter_examples() {
        assert!((FeasibleSet::simplex(2).unwrap().diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            FeasibleSet::boxed(vec![-10.0], vec![10.0]).unwrap().diameter(),
            20.0
        );
        assert_eq!(
            FeasibleSet::restricted_simplex(2, 0.5).unwrap().diameter(),
            0.0
        );
        let r = FeasibleSet::restricted_simplex(4, 0.1).unwrap();
        assert!((r.diameter() - 2f64.sqrt() * 0.6).abs() < 1e-15);
        assert_eq!(
            FeasibleSet::interval_product(vec![3.0, 4.0]).unwrap().diameter(),
            5.0
        );
    }

    #[test]
    fn constructors_validate() {
        assert!(FeasibleSet::boxed(vec![1.0], vec![0.0]).is_err());
        assert!(FeasibleSet::restricted_simplex(3, 0.5).is_err());
        assert!(FeasibleSet::interval_product(vec![-1.0]).is_err());
        assert!(FeasibleSet::simplex(0).is_err());
    }

    #[test]
    fn simplex_projection_matches_grid_search() {
        // Brute force over a 1e-4 grid of the 2-dimensional face.
        let z = [0.9, 0.6, 0.1];
        let p = FeasibleSet::simplex(3).unwrap().project(&z).unwrap();
        let n = 10_000usize;
        let h = 1.0 / n as f64;
        let mut best = (f64::INFINITY, [0.0; 3]);
        for i in 0..=n {
            let a = i as f64 * h;
            for j in 0..=(n - i) {
                let b = j as f64 * h;
                let c = 1.0 - a - b;
                let dd = (a - z[0]).powi(2) + (b - z[1]).powi(2) + (c - z[2]).powi(2);
                if dd < best.0 {
                    best = (dd, [a, b, c]);
                }
            }
        }
        for k in 0..3 {
            assert!((p[k] - best.1[k]).abs() <= 2e-4, "{p:?} vs {:?}", best.1);
        }
    }

    #[test]
    fn projection_beats_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sets = [
            FeasibleSet::simplex(4).unwrap(),
            FeasibleSet::restricted_simplex(4, 0.1).unwrap(),
            FeasibleSet::cube(3, -1.0, 2.0).unwrap(),
            FeasibleSet::interval_product(vec![1.0, 0.5]).unwrap(),
        ];
        for set in &sets {
            for _ in 0..20 {
                let z: Vec<f64> = (0..set.dim()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let pz = set.project(&z).unwrap();
                let dz = crate::linalg::dist2(&pz, &z);
                for _ in 0..1000 {
                    let p = set.sample(&mut rng);
                    assert!(dz <= crate::linalg::dist2(&p, &z) + 1e-10);
                }
            }
        }
    }

    fn any_set() -> impl Strategy<Value = FeasibleSet> {
        prop_oneof![
            (1usize..6).prop_map(|d| FeasibleSet::simplex(d).unwrap()),
            (2usize..6, 0.0f64..1.0)
                .prop_map(|(d, f)| FeasibleSet::restricted_simplex(d, f / d as f64).unwrap()),
            prop::collection::vec((-5.0f64..0.0, 0.0f64..5.0), 1..5).prop_map(|b| {
                let (l, u): (Vec<f64>, Vec<f64>) = b.into_iter().unzip();
                FeasibleSet::boxed(l, u).unwrap()
            }),
            prop::collection::vec(0.0f64..5.0, 1..5)
                .prop_map(|u| FeasibleSet::interval_product(u).unwrap()),
        ]
    }

    fn set_and_two_points() -> impl Strategy<Value = (FeasibleSet, Vec<f64>, Vec<f64>)> {
        any_set().prop_flat_map(|s| {
            let d = s.dim();
            (
                Just(s),
                prop::collection::vec(-10.0f64..10.0, d),
                prop::collection::vec(-10.0f64..10.0, d),
            )
        })
    }

    proptest! {
        #[test]
        fn projection_is_feasible_idempotent_nonexpansive((set, z1, z2) in set_and_two_points()) {
            let p1 = set.project(&z1).unwrap();
            let p2 = set.project(&z2).unwrap();
            prop_assert!(set.contains(&p1, 1e-12).unwrap());
            let pp = set.project(&p1).unwrap();
            prop_assert!(crate::linalg::dist2(&pp, &p1) <= 1e-12);
            prop_assert!(
                crate::linalg::dist2(&p1, &p2) <= crate::linalg::dist2(&z1, &z2) + 1e-10
            );
        }

        #[test]
        fn embedding_round_trips(d in 2usize..8, f in 0.0f64..0.99, seed in any::<u64>()) {
            let set = FeasibleSet::restricted_simplex(d, f / d as f64).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = FeasibleSet::simplex(d).unwrap().sample(&mut rng);
            let back = set.unembed(&set.embed(&w).unwrap()).unwrap();
            for (a, b) in back.iter().zip(&w) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
