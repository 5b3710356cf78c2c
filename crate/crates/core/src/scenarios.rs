//! Payoff sequence generators for every experiment: the two impossibility
//! scenarios, the two switching quadratic instances, random i.i.d. and
//! adversarial quadratic suites, random bilinear games and the knapsack instance.
//!
//! Sequences are produced lazily, one round at a time, from a seeded stream.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::FeasibleSet;
use crate::knapsack::{KnapsackDraw, KnapsackInstance};
use crate::linalg::Matrix;
use crate::payoffs::{
    make_bilinear, make_quadratic_bilinear, Norm, PayoffFunction, StructuredPayoff, Terms,
};

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    /// Matching pennies for `t <= T/2`, then the zero matrix.
    Theorem6Scenario1,
    /// Matching pennies for `t <= T/2`, then `[[1,-1],[1,-1]]`.
    Theorem6Scenario2,
    /// Quadratic-bilinear on `[-10, 10]`, centers `(2,-1)` then `(-1,-2)`.
    Sec8Instance1,
    /// Quadratic-bilinear on `[-10, 10]`, centers `(2,-1)` then `(-1,3)`.
    Sec8Instance2,
    /// `a x y + (h/2)(x-p)^2 - (h/2)(y-q)^2` on `[-r, r]` with
    /// `a ~ U[-1,1]`, `p, q ~ U[-r, r]` drawn each round.
    IidQuadratic { h: f64, radius: f64 },
    /// Deterministic strongly convex-concave sequences with fixed switching
    /// patterns (0..=4) on `[-r, r]`.
    AdversarialQuadratic { h: f64, radius: f64, pattern: u8 },
    /// `a x y + u x - v y` on `[-r, r]` with `a, u, v ~ U[-1,1]`.
    IidBilinearBox { radius: f64 },
    /// `d1 x d2` matrices with i.i.d. uniform `+-1` entries.
    RandomBilinear { d1: usize, d2: usize },
    /// The knapsack instance with budgets `b = (b1 T, b2 T)`.
    OcowkSec8 { budget_rates: (f64, f64) },
}

impl ScenarioKind {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Theorem6Scenario1 => "theorem6_scenario1",
            Self::Theorem6Scenario2 => "theorem6_scenario2",
            Self::Sec8Instance1 => "sec8_instance1",
            Self::Sec8Instance2 => "sec8_instance2",
            Self::IidQuadratic { .. } => "iid_quadratic",
            Self::AdversarialQuadratic { .. } => "adversarial_quadratic",
            Self::IidBilinearBox { .. } => "iid_bilinear_box",
            Self::RandomBilinear { .. } => "random_bilinear",
            Self::OcowkSec8 { .. } => "ocowk_sec8",
        }
    }

    pub fn is_matrix_game(&self) -> bool {
        matches!(
            self,
            Self::Theorem6Scenario1 | Self::Theorem6Scenario2 | Self::RandomBilinear { .. }
        )
    }

    pub fn is_knapsack(&self) -> bool {
        matches!(self, Self::OcowkSec8 { .. })
    }

    /// Dimensions `(d1, d2)` of the players' actions.
    pub fn dims(&self) -> (usize, usize) {
        match self {
            Self::Theorem6Scenario1 | Self::Theorem6Scenario2 => (2, 2),
            Self::RandomBilinear { d1, d2 } => (*d1, *d2),
            Self::OcowkSec8 { .. } => (1, 2),
            _ => (1, 1),
        }
    }
}

/// Names of the built-in generators, for listings.
pub const SCENARIO_IDS: [&str; 9] = [
    "theorem6_scenario1",
    "theorem6_scenario2",
    "sec8_instance1",
    "sec8_instance2",
    "iid_quadratic",
    "adversarial_quadratic",
    "iid_bilinear_box",
    "random_bilinear",
    "ocowk_sec8",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub horizon: usize,
    pub seed: u64,
}

/// One generated round.
#[derive(Clone)]
pub struct Round {
    pub payoff: PayoffFunction,
    /// Payoff matrix for matrix-game scenarios.
    pub matrix: Option<Matrix>,
    /// Realized reward/consumption functions for knapsack scenarios.
    pub knapsack: Option<KnapsackDraw>,
}

impl fmt::Debug for Round {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Round")
            .field("matrix", &self.matrix)
            .field("knapsack", &self.knapsack)
            .finish()
    }
}

const SEC8_BOX: (f64, f64) = (-10.0, 10.0);

pub fn matching_pennies() -> Matrix {
    Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]])
}

pub fn scenario2_tail() -> Matrix {
    Matrix::from_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]])
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, horizon: usize, seed: u64) -> Result<Self> {
        let spec = Self { kind, horizon, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be >= 1".into()));
        }
        match &self.kind {
            ScenarioKind::Theorem6Scenario1 | ScenarioKind::Theorem6Scenario2 => {
                if !self.horizon.is_multiple_of(2) {
                    return Err(Error::InvalidParameter(
                        "impossibility scenarios need an even horizon".into(),
                    ));
                }
            }
            ScenarioKind::IidQuadratic { h, radius }
            | ScenarioKind::AdversarialQuadratic { h, radius, .. } => {
                if !(*h > 0.0 && *radius > 0.0) {
                    return Err(Error::InvalidParameter("h and radius must be positive".into()));
                }
            }
            ScenarioKind::IidBilinearBox { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter("radius must be positive".into()));
                }
            }
            ScenarioKind::RandomBilinear { d1, d2 } => {
                if *d1 == 0 || *d2 == 0 {
                    return Err(Error::InvalidParameter("empty game".into()));
                }
            }
            ScenarioKind::OcowkSec8 { budget_rates } => {
                if !(budget_rates.0 > 0.0 && budget_rates.1 > 0.0) {
                    return Err(Error::InvalidParameter("budget rates must be positive".into()));
                }
            }
            ScenarioKind::Sec8Instance1 | ScenarioKind::Sec8Instance2 => {}
        }
        Ok(())
    }

    /// Feasible sets over which regret is measured.
    pub fn sets(&self) -> Result<(FeasibleSet, FeasibleSet)> {
        Ok(match &self.kind {
            ScenarioKind::Theorem6Scenario1 | ScenarioKind::Theorem6Scenario2 => {
                (FeasibleSet::simplex(2)?, FeasibleSet::simplex(2)?)
            }
            ScenarioKind::RandomBilinear { d1, d2 } => {
                (FeasibleSet::simplex(*d1)?, FeasibleSet::simplex(*d2)?)
            }
            ScenarioKind::Sec8Instance1 | ScenarioKind::Sec8Instance2 => (
                FeasibleSet::cube(1, SEC8_BOX.0, SEC8_BOX.1)?,
                FeasibleSet::cube(1, SEC8_BOX.0, SEC8_BOX.1)?,
            ),
            ScenarioKind::IidQuadratic { radius, .. }
            | ScenarioKind::AdversarialQuadratic { radius, .. }
            | ScenarioKind::IidBilinearBox { radius } => (
                FeasibleSet::cube(1, -radius, *radius)?,
                FeasibleSet::cube(1, -radius, *radius)?,
            ),
            ScenarioKind::OcowkSec8 { .. } => {
                let inst = self.knapsack_instance()?;
                (inst.x_set.clone(), inst.y_set()?)
            }
        })
    }

    /// Strong convexity-concavity modulus shared by every round (0 if none).
    pub fn strong_h(&self) -> f64 {
        match &self.kind {
            ScenarioKind::Sec8Instance1 | ScenarioKind::Sec8Instance2 => 1.0,
            ScenarioKind::IidQuadratic { h, .. } | ScenarioKind::AdversarialQuadratic { h, .. } => *h,
            _ => 0.0,
        }
    }

    /// Uniform Lipschitz bound over every payoff the generator can emit.
    pub fn lipschitz_bound(&self) -> Result<f64> {
        Ok(match &self.kind {
            ScenarioKind::Theorem6Scenario1 | ScenarioKind::Theorem6Scenario2 => {
                crate::payoffs::BilinearPayoff::lipschitz_for(1.0, 2, 2, Norm::L2)
            }
            ScenarioKind::RandomBilinear { d1, d2 } => {
                crate::payoffs::BilinearPayoff::lipschitz_for(1.0, *d1, *d2, Norm::L2)
            }
            ScenarioKind::Sec8Instance1 | ScenarioKind::Sec8Instance2 => {
                let mut g: f64 = 0.0;
                for (p, q) in [(2.0, -1.0), (-1.0, -2.0), (-1.0, 3.0)] {
                    let f = make_quadratic_bilinear(1.0, 1.0, p, q, SEC8_BOX, SEC8_BOX)?;
                    g = g.max(f.lipschitz());
                }
                g
            }
            ScenarioKind::IidQuadratic { h, radius } | ScenarioKind::AdversarialQuadratic { h, radius, .. } => {
                // |a y + h(x - p)| <= r + 2 h r, same for the y-gradient.
                let r = *radius;
                std::f64::consts::SQRT_2 * (r + 2.0 * h * r)
            }
            ScenarioKind::IidBilinearBox { radius } => std::f64::consts::SQRT_2 * (radius + 1.0),
            ScenarioKind::OcowkSec8 { .. } => self.knapsack_instance()?.lagrangian_lipschitz()?,
        })
    }

    pub fn knapsack_instance(&self) -> Result<KnapsackInstance> {
        match &self.kind {
            ScenarioKind::OcowkSec8 { budget_rates } => {
                KnapsackInstance::sec8(self.horizon, *budget_rates)
            }
            _ => Err(Error::IncompatiblePairing(format!(
                "{} is not a knapsack scenario",
                self.kind.id()
            ))),
        }
    }

    pub fn stream(&self) -> Result<ScenarioStream> {
        self.validate()?;
        let knapsack = if self.kind.is_knapsack() {
            Some(self.knapsack_instance()?)
        } else {
            None
        };
        Ok(ScenarioStream {
            spec: self.clone(),
            rng: ChaCha8Rng::seed_from_u64(self.seed),
            t: 0,
            knapsack,
        })
    }
}

/// Lazy round-by-round generator.
pub struct ScenarioStream {
    spec: ScenarioSpec,
    rng: ChaCha8Rng,
    t: usize,
    knapsack: Option<KnapsackInstance>,
}

impl ScenarioStream {
    pub fn round(&self) -> usize {
        self.t
    }

    pub fn next_round(&mut self) -> Result<Option<Round>> {
        if self.t >= self.spec.horizon {
            return Ok(None);
        }
        self.t += 1;
        let t = self.t;
        let big_t = self.spec.horizon;
        let matrix_round = |m: Matrix| -> Result<Round> {
            Ok(Round {
                payoff: make_bilinear(m.clone(), Norm::L2)?,
                matrix: Some(m),
                knapsack: None,
            })
        };
        let quad = |a: f64, h: f64, p: f64, q: f64, r: f64| -> Result<Round> {
            Ok(Round {
                payoff: make_quadratic_bilinear(a, h, p, q, (-r, r), (-r, r))?,
                matrix: None,
                knapsack: None,
            })
        };
        let round = match &self.spec.kind {
            ScenarioKind::Theorem6Scenario1 => matrix_round(if t <= big_t / 2 {
                matching_pennies()
            } else {
                Matrix::zeros(2, 2)
            })?,
            ScenarioKind::Theorem6Scenario2 => matrix_round(if t <= big_t / 2 {
                matching_pennies()
            } else {
                scenario2_tail()
            })?,
            ScenarioKind::Sec8Instance1 | ScenarioKind::Sec8Instance2 => {
                let (p, q) = if t <= big_t / 3 {
                    (2.0, -1.0)
                } else if self.spec.kind == ScenarioKind::Sec8Instance1 {
                    (-1.0, -2.0)
                } else {
                    (-1.0, 3.0)
                };
                Round {
                    payoff: make_quadratic_bilinear(1.0, 1.0, p, q, SEC8_BOX, SEC8_BOX)?,
                    matrix: None,
                    knapsack: None,
                }
            }
            ScenarioKind::IidQuadratic { h, radius } => {
                let r = *radius;
                let a = self.rng.gen_range(-1.0..=1.0);
                let p = self.rng.gen_range(-r..=r);
                let q = self.rng.gen_range(-r..=r);
                quad(a, *h, p, q, r)?
            }
            ScenarioKind::AdversarialQuadratic { h, radius, pattern } => {
                let r = *radius;
                let (a, p, q) = adversarial_params(*pattern, t, big_t, r);
                quad(a, *h, p, q, r)?
            }
            ScenarioKind::IidBilinearBox { radius } => {
                let r = *radius;
                let a: f64 = self.rng.gen_range(-1.0..=1.0);
                let u: f64 = self.rng.gen_range(-1.0..=1.0);
                let v: f64 = self.rng.gen_range(-1.0..=1.0);
                let mut terms = Terms::zeros(1, 1);
                terms.bilinear = Some(Matrix::from_vec(1, 1, vec![a]));
                terms.quad_x.b[0] = u;
                terms.quad_y.b[0] = v;
                let g = ((a.abs() * r + u.abs()).powi(2) + (a.abs() * r + v.abs()).powi(2)).sqrt();
                Round {
                    payoff: Arc::new(StructuredPayoff {
                        label: "iid_bilinear_box",
                        terms,
                        lipschitz: g,
                        strong_h: 0.0,
                        norm: Norm::L2,
                    }),
                    matrix: None,
                    knapsack: None,
                }
            }
            ScenarioKind::RandomBilinear { d1, d2 } => {
                let data = (0..d1 * d2)
                    .map(|_| if self.rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect();
                matrix_round(Matrix::from_vec(*d1, *d2, data))?
            }
            ScenarioKind::OcowkSec8 { .. } => {
                let inst = self.knapsack.as_ref().expect("built in stream()");
                let draw = inst.draw(&mut self.rng);
                Round {
                    payoff: inst.lagrangian(&draw)?,
                    matrix: None,
                    knapsack: Some(draw),
                }
            }
        };
        Ok(Some(round))
    }
}

/// `(a, p, q)` for the adversarial quadratic patterns.
fn adversarial_params(pattern: u8, t: usize, big_t: usize, r: f64) -> (f64, f64, f64) {
    match pattern % 5 {
        // Extreme centers alternating every round.
        0 => {
            let s = if t.is_multiple_of(2) { 1.0 } else { -1.0 };
            (1.0, s * r, -s * r)
        }
        // Switch at T/3 then again at 2T/3.
        1 => {
            if 3 * t <= big_t {
                (1.0, r, -0.5 * r)
            } else if 3 * t <= 2 * big_t {
                (-1.0, -0.5 * r, -r)
            } else {
                (1.0, -r, r)
            }
        }
        // Coupling sign flips every round, centers fixed at a corner.
        2 => {
            let s = if t.is_multiple_of(2) { 1.0 } else { -1.0 };
            (s, r, r)
        }
        // Centers rotating on a circle.
        3 => {
            let phi = t as f64 * 0.05;
            (1.0, r * phi.cos(), r * phi.sin())
        }
        // Blocks of doubling length with opposite centers.
        _ => {
            let block = (usize::BITS - t.leading_zeros()) as usize;
            let s = if block.is_multiple_of(2) { 1.0 } else { -1.0 };
            (-s, s * r, s * r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(spec: &ScenarioSpec) -> Vec<Round> {
        let mut s = spec.stream().unwrap();
        let mut out = Vec::new();
        while let Some(r) = s.next_round().unwrap() {
            out.push(r);
        }
        out
    }

    #[test]
    fn scenario1_switches_to_zero_matrix() {
        let spec = ScenarioSpec::new(ScenarioKind::Theorem6Scenario1, 10, 0).unwrap();
        let rounds = collect(&spec);
        assert_eq!(rounds[4].matrix.as_ref().unwrap(), &matching_pennies());
        assert_eq!(rounds[5].matrix.as_ref().unwrap(), &Matrix::zeros(2, 2));
        let spec2 = ScenarioSpec::new(ScenarioKind::Theorem6Scenario2, 10, 0).unwrap();
        assert_eq!(collect(&spec2)[9].matrix.as_ref().unwrap(), &scenario2_tail());
    }

    #[test]
    fn odd_horizon_is_rejected() {
        assert!(ScenarioSpec::new(ScenarioKind::Theorem6Scenario1, 11, 0).is_err());
    }

    #[test]
    fn sec8_prefix_parameters() {
        let spec = ScenarioSpec::new(ScenarioKind::Sec8Instance1, 9, 0).unwrap();
        let rounds = collect(&spec);
        let f = &rounds[2].payoff;
        // a x y + (x-2)^2/2 - (y+1)^2/2 at (2, -1) is -2.
        assert!((f.value(&[2.0], &[-1.0]) + 2.0).abs() < 1e-15);
        let g = &rounds[3].payoff;
        assert!((g.value(&[-1.0], &[-2.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn streams_replay_identically() {
        let spec = ScenarioSpec::new(
            ScenarioKind::OcowkSec8 { budget_rates: (200.0, 4.0) },
            50,
            17,
        )
        .unwrap();
        let a: Vec<_> = collect(&spec).into_iter().map(|r| r.knapsack.unwrap()).collect();
        let b: Vec<_> = collect(&spec).into_iter().map(|r| r.knapsack.unwrap()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn lipschitz_bounds_cover_generated_payoffs() {
        let kinds = [
            ScenarioKind::IidQuadratic { h: 1.0, radius: 1.0 },
            ScenarioKind::AdversarialQuadratic { h: 1.0, radius: 1.0, pattern: 3 },
            ScenarioKind::IidBilinearBox { radius: 1.0 },
            ScenarioKind::Sec8Instance2,
        ];
        for kind in kinds {
            let spec = ScenarioSpec::new(kind, 200, 1).unwrap();
            let g = spec.lipschitz_bound().unwrap();
            for r in collect(&spec) {
                assert!(r.payoff.lipschitz() <= g + 1e-12);
            }
        }
    }
}
