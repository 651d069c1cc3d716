use super::{AdmissibilityParams, AttackError, AttackSchedule, ScheduleEvent, NOMINAL};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleStyle {
    #[default]
    Random,
    /// Full-budget bursts with off-times sized for a duty cycle near `κ₂`.
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorOptions {
    pub style: ScheduleStyle,
    /// Mean of the exponential part of nominal dwell times (random style).
    pub mean_dwell: f64,
    /// Lower bound on every segment length.
    pub min_dwell: f64,
    /// Fraction of the attack-time bucket left unspent at the end of a burst.
    pub margin: f64,
    pub start_in_attack: bool,
    /// Probability of chaining into another attack mode (random style).
    pub attack_to_attack: f64,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            style: ScheduleStyle::Random,
            mean_dwell: 1.0,
            min_dwell: 0.05,
            margin: 0.05,
            start_in_attack: false,
            attack_to_attack: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Buckets {
    tau1: f64,
    tau2: f64,
}

struct Gen<'a> {
    p: &'a AdmissibilityParams,
    opts: &'a GeneratorOptions,
    horizon: f64,
}

impl Gen<'_> {
    fn refill(&self, b: Buckets, dt: f64) -> Buckets {
        Buckets {
            tau1: (b.tau1 + self.p.kappa1 * dt).min(self.p.n0f()),
            tau2: (b.tau2 + self.p.kappa2 * dt).min(self.p.t0),
        }
    }

    fn max_burst(&self, tau2: f64) -> f64 {
        tau2 * (1.0 - self.opts.margin) / (1.0 - self.p.kappa2)
    }

    /// Admissible burst lengths `[lo, hi]` for an attack starting now with the
    /// given buckets (switch cost already paid). `None` if no burst fits.
    fn burst_window(&self, t: f64, b: Buckets) -> Option<(f64, f64)> {
        let hi = self.max_burst(b.tau2);
        let need_refill = if b.tau1 >= 1.0 {
            0.0
        } else if self.p.kappa1 > 0.0 {
            (1.0 - b.tau1) / self.p.kappa1
        } else {
            f64::INFINITY
        };
        let lo = self.opts.min_dwell.max(need_refill);
        if lo <= hi {
            Some((lo, hi))
        } else if self.horizon - t <= hi {
            // burst may run to the horizon without a closing switch
            Some((self.horizon - t, hi))
        } else {
            None
        }
    }

    fn can_start(&self, t: f64, b: Buckets) -> bool {
        b.tau1 >= 1.0
            && self
                .burst_window(t, Buckets { tau1: b.tau1 - 1.0, tau2: b.tau2 })
                .is_some()
    }

    /// Smallest extra nominal wait after which an attack can start, if any.
    fn wait_until_startable(&self, t: f64, b: Buckets) -> Option<f64> {
        if self.can_start(t, b) {
            return Some(0.0);
        }
        let fill = |level: f64, cap: f64, rate: f64| {
            if level >= cap {
                0.0
            } else if rate > 0.0 {
                (cap - level) / rate
            } else {
                0.0
            }
        };
        let w_max = fill(b.tau1, self.p.n0f(), self.p.kappa1).max(fill(b.tau2, self.p.t0, self.p.kappa2));
        if !self.can_start(t + w_max, self.refill(b, w_max)) {
            return None;
        }
        let (mut lo, mut hi) = (0.0, w_max);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.can_start(t + mid, self.refill(b, mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

/// Draws a schedule from the token-bucket automaton with maximal refill.
/// Every emitted schedule satisfies both budget inequalities by construction.
pub fn generate_admissible(
    seed: u64,
    params: &AdmissibilityParams,
    attack_ids: &[String],
    horizon: f64,
    opts: &GeneratorOptions,
) -> Result<AttackSchedule, AttackError> {
    params.validate()?;
    if params.kappa1 == 0.0 && params.n0 < 1 {
        return Err(AttackError::InfeasibleParams);
    }
    if !(opts.margin > 0.0 && opts.margin < 1.0) || opts.min_dwell < 0.0 || opts.mean_dwell < 0.0 {
        return Err(AttackError::BadParams("generator options out of range".into()));
    }
    if horizon == 0.0 {
        return AttackSchedule::new(vec![], 0.0);
    }
    let g = Gen { p: params, opts, horizon };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = |mean: f64| Exp::new(1.0 / mean.max(1e-12)).expect("positive rate");
    let nominal_exp = exp(opts.mean_dwell);
    let attack_mean = opts.mean_dwell * params.kappa2.max(0.05) / (1.0 - params.kappa2);
    let attack_exp = exp(attack_mean);

    let mut events = Vec::new();
    let mut t = 0.0;
    let mut b = Buckets { tau1: params.n0f(), tau2: params.t0 };
    let mut rr = 0usize;
    let mut pick_attack = |rng: &mut ChaCha8Rng, exclude: Option<&str>| -> String {
        let pool: Vec<&String> = attack_ids.iter().filter(|a| Some(a.as_str()) != exclude).collect();
        match opts.style {
            ScheduleStyle::Random => (*pool.choose(rng).expect("non-empty pool")).clone(),
            ScheduleStyle::Periodic => {
                rr += 1;
                pool[(rr - 1) % pool.len()].clone()
            }
        }
    };

    let mut attacking = if opts.start_in_attack && !attack_ids.is_empty() && g.burst_window(0.0, b).is_some() {
        Some(pick_attack(&mut rng, None))
    } else {
        None
    };
    events.push(ScheduleEvent {
        time: 0.0,
        mode: attacking.clone().unwrap_or_else(|| NOMINAL.to_string()),
    });
    if attack_ids.is_empty() {
        return AttackSchedule::new(events, horizon);
    }

    loop {
        match attacking.take() {
            Some(mode) => {
                let (lo, hi) = g.burst_window(t, b).expect("bursts start only when a window exists");
                let desired = match opts.style {
                    ScheduleStyle::Random => opts.min_dwell + attack_exp.sample(&mut rng),
                    ScheduleStyle::Periodic => hi,
                };
                let d = desired.min(hi).max(lo);
                if t + d >= horizon {
                    break;
                }
                t += d;
                b.tau2 = (b.tau2 - (1.0 - params.kappa2) * d).max(0.0);
                b.tau1 = (b.tau1 + params.kappa1 * d).min(params.n0f());
                let chain = opts.style == ScheduleStyle::Random
                    && attack_ids.len() > 1
                    && rng.gen_bool(opts.attack_to_attack.clamp(0.0, 1.0))
                    && b.tau1 >= 1.0
                    && g.burst_window(t, Buckets { tau1: b.tau1 - 1.0, tau2: b.tau2 }).is_some_and(|(lo, _)| t + lo < horizon);
                b.tau1 = (b.tau1 - 1.0).max(0.0);
                if chain {
                    let next = pick_attack(&mut rng, Some(&mode));
                    events.push(ScheduleEvent { time: t, mode: next.clone() });
                    attacking = Some(next);
                } else {
                    events.push(ScheduleEvent { time: t, mode: NOMINAL.to_string() });
                }
            }
            None => {
                let desired = match opts.style {
                    ScheduleStyle::Random => opts.min_dwell + nominal_exp.sample(&mut rng),
                    ScheduleStyle::Periodic if params.kappa2 > 0.0 => {
                        (g.max_burst(params.t0) * (1.0 - params.kappa2) / params.kappa2).max(opts.min_dwell)
                    }
                    ScheduleStyle::Periodic => horizon,
                };
                let Some(extra) = g.wait_until_startable(t + desired, g.refill(b, desired)) else {
                    break;
                };
                // same composition as the feasibility probe, so rounding agrees
                let t_next = (t + desired) + extra;
                if t_next >= horizon {
                    break;
                }
                t = t_next;
                b = g.refill(g.refill(b, desired), extra);
                b.tau1 -= 1.0;
                let mode = pick_attack(&mut rng, None);
                events.push(ScheduleEvent { time: t, mode: mode.clone() });
                attacking = Some(mode);
            }
        }
    }
    AttackSchedule::new(events, horizon)
}
